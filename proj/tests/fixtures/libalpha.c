// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "alpha.h"

#include <stdlib.h>
#include <time.h>

unsigned long alpha_datum = 42;

unsigned long alpha_noop(void) { return 1; }

unsigned long alpha_value(unsigned long x) { return x * 2654435761ul + 13; }

void alpha_busy_us(unsigned long us) {
  struct timespec t0, t;
  clock_gettime(CLOCK_MONOTONIC, &t0);
  const long long limit = (long long)us * 1000;
  for (;;) {
    clock_gettime(CLOCK_MONOTONIC, &t);
    long long el = (t.tv_sec - t0.tv_sec) * 1000000000ll +
                   (t.tv_nsec - t0.tv_nsec);
    if (el >= limit) return;
  }
}

double alpha_mix(long a, long b, long c, long d, long e, long f, long g,
                 long h, double x0, double x1, double x2, double x3,
                 double x4, double x5, double x6, double x7) {
  // Every argument feeds the result; any clobbered register changes it.
  long ints = a * 3 + b * 5 + c * 7 + d * 11 + e * 13 + f * 17 + g * 19 +
              h * 23;
  double vecs = x0 + x1 * 2 + x2 * 3 + x3 * 4 + x4 * 5 + x5 * 6 + x6 * 7 +
                x7 * 8;
  return (double)ints + vecs * 1.5;
}

void alpha_invoke(void (*fn)(void*), void* arg) { fn(arg); }

void alpha_noret(int code) { exit(code); }

unsigned long alpha_tail3(unsigned long x) { return x * 3 + 7; }

// alpha_tail2 hands off to alpha_tail3 with a tail jump through the PLT.
// Top-level asm inside the C file (instead of a .S file) keeps the
// compiler's CET property note on the object, so linking it does not
// silently downgrade the library to classic PLT slots.
__asm__(
    "\t.text\n"
    "\t.globl alpha_tail2\n"
    "\t.type alpha_tail2, @function\n"
    "alpha_tail2:\n"
    "\tendbr64\n"
    "\taddq $1, %rdi\n"
    "\tjmp alpha_tail3@PLT\n"
    "\t.size alpha_tail2, .-alpha_tail2\n");
