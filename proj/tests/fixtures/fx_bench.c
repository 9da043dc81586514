// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Per-call cost probe: times alpha_noop() in batches and prints the median
// batch cost in nanoseconds per call. Run it bare and preloaded; the
// difference is the interception cost.

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>
#include <x86intrin.h>

#include "alpha.h"

#define BATCH 1000

static int cmp_d(const void* a, const void* b) {
  double x = *(const double*)a, y = *(const double*)b;
  return x < y ? -1 : x > y;
}

static double tsc_hz(void) {
  struct timespec t0, t1;
  unsigned long long c0, c1;
  clock_gettime(CLOCK_MONOTONIC, &t0);
  c0 = __rdtsc();
  struct timespec req = {0, 50 * 1000 * 1000};
  nanosleep(&req, 0);
  c1 = __rdtsc();
  clock_gettime(CLOCK_MONOTONIC, &t1);
  double sec = (double)(t1.tv_sec - t0.tv_sec) +
               (double)(t1.tv_nsec - t0.tv_nsec) / 1e9;
  return (double)(c1 - c0) / sec;
}

int main(int argc, char** argv) {
  unsigned long total = argc > 1 ? strtoul(argv[1], 0, 10) : 10000000;
  unsigned long batches = total / BATCH;
  if (batches < 3) batches = 3;

  double* per_call = malloc(batches * sizeof *per_call);
  unsigned long sum = 0;

  // Warmup: resolve the site, fault in everything.
  for (int i = 0; i < BATCH; ++i) sum += alpha_noop();

  for (unsigned long b = 0; b < batches; ++b) {
    unsigned long long t0 = __rdtsc();
    for (int i = 0; i < BATCH; ++i) sum += alpha_noop();
    unsigned long long t1 = __rdtsc();
    per_call[b] = (double)(t1 - t0) / BATCH;
  }

  qsort(per_call, batches, sizeof *per_call, cmp_d);
  double median_cycles = per_call[batches / 2];
  double ns = median_cycles / tsc_hz() * 1e9;

  printf("median_ns_per_call=%.3f calls=%lu sum=%lu\n", ns,
         batches * (unsigned long)BATCH, sum);
  free(per_call);
  return 0;
}
