// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Tail-jump chain: each iteration is
//   call beta_tail@PLT -> jmp alpha_tail2@PLT -> jmp alpha_tail3@PLT
// so one physical return serves three intercepted calls. Expected rows:
//   (this binary, beta_tail)   = N
//   (libbeta,     alpha_tail2) = N
//   (libalpha,    alpha_tail3) = N
// Value check: one round of f(x) = 3*(x+3)+7 per iteration.

#include <stdio.h>
#include <stdlib.h>

#include "beta.h"

int main(int argc, char** argv) {
  unsigned long n = argc > 1 ? strtoul(argv[1], 0, 10) : 100;
  unsigned long x = argc > 2 ? strtoul(argv[2], 0, 10) : 1;
  unsigned long expect = x;
  for (unsigned long i = 0; i < n; ++i) expect = 3 * (expect + 3) + 7;
  for (unsigned long i = 0; i < n; ++i) x = beta_tail(x);
  printf("x=%lu expect=%lu\n", x, expect);
  return x == expect ? 0 : 1;
}
