// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Calls alpha_noop() N times. Expected row: (this binary, alpha_noop) = N.

#include <stdio.h>
#include <stdlib.h>

#include "alpha.h"
#include "oracle.h"

int main(int argc, char** argv) {
  unsigned long n = argc > 1 ? strtoul(argv[1], 0, 10) : 1000;
  unsigned long sum = 0;
  for (unsigned long i = 0; i < n; ++i) {
    oracle_enter("app", "alpha_noop");
    sum += alpha_noop();
    oracle_exit("app", "alpha_noop");
  }
  printf("sum=%lu\n", sum);
  return sum == n ? 0 : 1;
}
