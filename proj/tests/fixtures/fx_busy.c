// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Calls alpha_busy_us(US) N times. The duration is known, so ledgers can
// be checked for timing accuracy, not just counts.

#include <stdio.h>
#include <stdlib.h>

#include "alpha.h"
#include "oracle.h"

int main(int argc, char** argv) {
  unsigned long n = argc > 1 ? strtoul(argv[1], 0, 10) : 100;
  unsigned long us = argc > 2 ? strtoul(argv[2], 0, 10) : 1000;
  for (unsigned long i = 0; i < n; ++i) {
    oracle_enter("app", "alpha_busy_us");
    alpha_busy_us(us);
    oracle_exit("app", "alpha_busy_us");
  }
  printf("done n=%lu us=%lu\n", n, us);
  return 0;
}
