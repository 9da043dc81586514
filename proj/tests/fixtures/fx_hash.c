// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Transparency probe: pushes 8 integer-class and 8 vector-class arguments
// through an intercepted call N times and prints an order-sensitive digest.
// The output must be byte-identical with and without the profiler.

#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "alpha.h"

int main(int argc, char** argv) {
  unsigned long n = argc > 1 ? strtoul(argv[1], 0, 10) : 10000;
  uint64_t s = argc > 2 ? strtoull(argv[2], 0, 10) : 0x9e3779b97f4a7c15ull;
  uint64_t digest = 1469598103934665603ull;
  double acc = 0;

  for (unsigned long i = 0; i < n; ++i) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    long base = (long)(s >> 17);
    double d = (double)(s >> 40);
    double r = alpha_mix(base, base + 1, base + 2, base + 3, base + 4,
                         base + 5, base + 6, base + 7, d, d + 0.25, d + 0.5,
                         d + 0.75, d + 1.0, d + 1.25, d + 1.5, d + 1.75);
    acc += r;
    uint64_t bits;
    memcpy(&bits, &r, sizeof bits);
    digest = (digest ^ bits) * 1099511628211ull;
  }

  printf("digest=%016llx\n", (unsigned long long)digest);
  printf("acc=%a\n", acc);
  return 0;
}
