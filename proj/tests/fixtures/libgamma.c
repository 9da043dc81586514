// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Fixture library "gamma": only ever loaded with dlopen. Depends on alpha,
// so loading it must hook the dependency too.

#include "alpha.h"
#include "oracle.h"

unsigned long gamma_probe(unsigned long n) {
  unsigned long sum = 0;
  for (unsigned long i = 0; i < n; ++i) {
    oracle_enter("libgamma", "alpha_noop");
    sum += alpha_noop();
    oracle_exit("libgamma", "alpha_noop");
  }
  return sum;
}
