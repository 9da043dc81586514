// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Runtime-loading paths. Not linked against the fixture libraries at all:
// every edge below goes through dlopen/dlsym.
//
//   fx_dl LIBGAMMA J L
//
// does, in order:
//   1. dlopen("no/such/lib.so")           -> must fail, error readable
//   2. dlopen(LIBGAMMA, RTLD_LAZY)        -> pulls in libalpha as a dep
//   3. dlsym(gamma_probe) twice           -> same pointer both times
//   4. gamma_probe(J)                     -> J calls of alpha_noop by gamma
//   5. dlsym(h, "alpha_noop")             -> found via the dependency,
//                                            called L times by this binary
//
// Expected rows: (fx_dl, gamma_probe dlsym) = 1, (libgamma, alpha_noop) = J,
// (fx_dl, alpha_noop dlsym) = L.

#define _GNU_SOURCE
#include <dlfcn.h>
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: fx_dl LIBGAMMA [J] [L]\n");
    return 2;
  }
  unsigned long j = argc > 2 ? strtoul(argv[2], 0, 10) : 100;
  unsigned long l = argc > 3 ? strtoul(argv[3], 0, 10) : 50;

  void* bad = dlopen("no/such/lib.so", RTLD_NOW);
  if (bad != 0 || dlerror() == 0) {
    printf("missing-lib check failed\n");
    return 1;
  }

  void* h = dlopen(argv[1], RTLD_LAZY);
  if (!h) {
    fprintf(stderr, "dlopen %s: %s\n", argv[1], dlerror());
    return 1;
  }

  typedef unsigned long (*probe_fn)(unsigned long);
  probe_fn probe1 = (probe_fn)dlsym(h, "gamma_probe");
  probe_fn probe2 = (probe_fn)dlsym(h, "gamma_probe");
  if (!probe1 || probe1 != probe2) {
    printf("dlsym stability check failed\n");
    return 1;
  }

  unsigned long got = probe1(j);

  typedef unsigned long (*noop_fn)(void);
  noop_fn noop = (noop_fn)dlsym(h, "alpha_noop");
  if (!noop) {
    fprintf(stderr, "dlsym alpha_noop: %s\n", dlerror());
    return 1;
  }
  unsigned long sum = 0;
  for (unsigned long i = 0; i < l; ++i) sum += noop();

  printf("got=%lu sum=%lu same=%d\n", got, sum, probe1 == probe2);
  return (got == j && sum == l) ? 0 : 1;
}
