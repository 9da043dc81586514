// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Ends the process from inside an intercepted call. Expected: exit status
// CODE, alpha_noop count 7, alpha_noret count 1 (counted on entry; it
// never returns).

#include <stdio.h>
#include <stdlib.h>

#include "alpha.h"

int main(int argc, char** argv) {
  int code = argc > 1 ? atoi(argv[1]) : 42;
  unsigned long sum = 0;
  for (int i = 0; i < 7; ++i) sum += alpha_noop();
  printf("before sum=%lu\n", sum);
  fflush(stdout);
  alpha_noret(code);
}
