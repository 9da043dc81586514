// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Long-running fixture for mid-run snapshot tests. Writes its pid to a
// file so the harness can signal it, then calls alpha_busy_us in a loop
// for roughly MS milliseconds total.

#include <stdio.h>
#include <stdlib.h>
#include <unistd.h>

#include "alpha.h"

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: fx_signal PIDFILE [MS]\n");
    return 2;
  }
  unsigned long ms = argc > 2 ? strtoul(argv[2], 0, 10) : 2000;

  FILE* f = fopen(argv[1], "w");
  if (!f) return 2;
  fprintf(f, "%ld\n", (long)getpid());
  fclose(f);

  for (unsigned long i = 0; i < ms; ++i) alpha_busy_us(1000);

  printf("signal fixture done ms=%lu\n", ms);
  return 0;
}
