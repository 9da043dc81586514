// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force event oracle for the fixtures: every wrapped call appends an
// enter line and an exit line to the file named by XFLOW_ORACLE_FILE when
// XFLOW_ORACLE=1. Deliberately the dumbest possible implementation, and a
// completely separate code path from the profiler it checks.
//
// Line format: E|X <pid> <tid> <caller> <symbol> <tsc>   (tab separated)
#ifndef XFLOW_FIXTURE_ORACLE_H
#define XFLOW_FIXTURE_ORACLE_H

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/syscall.h>
#include <unistd.h>
#include <x86intrin.h>

__attribute__((unused)) static FILE* oracle_stream(void) {
  static FILE* f;
  static int tried;
  if (!tried) {
    tried = 1;
    const char* on = getenv("XFLOW_ORACLE");
    const char* path = getenv("XFLOW_ORACLE_FILE");
    if (on && strcmp(on, "1") == 0 && path && *path) f = fopen(path, "a");
  }
  return f;
}

__attribute__((unused)) static void oracle_mark(char tag, const char* caller,
                                                const char* sym,
                                                unsigned long long tsc) {
  FILE* f = oracle_stream();
  if (!f) return;
  flockfile(f);
  fprintf(f, "%c\t%ld\t%ld\t%s\t%s\t%llu\n", tag, (long)getpid(),
          (long)syscall(SYS_gettid), caller, sym, tsc);
  funlockfile(f);
}

static inline void oracle_enter(const char* caller, const char* sym) {
  oracle_mark('E', caller, sym, __rdtsc());
}

static inline void oracle_exit(const char* caller, const char* sym) {
  oracle_mark('X', caller, sym, __rdtsc());
}

#endif
