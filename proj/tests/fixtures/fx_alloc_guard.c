// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Counts every allocator call in the process (the executable's malloc
// family shadows libc's for all images), then drives N intercepted no-op
// calls and prints how many allocations happened inside the window.
// Expected: 0. The profiler's per-call path may not allocate.

#include <stddef.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "alpha.h"

extern void* __libc_malloc(size_t);
extern void __libc_free(void*);
extern void* __libc_calloc(size_t, size_t);
extern void* __libc_realloc(void*, size_t);

static volatile unsigned long alloc_calls;

void* malloc(size_t n) {
  ++alloc_calls;
  return __libc_malloc(n);
}

void free(void* p) {
  ++alloc_calls;
  __libc_free(p);
}

void* calloc(size_t n, size_t sz) {
  ++alloc_calls;
  return __libc_calloc(n, sz);
}

void* realloc(void* p, size_t n) {
  ++alloc_calls;
  return __libc_realloc(p, n);
}

int main(int argc, char** argv) {
  unsigned long n = argc > 1 ? strtoul(argv[1], 0, 10) : 1000000;

  // Warm the site (first call may resolve lazily) before the window.
  unsigned long sum = alpha_noop();

  unsigned long before = alloc_calls;
  for (unsigned long i = 0; i < n; ++i) sum += alpha_noop();
  unsigned long inside = alloc_calls - before;

  printf("allocs=%lu sum=%lu\n", inside, sum);
  return inside == 0 && sum == n + 1 ? 0 : 1;
}
