// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Thread plans with closed-form expectations.
//
//   serial N US        main alone: N calls of alpha_busy_us(US)
//   parallel T N US    T workers of one routine, start-aligned by a
//                      barrier, N calls of alpha_busy_us(US) each
//   imbalanced C K     2 workers busy 16*K us per call, 2 workers busy
//                      K us per call, C calls each (two thread groups)
//   balanced C K       same but both groups busy K us per call
//   abnormal N         one worker leaves through pthread_exit from inside
//                      an intercepted call, one returns normally; both
//                      call alpha_noop N times first

#include <pthread.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "alpha.h"
#include "oracle.h"

static pthread_barrier_t barrier;

struct plan {
  unsigned long calls;
  unsigned long us;
};

static void busy_loop(const struct plan* p) {
  pthread_barrier_wait(&barrier);
  for (unsigned long i = 0; i < p->calls; ++i) {
    oracle_enter("app", "alpha_busy_us");
    alpha_busy_us(p->us);
    oracle_exit("app", "alpha_busy_us");
  }
}

// The marks keep the three routines from ever being folded into one
// function; thread groups are keyed by routine address.
static volatile int shared_mark, heavy_mark, light_mark;

static void* worker_shared(void* arg) {
  shared_mark = 1;
  busy_loop(arg);
  return 0;
}

static void* worker_heavy(void* arg) {
  heavy_mark = 1;
  busy_loop(arg);
  return 0;
}

static void* worker_light(void* arg) {
  light_mark = 2;
  busy_loop(arg);
  return 0;
}

static void exit_cb(void* arg) {
  (void)arg;
  pthread_exit(0);
}

static void* worker_abnormal(void* arg) {
  unsigned long n = *(unsigned long*)arg;
  for (unsigned long i = 0; i < n; ++i) alpha_noop();
  alpha_invoke(exit_cb, 0);
  return (void*)1;  // unreachable
}

static void* worker_normal(void* arg) {
  unsigned long n = *(unsigned long*)arg;
  for (unsigned long i = 0; i < n; ++i) alpha_noop();
  return 0;
}

static int run_two_groups(unsigned long calls, unsigned long heavy_us,
                          unsigned long light_us) {
  struct plan heavy = {calls, heavy_us};
  struct plan light = {calls, light_us};
  pthread_t t[4];
  pthread_barrier_init(&barrier, 0, 4);
  pthread_create(&t[0], 0, worker_heavy, &heavy);
  pthread_create(&t[1], 0, worker_heavy, &heavy);
  pthread_create(&t[2], 0, worker_light, &light);
  pthread_create(&t[3], 0, worker_light, &light);
  for (int i = 0; i < 4; ++i) pthread_join(t[i], 0);
  pthread_barrier_destroy(&barrier);
  printf("groups done calls=%lu heavy=%lu light=%lu\n", calls, heavy_us,
         light_us);
  return 0;
}

int main(int argc, char** argv) {
  const char* mode = argc > 1 ? argv[1] : "serial";

  if (strcmp(mode, "serial") == 0) {
    struct plan p;
    p.calls = argc > 2 ? strtoul(argv[2], 0, 10) : 100;
    p.us = argc > 3 ? strtoul(argv[3], 0, 10) : 500;
    pthread_barrier_init(&barrier, 0, 1);
    busy_loop(&p);
    pthread_barrier_destroy(&barrier);
    printf("serial done n=%lu us=%lu\n", p.calls, p.us);
    return 0;
  }

  if (strcmp(mode, "parallel") == 0) {
    unsigned long t_count = argc > 2 ? strtoul(argv[2], 0, 10) : 4;
    struct plan p;
    p.calls = argc > 3 ? strtoul(argv[3], 0, 10) : 100;
    p.us = argc > 4 ? strtoul(argv[4], 0, 10) : 500;
    pthread_t* t = malloc(t_count * sizeof *t);
    pthread_barrier_init(&barrier, 0, (unsigned)t_count);
    for (unsigned long i = 0; i < t_count; ++i)
      pthread_create(&t[i], 0, worker_shared, &p);
    for (unsigned long i = 0; i < t_count; ++i) pthread_join(t[i], 0);
    pthread_barrier_destroy(&barrier);
    free(t);
    printf("parallel done t=%lu n=%lu us=%lu\n", t_count, p.calls, p.us);
    return 0;
  }

  if (strcmp(mode, "imbalanced") == 0) {
    unsigned long calls = argc > 2 ? strtoul(argv[2], 0, 10) : 50;
    unsigned long k = argc > 3 ? strtoul(argv[3], 0, 10) : 1000;
    return run_two_groups(calls, 16 * k, k);
  }

  if (strcmp(mode, "balanced") == 0) {
    unsigned long calls = argc > 2 ? strtoul(argv[2], 0, 10) : 50;
    unsigned long k = argc > 3 ? strtoul(argv[3], 0, 10) : 1000;
    return run_two_groups(calls, k, k);
  }

  if (strcmp(mode, "abnormal") == 0) {
    unsigned long n = argc > 2 ? strtoul(argv[2], 0, 10) : 500;
    pthread_t a, b;
    pthread_create(&a, 0, worker_abnormal, &n);
    pthread_create(&b, 0, worker_normal, &n);
    void* ra = (void*)0xdead;
    pthread_join(a, &ra);
    pthread_join(b, 0);
    printf("abnormal done n=%lu ra=%p\n", n, ra);
    return ra == 0 ? 0 : 1;
  }

  fprintf(stderr, "unknown mode %s\n", mode);
  return 2;
}
