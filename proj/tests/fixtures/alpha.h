// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Fixture library "alpha": the innermost callee. Every function has a
// closed-form result so tests can predict outputs without running anything.
#ifndef XFLOW_FIXTURE_ALPHA_H
#define XFLOW_FIXTURE_ALPHA_H

#ifdef __cplusplus
extern "C" {
#endif

unsigned long alpha_noop(void);
unsigned long alpha_value(unsigned long x);
void alpha_busy_us(unsigned long us);

// 8 integer-class arguments (two of them spill to the stack) plus 8
// vector-class arguments, double return. Exercises every argument
// register the interceptor has to keep intact.
double alpha_mix(long a, long b, long c, long d, long e, long f, long g,
                 long h, double x0, double x1, double x2, double x3,
                 double x4, double x5, double x6, double x7);

// Runs the callback, then returns. Used to end threads from inside an
// intercepted call.
void alpha_invoke(void (*fn)(void*), void* arg);

// Terminates the process with `code`; never returns.
void alpha_noret(int code) __attribute__((noreturn));

// Tail chain, stage 2: implemented in assembly as `jmp alpha_tail3@PLT`.
unsigned long alpha_tail2(unsigned long x);
unsigned long alpha_tail3(unsigned long x);

// Exported data object. Data relocations must never become call sites.
extern unsigned long alpha_datum;

#ifdef __cplusplus
}
#endif

#endif
