// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Fixture library "beta": the middle layer. Calls alpha so that tests see
// the same API under two different callers.
#ifndef XFLOW_FIXTURE_BETA_H
#define XFLOW_FIXTURE_BETA_H

#ifdef __cplusplus
extern "C" {
#endif

// Calls alpha_noop() once; returns its result + 100.
unsigned long beta_once(void);

// Calls alpha_busy_us(us); returns us.
unsigned long beta_busy(unsigned long us);

// Tail chain, stage 1: assembly `jmp alpha_tail2@PLT`.
unsigned long beta_tail(unsigned long x);

#ifdef __cplusplus
}
#endif

#endif
