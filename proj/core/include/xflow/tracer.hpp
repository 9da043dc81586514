// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Per-thread recording contexts and the cycle clock. A context is one
// anonymous mapping: a fixed header page, then the four fold arrays, the
// timing-gate countdowns, and the shadow frame array. Pages are touched
// only for sites that actually fire, so resident growth tracks use, not
// capacity. Contexts live until the process ends; a thread that exits
// keeps its numbers reachable for the final flush.
#pragma once

#include <atomic>
#include <cstdint>

#include "xflow/shadow_stack.hpp"
#include "xflow/types.hpp"

namespace xflow {

/// Serializing timestamp; used for calibration endpoints.
std::uint64_t rdtsc_fenced();

/// Plain rdtsc: the per-invocation timestamp. Cheap, monotonic enough on
/// invariant-TSC hardware, which is the supported platform.
inline std::uint64_t rdtsc() {
  std::uint32_t lo, hi;
  asm volatile("rdtsc" : "=a"(lo), "=d"(hi));
  return (std::uint64_t(hi) << 32) | lo;
}

/// Cycles per second, measured against CLOCK_MONOTONIC_RAW over roughly
/// `window_ms` milliseconds at startup.
std::uint64_t calibrate_tsc_hz(unsigned window_ms = 20);

struct ThreadContext {
  std::uint64_t magic = 0;
  std::uint32_t ordinal = 0;
  std::uint32_t site_capacity = 0;
  std::uint64_t tid = 0;
  std::uint64_t group_tag = 0;
  std::uint64_t start_cycles = 0;
  std::uint64_t end_cycles = 0;  // set when the thread stops recording

  // Hot-path state.
  std::uint32_t reentry = 0;
  std::uint32_t wait_depth = 0;
  ShadowStack stack;

  // Structural diagnostics.
  std::uint64_t overflow_events = 0;   // entries beyond shadow depth
  std::uint64_t mismatch_events = 0;   // exit saw unexpected site
  std::uint64_t stale_reclaims = 0;    // frames reclaimed by rule 1
  std::uint64_t dropped_records = 0;   // re-entrant record() calls

  std::atomic<std::uint32_t> persisted{0};
  ThreadContext* next = nullptr;  // intrusive list of all contexts

  // Array views into this context's mapping. counts lives at the fixed
  // offset kCtxCountsOffset; generated code relies on that.
  std::uint64_t* counts = nullptr;
  std::uint32_t* gate = nullptr;
  std::uint64_t* timed = nullptr;
  std::uint64_t* raw = nullptr;
  std::uint64_t* attr = nullptr;
  ShadowFrame* frames = nullptr;

  std::size_t map_size = 0;
};

inline constexpr std::uint64_t kCtxMagic = 0x58464c4f57435458ull;  // XFLOWCTX

static_assert(sizeof(ThreadContext) <= kCtxCountsOffset,
              "context header must fit below the counts array");

/// Process-wide context management. All functions are safe to call from
/// any thread; creation takes a lock, lookup is a TLS read.
namespace tracer {

/// The calling thread's context, or nullptr before attach (the generated
/// code's bypass test reads the same TLS slot directly).
ThreadContext* current();

/// fs-segment displacement of the TLS context slot, for code generation.
std::int32_t tls_slot_displacement();

/// Creates and installs a context for the calling thread.
ThreadContext* attach(std::uint32_t site_capacity, std::uint32_t shadow_depth,
                      std::uint64_t group_tag);

/// Marks the calling thread's context finished (end_cycles stamped,
/// active-thread count dropped). The mapping stays readable.
void detach();

/// Head of the intrusive list of every context ever attached.
ThreadContext* all_contexts();

/// Threads currently able to consume CPU: attached and not parked inside
/// a wait-set API. Never reported below 1.
std::uint64_t active_threads();

/// Wait-set bracketing for the calling thread (re-entrancy aware:
/// only the outermost wait-set frame flips the active counter).
///
/// Waiting time is attributed by idle crediting: a process-wide idle clock
/// runs while zero attached threads are active, and wait_end returns the
/// idle span the calling thread's wake just closed (zero when other
/// threads kept executing). Each idle span is credited to exactly one wait
/// invocation, so summed wait attribution equals the process's true idle
/// time instead of double-counting time that overlapped real execution.
void wait_begin(ThreadContext* ctx);
std::uint64_t wait_end(ThreadContext* ctx);

/// Cumulative closed idle spans, in cycles.
std::uint64_t idle_cycles();

/// Folds a timed duration into the context arrays. Drops (and counts) the
/// record when re-entered; never allocates.
void record(ThreadContext* ctx, SiteId site, std::uint64_t duration_cycles,
            std::uint64_t scale);

/// Folds a wait-API invocation: raw gains the full parked wall time,
/// attribution gains only the idle span this wake closed (see wait_end).
void record_wait(ThreadContext* ctx, SiteId site,
                 std::uint64_t duration_cycles, std::uint64_t idle_credit);

/// Timing-gate countdown for one site. Returns true when this invocation
/// should be timed. rate 0 disables timing, rate 1 times everything.
bool gate_should_time(ThreadContext* ctx, SiteId site, std::uint64_t rate);

}  // namespace tracer
}  // namespace xflow
