// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Per-invocation handlers, called from the thunks on every intercepted
// API call of every thread. Constraints: no allocation, no locks, no libc
// calls, no floating point; anything here runs inside arbitrary library
// calls, including the allocator's own.

#include <cstdint>
#include <cstdlib>

#include "agent_state.hpp"
#include "xflow/diag.hpp"
#include "xflow/shadow_stack.hpp"
#include "xflow/tracer.hpp"

namespace xflow::agent {

HotState g_hot __attribute__((aligned(64)));

namespace {

inline std::uint64_t entry_code_addr(std::uint32_t sid) {
  return reinterpret_cast<std::uint64_t>(g_hot.code_base) +
         std::uint64_t(sid) * kShadowEntryStride;
}

inline std::uint64_t load_live_cell(std::uint64_t cell) {
  return __atomic_load_n(reinterpret_cast<std::uint64_t*>(cell),
                         __ATOMIC_RELAXED);
}

// Captures the dynamic linker's resolution once it has happened: the
// moment the original GOT cell no longer holds its pre-patch value, that
// value is the real API.
inline std::uint64_t try_capture(SiteRecord& rec) {
  if (!rec.got_cell) return 0;
  std::uint64_t cur = load_live_cell(rec.got_cell);
  if (cur == rec.initial_cell || cur == 0) return 0;
  rec.resolved.store(cur, std::memory_order_relaxed);
  rec.route.store(cur, std::memory_order_release);
  return cur;
}

}  // namespace

extern "C" __attribute__((visibility("hidden"))) std::uint64_t
xflow_enter_handler(std::uint32_t sid, std::uint64_t* slot) {
  ThreadContext* ctx = tracer::current();
  SiteRecord& rec = g_hot.records[sid];

  std::uint64_t target = rec.route.load(std::memory_order_acquire);
  if (rec.resolved.load(std::memory_order_relaxed) == 0) {
    std::uint64_t captured = try_capture(rec);
    if (captured) {
      target = captured;
    } else if (rec.plt0) {
      // Still unresolved: target is the resolver launch. Count it; tests
      // assert the real resolver runs exactly once per lazy site.
      rec.resolver_launches.fetch_add(1, std::memory_order_relaxed);
    }
  }

  const std::uint64_t slot_addr = reinterpret_cast<std::uint64_t>(slot);
  auto& stack = ctx->stack;

  ctx->stale_reclaims +=
      stack.reclaim_deeper_than(slot_addr, [&](const ShadowFrame& f) {
        // The call this frame tracked was abandoned by a non-local exit;
        // its duration is unknowable and dropped.
        if (f.flags & kFrameWait) tracer::wait_end(ctx);
      });

  std::uint64_t real_ra;
  ShadowFrame tail;
  bool tail_transfer = false;
  if (!stack.empty() && stack.top().return_slot == slot_addr) {
    // A genuine tail transfer leaves our return segment parked in the
    // slot. If the slot holds anything else the program rewrote its own
    // return address, and the right move is to nest, not to close.
    const SiteRecord& top_rec = g_hot.records[stack.top().site_id];
    if (*slot == entry_code_addr(stack.top().site_id) + top_rec.d_off)
      tail_transfer = stack.take_tail(slot_addr, tail);
  }
  if (tail_transfer) {
    // Previous API jumped here instead of returning: close it now and
    // inherit the return address it owed its caller.
    if (tail.flags & kFrameWait) {
      const std::uint64_t credit = tracer::wait_end(ctx);
      if (tail.flags & kFrameTimed)
        tracer::record_wait(ctx, tail.site_id, rdtsc() - tail.start_cycles,
                            credit);
    } else if (tail.flags & kFrameTimed) {
      tracer::record(ctx, tail.site_id, rdtsc() - tail.start_cycles,
                     g_hot.timing_rate ? g_hot.timing_rate : 1);
    }
    real_ra = tail.real_ra;
  } else {
    real_ra = *slot;
  }

  ShadowFrame frame;
  frame.return_slot = slot_addr;
  frame.real_ra = real_ra;
  frame.start_cycles = 0;
  frame.site_id = sid;
  frame.flags = rec.flags & kRecWait ? kFrameWait : 0;
  // Wait sites bypass the gate: idle crediting needs every park observed,
  // and waits are rare and long, so sampling them saves nothing.
  const bool timed = (frame.flags & kFrameWait)
                         ? true
                         : tracer::gate_should_time(ctx, sid, g_hot.timing_rate);
  if (timed) frame.flags |= kFrameTimed;

  if (stack.push(frame)) {
    *slot = entry_code_addr(sid) + rec.d_off;
    if (frame.flags & kFrameWait) tracer::wait_begin(ctx);
    if (timed) stack.top_mut().start_cycles = rdtsc();
  } else {
    // Depth exhausted: counting continues (segment B already ran), timing
    // stops for this call. The slot must stay a real return address.
    if (ctx->overflow_events++ == 0)
      diag::warn("shadow stack full (depth %u); deeper calls count only",
                 stack.capacity());
    if (tail_transfer) *slot = real_ra;
  }
  return target;
}

extern "C" __attribute__((visibility("hidden"))) std::uint64_t
xflow_exit_handler(std::uint32_t sid) {
  const std::uint64_t now = rdtsc();
  ThreadContext* ctx = tracer::current();
  SiteRecord& rec = g_hot.records[sid];

  if (ctx == nullptr || ctx->stack.empty()) {
    // Reached the return segment with no frame to answer with: there is no
    // correct address to resume at. Bail loudly rather than jump wild.
    diag::note("exit with no shadow frame (site %u); aborting", sid);
    abort();
  }

  ShadowFrame frame;
  bool mismatch = false;
  ctx->stack.pop(sid, frame, mismatch);
  if (mismatch) ctx->mismatch_events += 1;

  // Fold under the frame's own site: on a mismatch the frame is the
  // trustworthy half.
  if (frame.flags & kFrameWait) {
    const std::uint64_t credit = tracer::wait_end(ctx);
    if (frame.flags & kFrameTimed)
      tracer::record_wait(ctx, frame.site_id, now - frame.start_cycles,
                          credit);
  } else if (frame.flags & kFrameTimed) {
    tracer::record(ctx, frame.site_id, now - frame.start_cycles,
                   g_hot.timing_rate ? g_hot.timing_rate : 1);
  }

  if (rec.resolved.load(std::memory_order_relaxed) == 0) try_capture(rec);

  return frame.real_ra;
}

}  // namespace xflow::agent
