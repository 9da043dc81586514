// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/tracer.hpp"

#include <sys/mman.h>
#include <time.h>
#include <unistd.h>

#include <cstring>
#include <mutex>

#include "xflow/diag.hpp"
#include "xflow/folder.hpp"

namespace xflow {

std::uint64_t rdtsc_fenced() {
  std::uint32_t lo, hi;
  asm volatile("lfence\n\trdtsc\n\tlfence" : "=a"(lo), "=d"(hi) :: "memory");
  return (std::uint64_t(hi) << 32) | lo;
}

std::uint64_t calibrate_tsc_hz(unsigned window_ms) {
  if (window_ms == 0) window_ms = 1;
  timespec t0{}, t1{};
  clock_gettime(CLOCK_MONOTONIC_RAW, &t0);
  std::uint64_t c0 = rdtsc_fenced();
  timespec req{0, long(window_ms) * 1000000L};
  nanosleep(&req, nullptr);
  clock_gettime(CLOCK_MONOTONIC_RAW, &t1);
  std::uint64_t c1 = rdtsc_fenced();
  std::uint64_t ns = std::uint64_t(t1.tv_sec - t0.tv_sec) * 1000000000ull +
                     std::uint64_t(t1.tv_nsec - t0.tv_nsec);
  if (ns == 0 || c1 <= c0) return 1000000000ull;  // degenerate clock
  return std::uint64_t(double(c1 - c0) * 1e9 / double(ns));
}

namespace tracer {
namespace {

// Initial-exec TLS keeps the context lookup to a single fs-relative load,
// both here and in generated entry code.
__thread ThreadContext* t_ctx __attribute__((tls_model("initial-exec")));

std::atomic<ThreadContext*> g_all{nullptr};
std::atomic<std::uint64_t> g_active{0};
std::atomic<std::uint32_t> g_next_ordinal{0};
std::mutex g_attach_mu;

// Idle clock: wall cycles while no attached thread was active. g_idle_start
// is only written by the thread whose park emptied the active set and only
// read by the thread whose wake refills it; the active counter orders the
// two.
std::atomic<std::uint64_t> g_idle_start{0};
std::atomic<std::uint64_t> g_idle_total{0};

}  // namespace

ThreadContext* current() { return t_ctx; }

std::int32_t tls_slot_displacement() {
  auto self = reinterpret_cast<std::intptr_t>(__builtin_thread_pointer());
  auto slot = reinterpret_cast<std::intptr_t>(&t_ctx);
  std::intptr_t disp = slot - self;
  return static_cast<std::int32_t>(disp);
}

ThreadContext* attach(std::uint32_t site_capacity, std::uint32_t shadow_depth,
                      std::uint64_t group_tag) {
  if (t_ctx) return t_ctx;
  if (site_capacity == 0) site_capacity = kDefaultSiteCapacity;
  if (shadow_depth == 0) shadow_depth = kDefaultShadowDepth;

  // One mapping: header page | counts | gate | timed | raw | attr | frames.
  const std::size_t cap = site_capacity;
  std::size_t off_counts = kCtxCountsOffset;
  std::size_t off_gate = off_counts + 8 * cap;
  std::size_t off_timed = off_gate + 4 * cap;
  std::size_t off_raw = off_timed + 8 * cap;
  std::size_t off_attr = off_raw + 8 * cap;
  std::size_t off_frames = (off_attr + 8 * cap + 15) & ~std::size_t(15);
  std::size_t total = off_frames + sizeof(ShadowFrame) * shadow_depth;
  total = (total + 4095) & ~std::size_t(4095);

  void* mem = mmap(nullptr, total, PROT_READ | PROT_WRITE,
                   MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
  if (mem == MAP_FAILED) {
    diag::warn("thread context allocation failed (%zu bytes)", total);
    return nullptr;
  }

  auto* ctx = new (mem) ThreadContext();
  char* base = static_cast<char*>(mem);
  ctx->magic = kCtxMagic;
  ctx->site_capacity = site_capacity;
  ctx->tid = static_cast<std::uint64_t>(gettid());
  ctx->group_tag = group_tag;
  ctx->counts = reinterpret_cast<std::uint64_t*>(base + off_counts);
  ctx->gate = reinterpret_cast<std::uint32_t*>(base + off_gate);
  ctx->timed = reinterpret_cast<std::uint64_t*>(base + off_timed);
  ctx->raw = reinterpret_cast<std::uint64_t*>(base + off_raw);
  ctx->attr = reinterpret_cast<std::uint64_t*>(base + off_attr);
  ctx->frames = reinterpret_cast<ShadowFrame*>(base + off_frames);
  ctx->stack = ShadowStack(ctx->frames, shadow_depth);
  ctx->map_size = total;
  ctx->start_cycles = rdtsc();

  {
    std::lock_guard<std::mutex> lock(g_attach_mu);
    ctx->ordinal = g_next_ordinal.fetch_add(1, std::memory_order_relaxed);
    ctx->next = g_all.load(std::memory_order_relaxed);
    g_all.store(ctx, std::memory_order_release);
  }
  if (g_active.fetch_add(1, std::memory_order_acq_rel) == 0) {
    // A thread appearing while everyone was parked closes the open idle
    // span; it belongs to no wait invocation, so it reaches the global
    // clock only.
    const std::uint64_t start = g_idle_start.load(std::memory_order_acquire);
    const std::uint64_t now = ctx->start_cycles;
    if (start != 0 && now > start)
      g_idle_total.fetch_add(now - start, std::memory_order_relaxed);
  }

  // Publish last: generated code treats a non-null slot as "record".
  t_ctx = ctx;
  return ctx;
}

void detach() {
  ThreadContext* ctx = t_ctx;
  if (!ctx) return;
  t_ctx = nullptr;
  ctx->end_cycles = rdtsc();
  // A thread parked in a wait API cannot reach here; if the counter was
  // consumed by wait_begin it stays consumed.
  if (ctx->wait_depth == 0) {
    if (g_active.fetch_sub(1, std::memory_order_acq_rel) == 1)
      g_idle_start.store(ctx->end_cycles, std::memory_order_release);
  }
}

ThreadContext* all_contexts() { return g_all.load(std::memory_order_acquire); }

std::uint64_t active_threads() {
  std::uint64_t a = g_active.load(std::memory_order_relaxed);
  return a == 0 ? 1 : a;
}

void wait_begin(ThreadContext* ctx) {
  if (ctx->wait_depth++ == 0) {
    if (g_active.fetch_sub(1, std::memory_order_acq_rel) == 1)
      g_idle_start.store(rdtsc(), std::memory_order_release);
  }
}

std::uint64_t wait_end(ThreadContext* ctx) {
  if (ctx->wait_depth == 0) return 0;  // reclaimed frame already unwound it
  if (--ctx->wait_depth != 0) return 0;
  if (g_active.fetch_add(1, std::memory_order_acq_rel) == 0) {
    // This wake ends a span where the whole process was parked; credit it
    // here and nowhere else.
    const std::uint64_t start = g_idle_start.load(std::memory_order_acquire);
    const std::uint64_t now = rdtsc();
    if (start != 0 && now > start) {
      const std::uint64_t span = now - start;
      g_idle_total.fetch_add(span, std::memory_order_relaxed);
      return span;
    }
  }
  return 0;
}

std::uint64_t idle_cycles() {
  return g_idle_total.load(std::memory_order_relaxed);
}

void record(ThreadContext* ctx, SiteId site, std::uint64_t duration_cycles,
            std::uint64_t scale) {
  if (ctx->reentry) {
    ctx->dropped_records += 1;
    return;
  }
  ctx->reentry = 1;
  const bool clamped =
      fold_duration_into(ctx->timed[site], ctx->raw[site], ctx->attr[site],
                         duration_cycles, scale, active_threads());
  if (clamped) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true, std::memory_order_relaxed))
      diag::warn("cycle counter saturated at site %u; totals are clamped",
                 site);
  }
  ctx->reentry = 0;
}

void record_wait(ThreadContext* ctx, SiteId site,
                 std::uint64_t duration_cycles, std::uint64_t idle_credit) {
  if (ctx->reentry) {
    ctx->dropped_records += 1;
    return;
  }
  ctx->reentry = 1;
  ctx->timed[site] = sat_add(ctx->timed[site], 1);
  ctx->raw[site] = sat_add(ctx->raw[site], duration_cycles);
  // The credit is measured by a different pair of clock reads than the
  // duration; keep the attr <= raw row invariant under jitter.
  if (idle_credit > duration_cycles) idle_credit = duration_cycles;
  ctx->attr[site] = sat_add(ctx->attr[site], idle_credit);
  ctx->reentry = 0;
}

bool gate_should_time(ThreadContext* ctx, SiteId site, std::uint64_t rate) {
  if (rate == 0) return false;
  std::uint32_t g = ctx->gate[site];
  if (g <= 1) {
    ctx->gate[site] = static_cast<std::uint32_t>(rate);
    return true;
  }
  ctx->gate[site] = g - 1;
  return false;
}

}  // namespace tracer
}  // namespace xflow
