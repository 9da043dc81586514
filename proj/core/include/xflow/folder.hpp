// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Online folding of per-invocation observations into fixed-size per-thread
// accumulators. Memory is proportional to the number of sites, never to
// the number of invocations; every operation is O(1), allocation free, and
// integer only.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xflow/types.hpp"

namespace xflow {

/// Integer division rounding half away from zero (inputs are unsigned).
/// Attribution must not systematically lose cycles to truncation.
constexpr std::uint64_t div_round_half_up(std::uint64_t x, std::uint64_t d) {
  return d == 0 ? x : (x + d / 2) / d;
}

/// Counters near 2^64 pin at the ceiling instead of wrapping; a wrapped
/// cycle sum would silently invert every report built from it.
constexpr std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t s = a + b;
  return s < a ? ~0ull : s;
}

constexpr std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  const std::uint64_t p = a * b;
  return p / a == b ? p : ~0ull;
}

/// The four accumulators kept per (thread, site).
struct SiteCounters {
  std::uint64_t count = 0;        // invocations observed
  std::uint64_t timed_count = 0;  // invocations the timing gate sampled
  std::uint64_t raw_cycles = 0;   // gate-scaled wall cycles inside the API
  std::uint64_t attributed_cycles = 0;  // raw divided across active threads
};

/// Accumulator arrays for one thread, indexed by site id. The agent's
/// thread contexts hold the same four arrays in mapped memory; this owning
/// form exists for the analyzer side and for exercising fold logic alone.
class ThreadLedger {
 public:
  explicit ThreadLedger(std::uint32_t site_capacity)
      : count_(site_capacity), timed_(site_capacity), raw_(site_capacity),
        attr_(site_capacity) {}

  std::uint32_t capacity() const { return count_.size(); }

  /// Folds one invocation. `duration_cycles` is meaningful only when
  /// `timed` is set; `scale` is the timing-gate period (a sampled duration
  /// stands for `scale` invocations); `active_threads` is the divisor
  /// sampled at invocation end, and is clamped to at least 1.
  void fold(SiteId site, bool timed, std::uint64_t duration_cycles,
            std::uint64_t scale, std::uint64_t active_threads);

  /// The count half of fold() alone: what the shadow entry's inline
  /// increment performs at every invocation entry.
  void fold_count(SiteId site) { count_[site] += 1; }

  /// The duration half of fold() alone, applied at invocation exit.
  void fold_duration(SiteId site, std::uint64_t duration_cycles,
                     std::uint64_t scale, std::uint64_t active_threads);

  SiteCounters get(SiteId site) const {
    return {count_[site], timed_[site], raw_[site], attr_[site]};
  }

  std::span<const std::uint64_t> counts() const { return count_; }
  std::span<const std::uint64_t> timed() const { return timed_; }
  std::span<const std::uint64_t> raw() const { return raw_; }
  std::span<const std::uint64_t> attributed() const { return attr_; }

 private:
  std::vector<std::uint64_t> count_, timed_, raw_, attr_;
};

/// Shared arithmetic for the agent's in-place arrays. Returns true when
/// any accumulator saturated, so callers can warn once.
inline bool fold_duration_into(std::uint64_t& timed_count,
                               std::uint64_t& raw_cycles,
                               std::uint64_t& attributed_cycles,
                               std::uint64_t duration_cycles,
                               std::uint64_t scale,
                               std::uint64_t active_threads) {
  if (scale == 0) scale = 1;
  if (active_threads == 0) active_threads = 1;
  const std::uint64_t scaled = sat_mul(duration_cycles, scale);
  const std::uint64_t share = div_round_half_up(scaled, active_threads);
  const bool clamped = (duration_cycles != 0 && scaled / duration_cycles != scale) ||
                       raw_cycles + scaled < raw_cycles ||
                       attributed_cycles + share < attributed_cycles;
  timed_count = sat_add(timed_count, 1);
  raw_cycles = sat_add(raw_cycles, scaled);
  attributed_cycles = sat_add(attributed_cycles, share);
  return clamped;
}

}  // namespace xflow
