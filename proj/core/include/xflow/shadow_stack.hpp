// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// The per-thread shadow stack that pairs API entries with API exits when
// the real return address has been replaced. Pure bookkeeping over a
// caller-provided frame array: no allocation, no timing, no globals, so
// every structural rule is testable in isolation.
//
// Ordering rules, applied at every entry:
//   1. Frames whose spilled return slot is deeper (numerically lower) than
//      the new slot belong to calls abandoned by a non-local exit; they are
//      reclaimed, their pending durations dropped.
//   2. A frame whose slot equals the new slot is a tail transfer: the old
//      API jumped straight into a new one. The old frame is closed as if it
//      returned now, and the new frame inherits its real return address.
//   3. Otherwise the new frame nests normally.
// At exit the top frame is popped; a site mismatch is recorded but the top
// frame still answers, since its return address is the only trustworthy
// one (fail soft, never fail wrong).
#pragma once

#include <cstdint>

namespace xflow {

struct ShadowFrame {
  std::uint64_t return_slot = 0;   // stack address whose content we swapped
  std::uint64_t real_ra = 0;       // what that slot held before the swap
  std::uint64_t start_cycles = 0;  // 0 when the timing gate skipped this call
  std::uint32_t site_id = 0;
  std::uint32_t flags = 0;
};

inline constexpr std::uint32_t kFrameTimed = 1u;
inline constexpr std::uint32_t kFrameWait = 2u;

class ShadowStack {
 public:
  ShadowStack() = default;
  ShadowStack(ShadowFrame* storage, std::uint32_t capacity)
      : frames_(storage), cap_(capacity) {}

  std::uint32_t depth() const { return depth_; }
  std::uint32_t capacity() const { return cap_; }
  bool full() const { return depth_ >= cap_; }
  bool empty() const { return depth_ == 0; }

  const ShadowFrame& top() const { return frames_[depth_ - 1]; }
  ShadowFrame& top_mut() { return frames_[depth_ - 1]; }

  /// Rule 1. Pops every frame strictly deeper than `slot`, invoking
  /// `sink(frame)` for each (deepest last). Returns the number reclaimed.
  template <typename Sink>
  std::uint32_t reclaim_deeper_than(std::uint64_t slot, Sink&& sink) {
    std::uint32_t n = 0;
    while (depth_ > 0 && frames_[depth_ - 1].return_slot < slot) {
      --depth_;
      sink(frames_[depth_]);
      ++n;
    }
    return n;
  }

  /// Rule 2. If the top frame occupies exactly `slot`, pops it into `out`
  /// and returns true.
  bool take_tail(std::uint64_t slot, ShadowFrame& out) {
    if (depth_ == 0 || frames_[depth_ - 1].return_slot != slot) return false;
    out = frames_[--depth_];
    return true;
  }

  bool push(const ShadowFrame& f) {
    if (depth_ >= cap_) return false;
    frames_[depth_++] = f;
    return true;
  }

  /// Pops the top frame. `mismatch` is set when its site differs from
  /// `expected_site`. Returns false on an empty stack (structural
  /// corruption; the caller has no valid return address to offer).
  bool pop(std::uint32_t expected_site, ShadowFrame& out, bool& mismatch) {
    if (depth_ == 0) return false;
    out = frames_[--depth_];
    mismatch = out.site_id != expected_site;
    return true;
  }

 private:
  ShadowFrame* frames_ = nullptr;
  std::uint32_t depth_ = 0;
  std::uint32_t cap_ = 0;
};

}  // namespace xflow
