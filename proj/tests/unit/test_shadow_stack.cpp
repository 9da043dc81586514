// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Structural rules of the return-address shadow stack. Stack addresses
// grow downward, so "deeper" means numerically lower.
#include <vector>

#include "doctest.h"
#include "xflow/shadow_stack.hpp"

using xflow::ShadowFrame;
using xflow::ShadowStack;

namespace {
ShadowFrame frame(std::uint64_t slot, std::uint32_t site,
                  std::uint64_t ra = 0x1000) {
  ShadowFrame f;
  f.return_slot = slot;
  f.real_ra = ra;
  f.site_id = site;
  return f;
}
}  // namespace

TEST_CASE("plain nesting pushes and pops in order") {
  ShadowFrame storage[8];
  ShadowStack st(storage, 8);
  CHECK(st.push(frame(0x7000, 1)));
  CHECK(st.push(frame(0x6000, 2)));  // callee frame is deeper
  CHECK(st.depth() == 2);

  ShadowFrame out;
  bool mismatch = true;
  CHECK(st.pop(2, out, mismatch));
  CHECK_FALSE(mismatch);
  CHECK(out.site_id == 2);
  CHECK(st.pop(1, out, mismatch));
  CHECK_FALSE(mismatch);
  CHECK(st.empty());
}

TEST_CASE("rule 1 reclaims frames abandoned by a non-local exit") {
  ShadowFrame storage[8];
  ShadowStack st(storage, 8);
  st.push(frame(0x7000, 1));
  st.push(frame(0x6000, 2));
  st.push(frame(0x5000, 3));

  // A new call appears at 0x6800: frames at 0x6000 and 0x5000 can no
  // longer return (their stack memory is gone); only 0x7000 survives.
  std::vector<std::uint32_t> reclaimed;
  const auto n = st.reclaim_deeper_than(
      0x6800, [&](const ShadowFrame& f) { reclaimed.push_back(f.site_id); });
  CHECK(n == 2);
  REQUIRE(reclaimed.size() == 2);
  CHECK(reclaimed[0] == 3);  // deepest-first unwinding order... top first
  CHECK(reclaimed[1] == 2);
  CHECK(st.depth() == 1);
  CHECK(st.top().site_id == 1);
}

TEST_CASE("rule 1 leaves an equal slot alone") {
  ShadowFrame storage[4];
  ShadowStack st(storage, 4);
  st.push(frame(0x6000, 1));
  const auto n = st.reclaim_deeper_than(0x6000, [](const ShadowFrame&) {});
  CHECK(n == 0);
  CHECK(st.depth() == 1);
}

TEST_CASE("rule 2 tail transfer pops the frame occupying the same slot") {
  ShadowFrame storage[4];
  ShadowStack st(storage, 4);
  st.push(frame(0x7000, 1, 0xAAAA));
  st.push(frame(0x6000, 2, 0xBBBB));

  ShadowFrame old;
  CHECK(st.take_tail(0x6000, old));
  CHECK(old.site_id == 2);
  CHECK(old.real_ra == 0xBBBB);  // the new frame inherits this
  CHECK(st.depth() == 1);

  // Not a tail when the top occupies a different slot.
  ShadowFrame other;
  CHECK_FALSE(st.take_tail(0x5000, other));
  CHECK(st.depth() == 1);
}

TEST_CASE("pop flags a site mismatch but still yields the top frame") {
  ShadowFrame storage[4];
  ShadowStack st(storage, 4);
  st.push(frame(0x7000, 5, 0xCAFE));
  ShadowFrame out;
  bool mismatch = false;
  CHECK(st.pop(9, out, mismatch));
  CHECK(mismatch);
  CHECK(out.real_ra == 0xCAFE);  // fail soft: the RA is still the answer
}

TEST_CASE("pop on empty reports structural corruption") {
  ShadowStack st(nullptr, 0);
  ShadowFrame out;
  bool mismatch = false;
  CHECK_FALSE(st.pop(0, out, mismatch));
}

TEST_CASE("push beyond capacity fails without corrupting state") {
  ShadowFrame storage[2];
  ShadowStack st(storage, 2);
  CHECK(st.push(frame(0x7000, 1)));
  CHECK(st.push(frame(0x6000, 2)));
  CHECK(st.full());
  CHECK_FALSE(st.push(frame(0x5000, 3)));
  CHECK(st.depth() == 2);
  CHECK(st.top().site_id == 2);
}

TEST_CASE("deep recursion then bulk reclaim restores an exact prefix") {
  ShadowFrame storage[64];
  ShadowStack st(storage, 64);
  for (std::uint32_t i = 0; i < 64; ++i)
    st.push(frame(0x8000 - i * 0x10, i));
  // Long jump back above frame 10 (slot of frame 10 is 0x8000-0xA0).
  std::uint32_t count = 0;
  st.reclaim_deeper_than(0x8000 - 10 * 0x10 + 1,
                         [&](const ShadowFrame&) { ++count; });
  CHECK(count == 54);
  CHECK(st.depth() == 10);
  CHECK(st.top().site_id == 9);
}
