// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Generated per-site entry code: size budget, layout stability, and
// reproducibility. These tests treat the emitter as a pure function from
// parameters to bytes; execution behaviour is covered by the fixture runs.
#include <array>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "xflow/shadow_codegen.hpp"
#include "xflow/types.hpp"

using xflow::EntryLayout;
using xflow::EntryParams;
using xflow::emit_shadow_entry;
using xflow::emit_slot_patch;

namespace {
EntryParams sample(bool lazy) {
  EntryParams p;
  p.site_id = 1234;
  p.tls_disp = -72;
  p.entry_addr = 0x7f0000400000ull;
  p.record_addr = 0x7f0000500000ull;
  p.header_addr = 0x7f0000300000ull;
  p.reloc_index = 17;
  p.lazy = lazy;
  return p;
}
}  // namespace

TEST_CASE("entry code fits the per-site budget") {
  std::array<std::uint8_t, xflow::kShadowEntryMaxLen> buf{};
  for (bool lazy : {false, true}) {
    auto layout = emit_shadow_entry(buf, sample(lazy));
    CHECK(layout.total > 0);
    CHECK(layout.total <= xflow::kShadowEntryMaxLen);
    CHECK(xflow::kShadowEntryMaxLen <= xflow::kShadowEntryStride);
  }
}

TEST_CASE("layout offsets are ordered and inside the entry") {
  std::array<std::uint8_t, xflow::kShadowEntryMaxLen> buf{};
  for (bool lazy : {false, true}) {
    auto l = emit_shadow_entry(buf, sample(lazy));
    CHECK(l.seg_a == 0);
    CHECK(l.seg_a < l.seg_b);
    CHECK(l.seg_b < l.seg_c);
    CHECK(l.seg_c < l.seg_d);
    CHECK(l.seg_d < l.total);
    CHECK(l.bypass > l.seg_c);
    CHECK(l.bypass < l.total);
    if (lazy) {
      CHECK(l.lazy_launch > l.seg_d);
      CHECK(l.lazy_launch < l.total);
    } else {
      CHECK(l.lazy_launch == 0);
    }
  }
}

TEST_CASE("layout depends only on the lazy flag") {
  std::array<std::uint8_t, xflow::kShadowEntryMaxLen> buf{};
  auto a = emit_shadow_entry(buf, sample(false));
  auto p = sample(false);
  p.site_id = 9;
  p.entry_addr = 0x7f5555000000ull;
  p.record_addr = 0x7f5555100000ull;
  p.reloc_index = 0;
  auto b = emit_shadow_entry(buf, p);
  CHECK(a.seg_a == b.seg_a);
  CHECK(a.seg_b == b.seg_b);
  CHECK(a.seg_c == b.seg_c);
  CHECK(a.bypass == b.bypass);
  CHECK(a.seg_d == b.seg_d);
  CHECK(a.total == b.total);
}

TEST_CASE("emission is byte-for-byte reproducible") {
  std::array<std::uint8_t, xflow::kShadowEntryMaxLen> b1{}, b2{};
  for (bool lazy : {false, true}) {
    auto l1 = emit_shadow_entry(b1, sample(lazy));
    auto l2 = emit_shadow_entry(b2, sample(lazy));
    CHECK(l1.total == l2.total);
    CHECK(std::memcmp(b1.data(), b2.data(), l1.total) == 0);
  }
}

TEST_CASE("different sites differ only in encoded constants") {
  std::array<std::uint8_t, xflow::kShadowEntryMaxLen> b1{}, b2{};
  auto p1 = sample(false);
  auto p2 = sample(false);
  p2.site_id = p1.site_id + 1;
  auto l1 = emit_shadow_entry(b1, p1);
  emit_shadow_entry(b2, p2);
  int diffs = 0;
  for (std::uint16_t i = 0; i < l1.total; ++i)
    if (b1[i] != b2[i]) ++diffs;
  CHECK(diffs > 0);
  // A site id occupies at most 4 bytes per occurrence; two occurrences
  // (counter index, dispatch argument) bound the delta.
  CHECK(diffs <= 8);
}

TEST_CASE("entry starts by preserving flags") {
  // A patched slot can be reached mid-comparison, so the first decode
  // byte must be pushfq (0x9c) after the structured entry preamble.
  std::array<std::uint8_t, xflow::kShadowEntryMaxLen> buf{};
  emit_shadow_entry(buf, sample(false));
  // Allow an endbr64 (f3 0f 1e fa) before the pushfq.
  std::size_t off = 0;
  if (buf[0] == 0xf3 && buf[1] == 0x0f && buf[2] == 0x1e && buf[3] == 0xfa)
    off = 4;
  CHECK(buf[off] == 0x9c);
}

TEST_CASE("slot patch is 13 bytes of movabs r11 + jmp r11 + int3 pad") {
  std::array<std::uint8_t, 16> buf{};
  const std::uint64_t target = 0x00007fdeadbeef00ull;
  auto n = emit_slot_patch(std::span<std::uint8_t, 16>(buf), target);
  CHECK(n == 13);
  CHECK(buf[0] == 0x49);
  CHECK(buf[1] == 0xbb);
  std::uint64_t imm = 0;
  std::memcpy(&imm, &buf[2], 8);
  CHECK(imm == target);
  CHECK(buf[10] == 0x41);
  CHECK(buf[11] == 0xff);
  CHECK(buf[12] == 0xe3);
  CHECK(buf[13] == 0xcc);
  CHECK(buf[14] == 0xcc);
  CHECK(buf[15] == 0xcc);
}

TEST_CASE("slot patch fits the smallest real linkage slot") {
  // 16 bytes is the x86-64 linkage slot stride; the patch plus padding
  // must never spill into the next slot.
  std::array<std::uint8_t, 16> buf{};
  auto n = emit_slot_patch(std::span<std::uint8_t, 16>(buf), ~0ull);
  CHECK(n <= 16);
}
