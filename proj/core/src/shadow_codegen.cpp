// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/shadow_codegen.hpp"

#include <cassert>
#include <cstring>

namespace xflow {
namespace {

class Emitter {
 public:
  explicit Emitter(std::span<std::uint8_t> buf) : buf_(buf) {}

  std::uint16_t pos() const { return static_cast<std::uint16_t>(pos_); }

  void bytes(std::initializer_list<std::uint8_t> bs) {
    for (auto b : bs) buf_[pos_++] = b;
  }
  void imm32(std::uint32_t v) {
    std::memcpy(&buf_[pos_], &v, 4);
    pos_ += 4;
  }
  /// RIP-relative displacement to an absolute cell, computed against the
  /// runtime address of the next instruction.
  void rip32(std::uint64_t entry_addr, std::uint64_t cell) {
    std::int64_t disp = std::int64_t(cell) - std::int64_t(entry_addr + pos_ + 4);
    assert(disp >= INT32_MIN && disp <= INT32_MAX);
    imm32(static_cast<std::uint32_t>(disp));
  }

 private:
  std::span<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

EntryLayout emit_shadow_entry(std::span<std::uint8_t> buf,
                              const EntryParams& p) {
  assert(buf.size() >= kShadowEntryMaxLen);
  std::memset(buf.data(), 0xcc, kShadowEntryMaxLen);  // int3 padding

  EntryLayout layout;
  Emitter e(buf);

  // Fixed offsets; the jz below encodes the bypass position directly.
  constexpr std::uint8_t kBypassOff = 34;
  constexpr std::uint8_t kJzEnd = 15;

  // A: pushfq; mov r11, fs:[disp32]; test r11, r11; jz bypass
  layout.seg_a = e.pos();
  e.bytes({0x9c});
  e.bytes({0x64, 0x4c, 0x8b, 0x1c, 0x25});
  e.imm32(static_cast<std::uint32_t>(p.tls_disp));
  e.bytes({0x4d, 0x85, 0xdb});
  e.bytes({0x74, kBypassOff - kJzEnd});

  // B: incq [r11 + counts + 8*site]
  layout.seg_b = e.pos();
  e.bytes({0x49, 0xff, 0x83});
  e.imm32(static_cast<std::uint32_t>(kCtxCountsOffset + 8ull * p.site_id));

  // C: mov r11d, site; jmp [rip -> header.enter]
  layout.seg_c = e.pos();
  e.bytes({0x41, 0xbb});
  e.imm32(p.site_id);
  e.bytes({0xff, 0x25});
  e.rip32(p.entry_addr, p.header_addr + kHeaderEnterCell);

  // bypass: popfq; jmp [rip -> record.route]
  layout.bypass = e.pos();
  assert(layout.bypass == kBypassOff);
  e.bytes({0x9d});
  e.bytes({0xff, 0x25});
  e.rip32(p.entry_addr, p.record_addr + kRecordRouteOff);

  // D: mov r11d, site; jmp [rip -> header.exit]
  layout.seg_d = e.pos();
  e.bytes({0x41, 0xbb});
  e.imm32(p.site_id);
  e.bytes({0xff, 0x25});
  e.rip32(p.entry_addr, p.header_addr + kHeaderExitCell);

  if (p.lazy) {
    // push reloc_index; jmp [rip -> record.plt0]
    layout.lazy_launch = e.pos();
    e.bytes({0x68});
    e.imm32(p.reloc_index);
    e.bytes({0xff, 0x25});
    e.rip32(p.entry_addr, p.record_addr + kRecordPlt0Off);
  }

  layout.total = e.pos();
  assert(layout.total <= kShadowEntryMaxLen);
  return layout;
}

std::size_t emit_slot_patch(std::span<std::uint8_t, 16> buf,
                            std::uint64_t target) {
  buf[0] = 0x49;  // movabs r11, imm64
  buf[1] = 0xbb;
  std::memcpy(&buf[2], &target, 8);
  buf[10] = 0x41;  // jmp r11
  buf[11] = 0xff;
  buf[12] = 0xe3;
  buf[13] = buf[14] = buf[15] = 0xcc;
  return 13;
}

}  // namespace xflow
