// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Emits the per-site entry code that patched call sites jump to. Each
// entry is a short x86-64 sequence in four segments:
//
//   A  context check: load the thread's context pointer from initial-exec
//      TLS; no context means bypass straight to the real target.
//   B  invocation counter: one inc on this thread's count array. This is
//      the count half of the fold, so even calls that never return are
//      counted.
//   C  dispatch to the shared entry thunk with the site id in r11d. The
//      thunk spills argument registers, runs the entry handler (timing
//      gate, shadow frame push, return-address swap), restores, and jumps
//      to the real API.
//   D  return target: the real API returns here; dispatches to the shared
//      exit thunk, again with the site id, which folds the duration and
//      resumes at the caller's original return address.
//
// Lazy sites get a fifth segment, a resolver launch that replays the
// untouched push/jump handshake so the dynamic linker still performs its
// own resolution exactly once.
//
// rflags are alive across segments A and B (a patched slot may be reached
// mid-comparison); the pushfq/popfq pair brackets them. All segment
// offsets are fixed, so a generated entry differs from another only in its
// encoded constants, and regeneration is byte-for-byte reproducible.
#pragma once

#include <cstdint>
#include <span>

#include "xflow/types.hpp"

namespace xflow {

struct EntryParams {
  std::uint32_t site_id = 0;
  std::int32_t tls_disp = 0;        // fs-relative displacement of the slot
  std::uint64_t entry_addr = 0;     // where this code will execute
  std::uint64_t record_addr = 0;    // this site's SiteRecord
  std::uint64_t header_addr = 0;    // region header (thunk address cells)
  std::uint32_t reloc_index = 0;    // pushed by the resolver launch
  bool lazy = false;                // emit the resolver launch segment
};

struct EntryLayout {
  std::uint16_t seg_a = 0;
  std::uint16_t seg_b = 0;
  std::uint16_t seg_c = 0;
  std::uint16_t bypass = 0;
  std::uint16_t seg_d = 0;       // the return target
  std::uint16_t lazy_launch = 0; // 0 when absent
  std::uint16_t total = 0;
};

// Offsets the generated code dereferences. Keep in sync with SiteRecord
// and the region header (shadow_region.hpp); static_asserts there enforce
// the record side.
inline constexpr std::size_t kHeaderEnterCell = 0;
inline constexpr std::size_t kHeaderExitCell = 8;
inline constexpr std::size_t kRecordRouteOff = 8;
inline constexpr std::size_t kRecordPlt0Off = 32;

/// Writes the entry into buf (must hold kShadowEntryMaxLen bytes).
/// The layout depends only on params.lazy.
EntryLayout emit_shadow_entry(std::span<std::uint8_t> buf,
                              const EntryParams& params);

/// The 16-byte patch written over a linkage slot: movabs r11, target;
/// jmp r11; int3 padding. r11 is free at a linkage boundary by ABI.
/// Returns the patch length actually used (13).
std::size_t emit_slot_patch(std::span<std::uint8_t, 16> buf,
                            std::uint64_t target);

}  // namespace xflow
