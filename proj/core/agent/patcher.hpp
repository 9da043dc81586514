// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Applies and reverts the in-memory patches: 16-byte linkage slots
// rewritten to jump into generated entry code, and pointer cells swapped
// to entry addresses. A patch window briefly widens the page protection,
// then restores what /proc/self/maps reported before.
//
// Slot writes are ordered tail-first with an atomic 8-byte head store, so
// the head flips the decoded instruction stream in one shot. That makes
// patching safe against threads that are about to enter the slot; it does
// not make it safe against a thread already mid-slot, which is why images
// are patched before their code is reachable (startup, or inside dlopen
// before it returns). unpatch() has no such ordering and is only run
// quiesced, by the self test.
#pragma once

#include <cstdint>

#include "agent_state.hpp"

namespace xflow::agent {

/// Rewrites the 16-byte slot at `slot_addr` to jump to `target`.
/// `orig_prot` is the page protection to restore afterwards.
bool patch_slot(std::uintptr_t slot_addr, std::uint64_t target,
                int orig_prot, SiteId site, PatchRecord& out);

/// Replaces the pointer cell at `cell_addr` with `value`.
bool patch_cell(std::uintptr_t cell_addr, std::uint64_t value,
                int orig_prot, SiteId site, PatchRecord& out);

/// Puts back what the patch replaced.
bool unpatch(const PatchRecord& rec);

/// True while the patched bytes are still in place.
bool patch_intact(const PatchRecord& rec);

}  // namespace xflow::agent
