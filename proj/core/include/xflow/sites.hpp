// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Derives interceptable API sites from a loaded image's link structures.
// Works from the on-disk ELF plus a reader for live GOT cells, so the same
// code is exercised in-process by the agent and offline by tests.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xflow/elf_file.hpp"
#include "xflow/maps.hpp"
#include "xflow/types.hpp"
#include "xflow/wait_set.hpp"

namespace xflow {

/// One procedure-linkage slot and the GOT cell its indirect jump reads.
/// Both addresses are link-time vaddrs.
struct PltSlot {
  std::uintptr_t slot = 0;
  std::uintptr_t cell = 0;
};

/// Decodes `jmp *disp32(%rip)` out of fixed-stride linkage entries,
/// tolerating endbr64 and bnd prefixes. Entries without such a jump (the
/// resolver header, padding) simply produce no slot.
std::vector<PltSlot> decode_plt_slots(std::span<const std::uint8_t> bytes,
                                      std::uintptr_t section_vaddr,
                                      std::uint64_t entsize);

/// True when a data-relocation cell holds a code address: the heuristic
/// that separates function pointers from data pointers.
inline bool cell_holds_code(std::uint64_t value, const ExecRanges& exec) {
  return value != 0 && exec.contains(value);
}

struct SiteDerivation {
  std::vector<ApiSite> sites;   // ids unassigned; caller numbers them
  std::uintptr_t plt0 = 0;      // runtime resolver entry, 0 when absent
  std::vector<std::string> skipped;  // human-readable skip notes
};

using CellReader = std::function<std::uint64_t(std::uintptr_t)>;

/// Enumerates every interceptable site of `img`: jump-slot relocations
/// (lazy or eager according to the live cell) and data relocations whose
/// cells hold code addresses. Symbols in `never` are excluded.
SiteDerivation derive_sites(const LoadedImage& img, const ElfFile& elf,
                            const ExecRanges& exec, const SymbolSet& never,
                            const SymbolSet& waits, const CellReader& cell);

}  // namespace xflow
