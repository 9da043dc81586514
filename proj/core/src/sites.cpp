// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/sites.hpp"

#include <cstring>
#include <map>

namespace xflow {

std::vector<PltSlot> decode_plt_slots(std::span<const std::uint8_t> bytes,
                                      std::uintptr_t section_vaddr,
                                      std::uint64_t entsize) {
  std::vector<PltSlot> out;
  if (entsize == 0) entsize = 16;
  if (entsize < 6) return out;
  for (std::size_t base = 0; base + entsize <= bytes.size(); base += entsize) {
    // First indirect jump in the entry wins. Prefixes seen in practice:
    // endbr64 (f3 0f 1e fa), bnd (f2). Scan a small window so layout
    // variations do not matter.
    std::size_t limit = entsize - 6;
    for (std::size_t off = 0; off <= limit && off <= 10; ++off) {
      if (bytes[base + off] != 0xff || bytes[base + off + 1] != 0x25) continue;
      std::int32_t disp;
      std::memcpy(&disp, &bytes[base + off + 2], 4);
      std::uintptr_t next = section_vaddr + base + off + 6;
      out.push_back({section_vaddr + base, next + disp});
      break;
    }
  }
  return out;
}

SiteDerivation derive_sites(const LoadedImage& img, const ElfFile& elf,
                            const ExecRanges& exec, const SymbolSet& never,
                            const SymbolSet& waits, const CellReader& cell) {
  SiteDerivation out;

  auto plt_range = elf.section_range(".plt");
  if (plt_range) out.plt0 = img.bias + plt_range->lo;

  // Map GOT cell -> patchable slot. Calls land on .plt.sec entries when
  // that section exists (the .plt entries are then only the lazy-resolution
  // side), otherwise on .plt entries directly.
  std::map<std::uintptr_t, std::uintptr_t> cell_to_slot;
  auto ingest = [&](std::string_view section) {
    auto bytes = elf.section_bytes(section);
    if (bytes.empty()) return false;
    auto range = elf.section_range(section);
    if (!range) return false;
    for (const auto& s :
         decode_plt_slots(bytes, range->lo, elf.section_entsize(section)))
      cell_to_slot.emplace(s.cell, s.slot);
    return true;
  };
  if (!ingest(".plt.sec")) ingest(".plt");

  for (std::size_t i = 0; i < elf.plt_relocs().size(); ++i) {
    const RelocEntry& r = elf.plt_relocs()[i];
    if (r.symbol.empty()) continue;
    if (never.contains(r.symbol)) {
      out.skipped.push_back(std::string(r.symbol) + ": never-intercept");
      continue;
    }
    auto slot_it = cell_to_slot.find(r.offset);
    if (slot_it == cell_to_slot.end()) {
      out.skipped.push_back(std::string(r.symbol) + ": no linkage slot");
      continue;
    }
    std::uintptr_t cell_rt = img.bias + r.offset;
    std::uint64_t value = cell(cell_rt);
    if (value == 0) {
      out.skipped.push_back(std::string(r.symbol) + ": null cell");
      continue;
    }
    bool unresolved =
        plt_range && value >= img.bias + plt_range->lo &&
        value < img.bias + plt_range->hi;

    ApiSite site;
    site.caller = img.id;
    site.symbol = std::string(r.symbol);
    site.kind = unresolved ? SiteKind::PltLazy : SiteKind::PltEager;
    site.got_cell = cell_rt;
    site.plt_slot = img.bias + slot_it->second;
    site.reloc_index = static_cast<std::uint32_t>(i);
    site.wait_api = waits.contains(r.symbol);
    out.sites.push_back(std::move(site));
  }

  for (std::size_t i = 0; i < elf.glob_dat_relocs().size(); ++i) {
    const RelocEntry& r = elf.glob_dat_relocs()[i];
    if (r.symbol.empty()) continue;
    if (never.contains(r.symbol)) {
      out.skipped.push_back(std::string(r.symbol) + ": never-intercept");
      continue;
    }
    std::uintptr_t cell_rt = img.bias + r.offset;
    std::uint64_t value = cell(cell_rt);
    if (!cell_holds_code(value, exec)) continue;  // data, or unresolved weak

    ApiSite site;
    site.caller = img.id;
    site.symbol = std::string(r.symbol);
    site.kind = SiteKind::DynGot;
    site.got_cell = cell_rt;
    site.reloc_index = static_cast<std::uint32_t>(i);
    site.wait_api = waits.contains(r.symbol);
    out.sites.push_back(std::move(site));
  }

  return out;
}

}  // namespace xflow
