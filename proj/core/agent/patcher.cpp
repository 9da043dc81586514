// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "patcher.hpp"

#include <sys/mman.h>

#include <cstring>

#include "xflow/diag.hpp"
#include "xflow/shadow_codegen.hpp"

namespace xflow::agent {

namespace {

constexpr std::uintptr_t kPageMask = 4095;

bool set_window(std::uintptr_t addr, std::size_t len, int prot) {
  std::uintptr_t page = addr & ~kPageMask;
  std::size_t span = ((addr + len + kPageMask) & ~kPageMask) - page;
  if (mprotect(reinterpret_cast<void*>(page), span, prot) != 0) {
    diag::warn("mprotect(%#zx, %zu, %d) failed", std::size_t(page), span,
               prot);
    return false;
  }
  return true;
}

}  // namespace

bool patch_slot(std::uintptr_t slot_addr, std::uint64_t target,
                int orig_prot, SiteId site, PatchRecord& out) {
  std::uint8_t patch[16];
  emit_slot_patch(std::span<std::uint8_t, 16>(patch), target);

  out.kind = PatchRecord::Kind::Slot;
  out.site = site;
  out.addr = slot_addr;
  out.orig_prot = orig_prot;
  std::memcpy(out.original, reinterpret_cast<void*>(slot_addr), 16);
  std::memcpy(out.patched, patch, 16);

  // Keep the page executable through the window: another thread may be
  // running a neighbouring slot on it.
  if (!set_window(slot_addr, 16, PROT_READ | PROT_WRITE | PROT_EXEC))
    return false;

  auto* head = reinterpret_cast<std::uint64_t*>(slot_addr);
  std::memcpy(reinterpret_cast<void*>(slot_addr + 8), patch + 8, 8);
  std::uint64_t head_val;
  std::memcpy(&head_val, patch, 8);
  __atomic_store_n(head, head_val, __ATOMIC_RELEASE);

  set_window(slot_addr, 16, orig_prot);
  return true;
}

bool patch_cell(std::uintptr_t cell_addr, std::uint64_t value,
                int orig_prot, SiteId site, PatchRecord& out) {
  out.kind = PatchRecord::Kind::Cell;
  out.site = site;
  out.addr = cell_addr;
  out.orig_prot = orig_prot;
  out.original[0] = *reinterpret_cast<std::uint64_t*>(cell_addr);
  out.original[1] = 0;
  out.patched[0] = value;
  out.patched[1] = 0;

  const bool writable = (orig_prot & PROT_WRITE) != 0;
  if (!writable && !set_window(cell_addr, 8, orig_prot | PROT_WRITE))
    return false;

  __atomic_store_n(reinterpret_cast<std::uint64_t*>(cell_addr), value,
                   __ATOMIC_RELEASE);

  if (!writable) set_window(cell_addr, 8, orig_prot);
  return true;
}

bool unpatch(const PatchRecord& rec) {
  if (rec.kind == PatchRecord::Kind::Cell) {
    const bool writable = (rec.orig_prot & PROT_WRITE) != 0;
    if (!writable && !set_window(rec.addr, 8, rec.orig_prot | PROT_WRITE))
      return false;
    __atomic_store_n(reinterpret_cast<std::uint64_t*>(rec.addr),
                     rec.original[0], __ATOMIC_RELEASE);
    if (!writable) set_window(rec.addr, 8, rec.orig_prot);
    return true;
  }
  if (!set_window(rec.addr, 16, PROT_READ | PROT_WRITE | PROT_EXEC))
    return false;
  std::memcpy(reinterpret_cast<void*>(rec.addr), rec.original, 16);
  set_window(rec.addr, 16, rec.orig_prot);
  return true;
}

bool patch_intact(const PatchRecord& rec) {
  const std::size_t len = rec.kind == PatchRecord::Kind::Cell ? 8 : 16;
  return std::memcmp(reinterpret_cast<void*>(rec.addr), rec.patched, len) ==
         0;
}

}  // namespace xflow::agent
