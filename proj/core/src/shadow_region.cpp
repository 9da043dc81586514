// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/shadow_region.hpp"

#include <sys/mman.h>

#include <cstring>
#include <new>

#include "xflow/diag.hpp"

namespace xflow {
namespace {

constexpr std::size_t kPage = 4096;

constexpr std::size_t page_up(std::size_t x) {
  return (x + kPage - 1) & ~(kPage - 1);
}

}  // namespace

bool ShadowRegion::init(std::uint32_t capacity, std::uint64_t enter_thunk,
                        std::uint64_t exit_thunk, std::int32_t tls_disp) {
  if (base_) return true;
  if (capacity == 0) capacity = kDefaultSiteCapacity;

  const std::size_t code_bytes = page_up(capacity * kShadowEntryStride);
  const std::size_t rec_bytes = page_up(capacity * sizeof(SiteRecord));
  total_size_ = kPage + code_bytes + rec_bytes;

  void* mem = mmap(nullptr, total_size_, PROT_READ | PROT_WRITE,
                   MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
  if (mem == MAP_FAILED) {
    diag::note("shadow region reservation failed (%zu bytes)", total_size_);
    return false;
  }
  base_ = static_cast<std::uint8_t*>(mem);
  code_base_ = base_ + kPage;
  records_ = reinterpret_cast<SiteRecord*>(base_ + kPage + code_bytes);
  capacity_ = capacity;
  tls_disp_ = tls_disp;

  auto* header = reinterpret_cast<std::uint64_t*>(base_);
  header[kHeaderEnterCell / 8] = enter_thunk;
  header[kHeaderExitCell / 8] = exit_thunk;
  return true;
}

std::optional<SiteId> ShadowRegion::allocate_site() {
  std::uint32_t id = next_id_.load(std::memory_order_relaxed);
  // Restart on a fresh page when the previous batch sealed the one this
  // id's entry would begin on.
  if (std::size_t(id) * kShadowEntryStride < sealed_end_)
    id = static_cast<std::uint32_t>(
        (sealed_end_ + kShadowEntryStride - 1) / kShadowEntryStride);
  if (id >= capacity_) return std::nullopt;
  next_id_.store(id + 1, std::memory_order_release);
  return id;
}

std::uint64_t ShadowRegion::install_entry(SiteId id, const ApiSite& site,
                                          std::uint64_t plt0,
                                          std::uint64_t initial_cell,
                                          std::uint64_t resolved_target) {
  if (!base_ || id >= capacity_) return 0;

  SiteRecord* rec = new (&records_[id]) SiteRecord();
  rec->got_cell = site.got_cell;
  rec->initial_cell = initial_cell;
  rec->plt0 = plt0;
  rec->site_id = id;
  rec->kind = static_cast<std::uint16_t>(site.kind);
  rec->flags = site.wait_api ? kRecWait : 0;

  EntryParams params;
  params.site_id = id;
  params.tls_disp = tls_disp_;
  params.entry_addr = reinterpret_cast<std::uint64_t>(code_base_) +
                      std::uint64_t(id) * kShadowEntryStride;
  params.record_addr = reinterpret_cast<std::uint64_t>(rec);
  params.header_addr = reinterpret_cast<std::uint64_t>(base_);
  params.reloc_index = site.reloc_index;
  params.lazy = site.kind == SiteKind::PltLazy && resolved_target == 0;

  std::uint8_t* code = code_base_ + std::uint64_t(id) * kShadowEntryStride;
  EntryLayout layout = emit_shadow_entry({code, kShadowEntryMaxLen}, params);
  rec->d_off = layout.seg_d;
  rec->code_len = layout.total;

  if (params.lazy) {
    // Until the dynamic linker resolves the symbol, both the bypass path
    // and the dispatch path replay the resolver handshake.
    rec->route.store(params.entry_addr + layout.lazy_launch,
                     std::memory_order_release);
  } else {
    rec->resolved.store(resolved_target, std::memory_order_release);
    rec->route.store(resolved_target, std::memory_order_release);
  }
  return params.entry_addr;
}

void ShadowRegion::seal_batch() {
  const std::uint32_t end_id = next_id_.load(std::memory_order_acquire);
  if (!base_ || end_id == 0) return;
  // sealed_end_ is always page aligned: it only ever advances to end_off.
  std::size_t end_off = page_up(std::size_t(end_id) * kShadowEntryStride);
  std::size_t start_off = sealed_end_;
  if (end_off <= start_off) return;
  if (mprotect(code_base_ + start_off, end_off - start_off,
               PROT_READ | PROT_EXEC) != 0) {
    diag::note("sealing shadow code pages failed");
    return;
  }
  sealed_end_ = end_off;
}

SiteRecord* ShadowRegion::record(SiteId id) {
  return id < capacity_ ? &records_[id] : nullptr;
}

const SiteRecord* ShadowRegion::record(SiteId id) const {
  return id < capacity_ ? &records_[id] : nullptr;
}

std::uint64_t ShadowRegion::entry_addr(SiteId id) const {
  if (id >= capacity_) return 0;
  return reinterpret_cast<std::uint64_t>(code_base_) +
         std::uint64_t(id) * kShadowEntryStride;
}

std::uint64_t ShadowRegion::return_target(SiteId id) const {
  const SiteRecord* rec = record(id);
  return rec ? entry_addr(id) + rec->d_off : 0;
}

SiteId ShadowRegion::site_by_entry(std::uint64_t addr) const {
  auto base = reinterpret_cast<std::uint64_t>(code_base_);
  if (addr < base) return kNoSite;
  std::uint64_t off = addr - base;
  auto id = static_cast<std::uint32_t>(off / kShadowEntryStride);
  if (id >= next_id_.load(std::memory_order_acquire)) return kNoSite;
  const SiteRecord* rec = record(id);
  if (!rec || off % kShadowEntryStride >= rec->code_len) return kNoSite;
  return id;
}

}  // namespace xflow
