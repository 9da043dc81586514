// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// The process-wide shadow region: one reservation holding a header page
// (shared thunk address cells), the generated entry code for every site,
// and a writable side record per site. Keeping all three in one mapping
// guarantees every rip-relative reference stays in range.
//
// Code pages are written while non-executable, sealed read+execute, and
// never unsealed. A batch that would continue on an already-sealed page
// skips forward to the next page boundary instead, so site ids may have
// small gaps after a dlopen or dlsym install; ledger rows only exist for
// sites that fire, so the gaps cost nothing but address space.
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "xflow/shadow_codegen.hpp"
#include "xflow/types.hpp"

namespace xflow {

struct SiteRecord {
  std::atomic<std::uint64_t> resolved{0};  // real target; 0 = not yet known
  std::atomic<std::uint64_t> route{0};     // bypass/dispatch target cell
  std::uint64_t got_cell = 0;        // live cell address; 0 for Dlsym sites
  std::uint64_t initial_cell = 0;    // pre-patch cell value (lazy marker)
  std::uint64_t plt0 = 0;            // resolver entry; doubles as jump cell
  std::atomic<std::uint32_t> resolver_launches{0};
  std::uint32_t site_id = 0;
  std::uint16_t kind = 0;   // SiteKind
  std::uint16_t flags = 0;  // kRecWait
  std::uint16_t d_off = 0;  // segment D offset inside the entry
  std::uint16_t code_len = 0;
  std::uint64_t reserved = 0;  // keeps the record cache-line sized
};

inline constexpr std::uint16_t kRecWait = 1;

static_assert(sizeof(SiteRecord) == 64);
static_assert(offsetof(SiteRecord, route) == kRecordRouteOff);
static_assert(offsetof(SiteRecord, plt0) == kRecordPlt0Off);

class ShadowRegion {
 public:
  /// Reserves space for `capacity` sites and publishes the two thunk
  /// addresses in the header. Returns false when the reservation fails.
  bool init(std::uint32_t capacity, std::uint64_t enter_thunk,
            std::uint64_t exit_thunk, std::int32_t tls_disp);

  std::uint32_t capacity() const { return capacity_; }

  /// Next usable site id. Empty when the region is exhausted; the caller
  /// degrades by leaving the site uninstrumented.
  std::optional<SiteId> allocate_site();

  /// Generates entry code for `id` on the open (writable) tail and fills
  /// its record. Not executable until seal_batch(). For lazy sites pass
  /// the resolver entry and the pre-patch cell value; for all others pass
  /// the already-resolved target.
  std::uint64_t install_entry(SiteId id, const ApiSite& site,
                              std::uint64_t plt0, std::uint64_t initial_cell,
                              std::uint64_t resolved_target);

  /// Makes every entry generated since the last seal executable.
  void seal_batch();

  SiteRecord* record(SiteId id);
  const SiteRecord* record(SiteId id) const;

  /// Base of the generated code; entry i starts at code_base() + i * stride.
  std::uint8_t* code_base() const { return code_base_; }

  std::uint64_t entry_addr(SiteId id) const;
  std::uint64_t return_target(SiteId id) const;  // segment D address

  /// Reverse lookup: the site whose entry code covers `addr`, or kNoSite.
  SiteId site_by_entry(std::uint64_t addr) const;

  /// True when `addr` lies anywhere inside the reservation. Used to spot
  /// cells that already route through us and must not be patched again.
  bool contains(std::uint64_t addr) const {
    const std::uint64_t base = reinterpret_cast<std::uint64_t>(base_);
    return base_ && addr >= base && addr < base + total_size_;
  }

  /// Upper bound over allocated site ids (gaps included).
  std::uint32_t allocated() const {
    return next_id_.load(std::memory_order_acquire);
  }

 private:
  std::uint8_t* base_ = nullptr;
  std::size_t total_size_ = 0;
  std::uint8_t* code_base_ = nullptr;
  SiteRecord* records_ = nullptr;
  std::uint32_t capacity_ = 0;
  std::atomic<std::uint32_t> next_id_{0};
  std::size_t sealed_end_ = 0;  // code offset below which pages are r-x
  std::int32_t tls_disp_ = 0;
};

}  // namespace xflow
