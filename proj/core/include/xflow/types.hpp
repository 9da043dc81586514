// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Shared vocabulary for the interception pipeline: loaded images, API call
// sites, and the fixed budgets that keep runtime memory bounded.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xflow {

using ImageId = std::uint32_t;
using SiteId = std::uint32_t;

inline constexpr ImageId kNoImage = 0xffffffffu;
inline constexpr SiteId kNoSite = 0xffffffffu;

/// How an API call site reaches its target. The first three come from link
/// structures of a loaded image; Dlsym sites are minted when a program asks
/// the dynamic loader for a function address at run time.
enum class SiteKind : std::uint16_t {
  PltLazy = 0,   // jump-slot relocation, unresolved at install time
  PltEager = 1,  // jump-slot relocation, already bound (BIND_NOW etc.)
  DynGot = 2,    // data-section relocation that holds a function address
  Dlsym = 3,     // address handed out by the loader lookup API
};

const char* to_string(SiteKind kind);
std::optional<SiteKind> site_kind_from(std::string_view token);

/// One region an image occupies at run time, or one section span.
struct AddrRange {
  std::uintptr_t lo = 0;
  std::uintptr_t hi = 0;

  bool contains(std::uintptr_t a) const { return a >= lo && a < hi; }
  bool empty() const { return hi <= lo; }
};

/// A mapped ELF object. Ids are dense and stable for the process lifetime;
/// id 0 is always the main executable.
struct LoadedImage {
  ImageId id = kNoImage;
  std::string path;
  std::uintptr_t bias = 0;  // runtime address = bias + link-time vaddr
  std::vector<AddrRange> load_ranges;
  bool is_main = false;
  bool is_agent = false;
  bool is_linker = false;
  bool denied = false;  // never instrumented as a caller

  bool contains(std::uintptr_t a) const {
    for (const auto& r : load_ranges)
      if (r.contains(a)) return true;
    return false;
  }
};

/// One interceptable API invocation point: a (caller image, symbol) pair
/// reached through a concrete GOT cell, PLT slot, or loader lookup result.
struct ApiSite {
  SiteId id = kNoSite;
  ImageId caller = kNoImage;
  std::string symbol;
  SiteKind kind = SiteKind::PltEager;
  std::uintptr_t got_cell = 0;   // live cell holding the target (0 for Dlsym)
  std::uintptr_t plt_slot = 0;   // patchable slot (0 for DynGot/Dlsym)
  std::uint32_t reloc_index = 0; // index into the image's jump-slot table
  bool wait_api = false;
};

// Budgets. Per-site shadow code must stay within kShadowEntryMaxLen; the
// stride leaves headroom so layouts can grow without moving neighbours.
inline constexpr std::size_t kShadowEntryMaxLen = 160;
inline constexpr std::size_t kShadowEntryStride = 192;
inline constexpr std::uint32_t kDefaultSiteCapacity = 65536;
inline constexpr std::uint32_t kDefaultShadowDepth = 4096;
inline constexpr std::uint64_t kDefaultTimingRate = 1;

// Offset of the per-thread invocation-count array inside a thread context
// mapping. Generated code bakes this in; see shadow_codegen.
inline constexpr std::size_t kCtxCountsOffset = 4096;

/// FNV-1a, the hash used for thread group tags.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Tag identifying a family of threads by what code they run: the basename
/// of the image that defines the start routine plus its offset inside it.
/// The main thread uses tag 0.
std::uint64_t thread_group_tag(std::string_view image_basename,
                               std::uint64_t fn_offset);

}  // namespace xflow
