// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// /proc/<pid>/maps reader. The interceptor needs two things from it: which
// address ranges are executable (to tell function pointers from data when a
// relocation does not say), and what protection a page had before a patch
// window opened (so it can be restored faithfully afterwards).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xflow/types.hpp"

namespace xflow {

struct MapEntry {
  std::uintptr_t start = 0;
  std::uintptr_t end = 0;
  int prot = 0;  // PROT_* bits
  bool shared = false;
  std::uint64_t offset = 0;
  std::string path;  // empty for anonymous
};

/// Parses maps-format text. Exposed for tests; use read_self_maps() live.
std::vector<MapEntry> parse_maps(std::string_view text);

std::vector<MapEntry> read_self_maps();

/// Sorted executable ranges, merged when adjacent.
class ExecRanges {
 public:
  ExecRanges() = default;
  explicit ExecRanges(const std::vector<MapEntry>& maps);

  bool contains(std::uintptr_t addr) const;
  std::size_t size() const { return ranges_.size(); }

 private:
  std::vector<AddrRange> ranges_;
};

/// PROT_* bits of the mapping covering addr, or -1 when unmapped.
int protection_at(const std::vector<MapEntry>& maps, std::uintptr_t addr);

}  // namespace xflow
