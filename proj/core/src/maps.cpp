// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/maps.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>

namespace xflow {
namespace {

std::uintptr_t parse_hex(std::string_view& s) {
  std::uintptr_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  s.remove_prefix(static_cast<std::size_t>(p - s.data()));
  return ec == std::errc() ? v : 0;
}

}  // namespace

std::vector<MapEntry> parse_maps(std::string_view text) {
  std::vector<MapEntry> out;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty()) continue;

    MapEntry e;
    e.start = parse_hex(line);
    if (line.empty() || line[0] != '-') continue;
    line.remove_prefix(1);
    e.end = parse_hex(line);
    if (line.empty() || line[0] != ' ') continue;
    line.remove_prefix(1);
    if (line.size() < 4) continue;
    if (line[0] == 'r') e.prot |= PROT_READ;
    if (line[1] == 'w') e.prot |= PROT_WRITE;
    if (line[2] == 'x') e.prot |= PROT_EXEC;
    e.shared = line[3] == 's';
    line.remove_prefix(4);
    if (!line.empty() && line[0] == ' ') line.remove_prefix(1);
    e.offset = parse_hex(line);
    // device and inode fields
    for (int field = 0; field < 2 && !line.empty(); ++field) {
      line.remove_prefix(1);  // space
      auto sp = line.find(' ');
      line.remove_prefix(sp == std::string_view::npos ? line.size() : sp);
    }
    auto path_pos = line.find_first_not_of(' ');
    if (path_pos != std::string_view::npos)
      e.path.assign(line.substr(path_pos));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<MapEntry> read_self_maps() {
  // Read with plain descriptors: this runs inside instrumented processes
  // and must not depend on stdio buffering or allocation beyond the string.
  int fd = open("/proc/self/maps", O_RDONLY | O_CLOEXEC);
  if (fd < 0) return {};
  std::string text;
  char buf[16384];
  for (;;) {
    ssize_t n = read(fd, buf, sizeof buf);
    if (n <= 0) break;
    text.append(buf, static_cast<std::size_t>(n));
  }
  close(fd);
  return parse_maps(text);
}

ExecRanges::ExecRanges(const std::vector<MapEntry>& maps) {
  for (const auto& m : maps)
    if (m.prot & PROT_EXEC) ranges_.push_back({m.start, m.end});
  std::sort(ranges_.begin(), ranges_.end(),
            [](const AddrRange& a, const AddrRange& b) { return a.lo < b.lo; });
  std::vector<AddrRange> merged;
  for (const auto& r : ranges_) {
    if (!merged.empty() && r.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, r.hi);
    else
      merged.push_back(r);
  }
  ranges_ = std::move(merged);
}

bool ExecRanges::contains(std::uintptr_t addr) const {
  auto it = std::upper_bound(
      ranges_.begin(), ranges_.end(), addr,
      [](std::uintptr_t a, const AddrRange& r) { return a < r.lo; });
  if (it == ranges_.begin()) return false;
  --it;
  return it->contains(addr);
}

int protection_at(const std::vector<MapEntry>& maps, std::uintptr_t addr) {
  for (const auto& m : maps)
    if (addr >= m.start && addr < m.end) return m.prot;
  return -1;
}

}  // namespace xflow
