// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/types.hpp"

#include <cstdio>

namespace xflow {

const char* to_string(SiteKind kind) {
  switch (kind) {
    case SiteKind::PltLazy: return "plt-lazy";
    case SiteKind::PltEager: return "plt-eager";
    case SiteKind::DynGot: return "dyn-got";
    case SiteKind::Dlsym: return "dlsym";
  }
  return "unknown";
}

std::optional<SiteKind> site_kind_from(std::string_view token) {
  if (token == "plt-lazy") return SiteKind::PltLazy;
  if (token == "plt-eager") return SiteKind::PltEager;
  if (token == "dyn-got") return SiteKind::DynGot;
  if (token == "dlsym") return SiteKind::Dlsym;
  return std::nullopt;
}

std::uint64_t thread_group_tag(std::string_view image_basename,
                               std::uint64_t fn_offset) {
  char buf[32];
  int n = std::snprintf(buf, sizeof buf, ":%llx",
                        static_cast<unsigned long long>(fn_offset));
  std::uint64_t h = fnv1a64(image_basename);
  return fnv1a64(std::string_view(buf, static_cast<std::size_t>(n)), h);
}

}  // namespace xflow
