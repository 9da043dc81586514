// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/folder.hpp"

namespace xflow {

void ThreadLedger::fold(SiteId site, bool timed, std::uint64_t duration_cycles,
                        std::uint64_t scale, std::uint64_t active_threads) {
  fold_count(site);
  if (timed) fold_duration(site, duration_cycles, scale, active_threads);
}

void ThreadLedger::fold_duration(SiteId site, std::uint64_t duration_cycles,
                                 std::uint64_t scale,
                                 std::uint64_t active_threads) {
  fold_duration_into(timed_[site], raw_[site], attr_[site], duration_cycles,
                     scale, active_threads);
}

}  // namespace xflow
