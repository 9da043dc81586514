// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Symbol policy tables. The wait set marks APIs whose time is a thread
// parked, not a thread computing; both the runtime (active-thread
// accounting) and the analyzer (Wait rows) consult it. The never-intercept
// set lists APIs that break the one-enter-one-exit call discipline the
// shadow stack depends on.
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace xflow {

class SymbolSet {
 public:
  SymbolSet() = default;
  SymbolSet(std::initializer_list<std::string_view> names);

  void add(std::string_view name);
  bool contains(std::string_view name) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_set<std::string> names_;
};

/// Blocking primitives: condition/barrier waits, joins, semaphores, sleeps,
/// readiness polls. Mutex locks are deliberately absent; short contention
/// is execution, not parking. Extend via XFLOW_WAIT_APIS.
const SymbolSet& default_wait_set();

/// Returns default_wait_set() extended with `extra`.
SymbolSet wait_set_with(const std::vector<std::string>& extra);

/// No-return, returns-twice, and context-switching entry points, plus the
/// exception machinery: none of these can be given a synthetic return
/// address safely.
const SymbolSet& never_intercept_set();

}  // namespace xflow
