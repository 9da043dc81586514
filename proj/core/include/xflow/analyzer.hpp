// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Offline side: merges per-thread ledgers from one run and derives the
// three reports. Merging keys rows by (caller image path, symbol, kind),
// so thread-local ids unify; u64 sums make the result independent of file
// order. Symbol ownership (which library's code a call executes) comes
// from scanning the dynamic exports of the recorded images, first image in
// id order wins, "<unknown>" when no recorded image exports the name.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xflow/folder.hpp"
#include "xflow/ledger_io.hpp"
#include "xflow/types.hpp"
#include "xflow/wait_set.hpp"

namespace xflow {

struct ThreadSummary {
  std::uint64_t ordinal = 0;
  std::uint64_t tid = 0;
  std::uint64_t group_tag = 0;
  std::uint64_t total_cycles = 0;
  std::uint64_t exec_attr = 0;  // attributed cycles outside wait APIs
  std::uint64_t wait_raw = 0;   // parked wall cycles inside wait APIs
};

struct MergedRow {
  std::string caller_path;
  std::string symbol;
  SiteKind kind = SiteKind::PltEager;
  bool wait = false;
  std::string owner_path;  // filled by resolve_owners
  SiteCounters counters;
};

struct Aggregate {
  std::uint64_t pid = 0;
  std::uint64_t hz = 0;
  std::string app_path;               // image 0 of the run
  std::vector<std::string> images;    // union, app first
  std::vector<ThreadSummary> threads; // sorted by ordinal
  std::vector<MergedRow> rows;        // sorted by (caller, symbol, kind)
  std::vector<std::string> warnings;
  bool ok = false;
  std::string error;  // set when !ok
};

/// Merges every ledger in `dir`. Multiple pids (stale runs sharing the
/// directory) resolve to the pid with the newest file, with a warning.
Aggregate merge_ledger_dir(const std::string& dir, const SymbolSet& wait_set);

/// Merge of an explicit file list; order does not affect the result.
Aggregate merge_ledger_files(const std::vector<std::string>& paths,
                             const SymbolSet& wait_set);

/// Fills MergedRow::owner_path across the aggregate.
void resolve_owners(Aggregate& agg);

/// Resolves a user-supplied image selector (exact path, basename, or
/// unique substring) against agg.images. Empty selector means the app.
/// On failure returns empty and appends an explanation to `error`.
std::string select_image(const Aggregate& agg, const std::string& selector,
                         std::string& error);

struct ViewRow {
  std::string name;   // "self", "wait", or callee basename
  std::string path;   // empty for self/wait
  std::uint64_t cycles = 0;
  double seconds = 0;
  double percent = 0;
};

struct ComponentView {
  std::string component;  // image path
  std::uint64_t hz = 0;
  std::uint64_t total_cycles = 0;
  std::vector<ViewRow> rows;
  std::vector<std::string> notes;
};

/// Time decomposition for one image: the cycles attributed to it split
/// into its own code (self), parked time (wait), and each callee library.
/// self is the remainder after subtracting the others from the component
/// total, clamped at zero with a note when measurements overshoot.
ComponentView build_component_view(const Aggregate& agg,
                                   const std::string& image_path);

struct ApiRow {
  std::string symbol;
  std::uint64_t count = 0;
  std::uint64_t cycles = 0;
  double seconds = 0;
  double percent = 0;
};

struct ApiView {
  std::string library;
  std::uint64_t hz = 0;
  std::uint64_t total_cycles = 0;
  std::vector<ApiRow> rows;  // attributed cycles descending
  std::vector<std::string> notes;
};

/// Ranks the APIs a library spent time in, as a share of that library's
/// total attributed cycles, summed across all callers.
ApiView build_api_view(const Aggregate& agg, const std::string& image_path);

struct GroupRow {
  std::uint64_t tag = 0;
  std::uint32_t threads = 0;
  std::uint64_t mean_exec_cycles = 0;
  std::uint64_t mean_wait_cycles = 0;
};

struct ImbalanceReport {
  double threshold = 4.0;
  double ratio = 1.0;  // max/min of group mean exec cycles
  bool flagged = false;
  std::vector<GroupRow> groups;  // mean exec descending
  std::vector<std::string> notes;
};

/// Compares per-group mean execution time across worker-thread groups
/// (the main thread, tag 0, is reported but never part of the ratio).
ImbalanceReport build_imbalance(const Aggregate& agg, double threshold);

std::string render_text(const ComponentView& view);
std::string render_text(const ApiView& view);
std::string render_text(const ImbalanceReport& report);
std::string render_json(const ComponentView& view);
std::string render_json(const ApiView& view);
std::string render_json(const ImbalanceReport& report);

/// Default report page: a component breakdown plus, when the component
/// called anything, the api view of its busiest callee (api may be null).
std::string render_json_overview(const ComponentView& component,
                                 const ApiView* api);

}  // namespace xflow
