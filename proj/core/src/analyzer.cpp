// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/analyzer.hpp"

#include <dirent.h>
#include <sys/stat.h>

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "xflow/elf_file.hpp"
#include "xflow/image_registry.hpp"

namespace xflow {
namespace {

struct FoundLedger {
  std::string path;
  std::uint64_t pid = 0;
  std::uint64_t ordinal = 0;
  time_t mtime = 0;
  bool retry = false;
};

std::vector<FoundLedger> list_ledgers(const std::string& dir,
                                      std::vector<std::string>& warnings) {
  std::vector<FoundLedger> out;
  DIR* d = opendir(dir.c_str());
  if (!d) return out;
  while (dirent* e = readdir(d)) {
    std::string_view name = e->d_name;
    bool retry = false;
    if (name.ends_with(".retry")) {
      name.remove_suffix(6);
      retry = true;
    }
    auto parsed = parse_ledger_file_name(name);
    if (!parsed) continue;
    FoundLedger f;
    f.path = dir + "/" + e->d_name;
    f.pid = parsed->first;
    f.ordinal = parsed->second;
    f.retry = retry;
    struct stat st {};
    if (stat(f.path.c_str(), &st) == 0) f.mtime = st.st_mtime;
    out.push_back(std::move(f));
  }
  closedir(d);

  // A clean write supersedes its own .retry fallback.
  std::vector<FoundLedger> filtered;
  for (auto& f : out) {
    if (f.retry) {
      bool has_clean = std::any_of(out.begin(), out.end(), [&](auto& o) {
        return !o.retry && o.pid == f.pid && o.ordinal == f.ordinal;
      });
      if (has_clean) continue;
      warnings.push_back("using retry fallback file " + f.path);
    }
    filtered.push_back(std::move(f));
  }
  return filtered;
}

struct RowKey {
  std::string caller;
  std::string symbol;
  SiteKind kind;
  bool operator<(const RowKey& o) const {
    if (caller != o.caller) return caller < o.caller;
    if (symbol != o.symbol) return symbol < o.symbol;
    return kind < o.kind;
  }
};

Aggregate merge_parsed(
    std::vector<std::pair<std::uint64_t, LedgerParse>> files,  // ordinal
    const SymbolSet& wait_set) {
  Aggregate agg;

  // Deterministic regardless of input order.
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::map<RowKey, SiteCounters> rows;
  std::map<std::string, std::uint64_t> image_first_seen;
  bool have_hz = false;

  for (auto& [ordinal, parsed] : files) {
    if (!parsed.ok) {
      agg.warnings.push_back("rejected ledger (ordinal " +
                             std::to_string(ordinal) + "): " + parsed.error);
      continue;
    }
    for (auto& w : parsed.warnings)
      agg.warnings.push_back("ordinal " + std::to_string(ordinal) + ": " + w);

    const LedgerHeader& h = parsed.content.header;
    if (!have_hz) {
      agg.hz = h.hz;
      have_hz = true;
    } else if (h.hz && agg.hz) {
      double drift = h.hz > agg.hz ? double(h.hz) / double(agg.hz)
                                   : double(agg.hz) / double(h.hz);
      if (drift > 1.01)
        agg.warnings.push_back("clock rate differs between threads");
    }

    std::unordered_map<std::uint32_t, std::string> image_path;
    for (const auto& img : h.images) {
      image_path[img.id] = img.path;
      if (img.id == 0 && agg.app_path.empty()) agg.app_path = img.path;
      else if (img.id == 0 && agg.app_path != img.path)
        agg.warnings.push_back("executable path differs between ledgers");
      image_first_seen.emplace(img.path, (std::uint64_t(img.id) << 32) | ordinal);
    }

    ThreadSummary ts;
    ts.ordinal = ordinal;
    ts.tid = h.tid;
    ts.group_tag = h.group_tag;
    ts.total_cycles = h.total_cycles;

    for (const auto& row : parsed.content.rows) {
      auto it = image_path.find(row.caller_image);
      std::string caller = it != image_path.end()
                               ? it->second
                               : "<image " + std::to_string(row.caller_image) +
                                     ">";
      if (it == image_path.end())
        agg.warnings.push_back("row references unknown image id " +
                               std::to_string(row.caller_image));
      RowKey key{std::move(caller), row.symbol, row.kind};
      SiteCounters& c = rows[key];
      c.count += row.counters.count;
      c.timed_count += row.counters.timed_count;
      c.raw_cycles += row.counters.raw_cycles;
      c.attributed_cycles += row.counters.attributed_cycles;
      // Exec comparisons use attributed (effective) time; wait sums use
      // the parked wall time, which is what load imbalance shows up in.
      if (wait_set.contains(row.symbol))
        ts.wait_raw += row.counters.raw_cycles;
      else
        ts.exec_attr += row.counters.attributed_cycles;
    }
    agg.threads.push_back(ts);
  }

  if (!have_hz) {
    agg.error = "no readable ledger files";
    return agg;
  }

  // Images ordered by (id, ordinal) of first sighting: app stays first.
  std::vector<std::pair<std::uint64_t, std::string>> ordered;
  for (auto& [path, rank] : image_first_seen) ordered.push_back({rank, path});
  std::sort(ordered.begin(), ordered.end());
  for (auto& [rank, path] : ordered) agg.images.push_back(path);

  for (auto& [key, counters] : rows) {
    MergedRow row;
    row.caller_path = key.caller;
    row.symbol = key.symbol;
    row.kind = key.kind;
    row.wait = wait_set.contains(key.symbol);
    row.counters = counters;
    agg.rows.push_back(std::move(row));
  }
  std::sort(agg.threads.begin(), agg.threads.end(),
            [](const ThreadSummary& a, const ThreadSummary& b) {
              return a.ordinal < b.ordinal;
            });
  agg.ok = true;
  return agg;
}

}  // namespace

Aggregate merge_ledger_dir(const std::string& dir, const SymbolSet& wait_set) {
  Aggregate agg;
  std::vector<std::string> list_warnings;
  auto found = list_ledgers(dir, list_warnings);
  if (found.empty()) {
    agg.error = "no ledger files in " + dir;
    return agg;
  }

  // One run per report: on pid collisions keep the newest run.
  std::map<std::uint64_t, time_t> pid_newest;
  for (const auto& f : found)
    pid_newest[f.pid] = std::max(pid_newest[f.pid], f.mtime);
  std::uint64_t chosen = found.front().pid;
  time_t newest = -1;
  for (auto& [pid, mtime] : pid_newest) {
    if (mtime > newest || (mtime == newest && pid > chosen)) {
      newest = mtime;
      chosen = pid;
    }
  }

  std::vector<std::string> paths;
  for (const auto& f : found)
    if (f.pid == chosen) paths.push_back(f.path);
  Aggregate out = merge_ledger_files(paths, wait_set);
  out.pid = chosen;
  if (pid_newest.size() > 1)
    out.warnings.insert(
        out.warnings.begin(),
        "directory holds " + std::to_string(pid_newest.size()) +
            " runs; reporting pid " + std::to_string(chosen) +
            " (newest)");
  out.warnings.insert(out.warnings.end(), list_warnings.begin(),
                      list_warnings.end());
  return out;
}

Aggregate merge_ledger_files(const std::vector<std::string>& paths,
                             const SymbolSet& wait_set) {
  std::vector<std::pair<std::uint64_t, LedgerParse>> parsed;
  for (const auto& p : paths) {
    std::uint64_t ordinal = parsed.size();
    std::string_view name = p;
    auto slash = name.rfind('/');
    if (slash != std::string_view::npos) name.remove_prefix(slash + 1);
    std::string_view stem = name;
    if (stem.ends_with(".retry")) stem.remove_suffix(6);
    if (auto id = parse_ledger_file_name(stem)) ordinal = id->second;
    parsed.emplace_back(ordinal, read_ledger_file(p));
  }
  return merge_parsed(std::move(parsed), wait_set);
}

void resolve_owners(Aggregate& agg) {
  // Export name sets, built lazily per image.
  std::vector<std::unordered_set<std::string>> exports(agg.images.size());
  std::vector<char> scanned(agg.images.size(), 0);
  std::vector<char> unreadable(agg.images.size(), 0);

  auto exports_of = [&](std::size_t i) -> const std::unordered_set<std::string>& {
    if (!scanned[i]) {
      scanned[i] = 1;
      ElfFile elf = ElfFile::open(agg.images[i]);
      if (!elf.valid()) {
        unreadable[i] = 1;
        agg.warnings.push_back("cannot scan exports of " + agg.images[i] +
                               ": " + elf.error());
      } else {
        elf.for_each_export([&](const ExportedSym& sym) {
          exports[i].emplace(sym.name);
        });
      }
    }
    return exports[i];
  };

  std::unordered_map<std::string, std::string> owner_cache;
  for (auto& row : agg.rows) {
    auto it = owner_cache.find(row.symbol);
    if (it == owner_cache.end()) {
      std::string owner = "<unknown>";
      for (std::size_t i = 0; i < agg.images.size(); ++i) {
        if (exports_of(i).count(row.symbol)) {
          owner = agg.images[i];
          break;
        }
      }
      it = owner_cache.emplace(row.symbol, std::move(owner)).first;
    }
    row.owner_path = it->second;
  }
}

std::string select_image(const Aggregate& agg, const std::string& selector,
                         std::string& error) {
  if (selector.empty()) return agg.app_path;
  if (selector == "<unknown>") return selector;
  std::vector<std::string> matches;
  for (const auto& img : agg.images) {
    if (img == selector) return img;  // exact path wins outright
    if (std::string(path_basename(img)) == selector ||
        img.find(selector) != std::string::npos)
      matches.push_back(img);
  }
  if (matches.size() == 1) return matches.front();
  if (matches.empty()) {
    error = "no recorded image matches '" + selector + "'; images are:";
    for (const auto& img : agg.images) error += "\n  " + img;
  } else {
    error = "'" + selector + "' is ambiguous; candidates:";
    for (const auto& img : matches) error += "\n  " + img;
  }
  return {};
}

namespace {

double cycles_to_seconds(std::uint64_t cycles, std::uint64_t hz) {
  return hz ? double(cycles) / double(hz) : 0.0;
}

double percent_of(std::uint64_t part, std::uint64_t whole) {
  return whole ? 100.0 * double(part) / double(whole) : 0.0;
}

}  // namespace

ComponentView build_component_view(const Aggregate& agg,
                                   const std::string& image_path) {
  ComponentView view;
  view.component = image_path;
  view.hz = agg.hz;

  const bool is_app = image_path == agg.app_path;
  std::uint64_t inbound = 0;
  if (is_app) {
    // The app total is the process's end-to-end runtime: the main thread
    // spans attach to final flush. Attribution divides parallel API time
    // by active threads precisely so callee sums stay comparable to this
    // single span instead of to thread-seconds.
    for (const auto& t : agg.threads) {
      if (t.ordinal == 0) {
        inbound = t.total_cycles;
        break;
      }
      inbound = std::max(inbound, t.total_cycles);
    }
    if (agg.threads.empty() || inbound == 0)
      for (const auto& row : agg.rows) inbound += row.counters.attributed_cycles;
  } else {
    for (const auto& row : agg.rows)
      if (row.owner_path == image_path) inbound += row.counters.attributed_cycles;
  }
  view.total_cycles = inbound;

  std::uint64_t wait = 0;
  std::map<std::string, std::uint64_t> callees;
  for (const auto& row : agg.rows) {
    if (row.caller_path != image_path) continue;
    if (row.wait) {
      wait += row.counters.attributed_cycles;
    } else if (row.owner_path != image_path) {
      callees[row.owner_path] += row.counters.attributed_cycles;
    }
    // Calls that resolve back into the component itself stay inside self.
  }

  std::uint64_t outbound = wait;
  for (auto& [path, cycles] : callees) outbound += cycles;

  std::uint64_t self = 0;
  if (inbound >= outbound) {
    self = inbound - outbound;
  } else {
    view.notes.push_back(
        "callee and wait time exceed the component total by " +
        std::to_string(outbound - inbound) +
        " cycles; self clamped to zero (attribution overshoot)");
  }

  auto add_row = [&](std::string name, std::string path,
                     std::uint64_t cycles) {
    ViewRow row;
    row.name = std::move(name);
    row.path = std::move(path);
    row.cycles = cycles;
    row.seconds = cycles_to_seconds(cycles, agg.hz);
    row.percent = percent_of(cycles, view.total_cycles);
    view.rows.push_back(std::move(row));
  };
  add_row("self", "", self);
  add_row("wait", "", wait);

  std::vector<std::pair<std::string, std::uint64_t>> ordered(callees.begin(),
                                                             callees.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [path, cycles] : ordered)
    add_row(std::string(path_basename(path)), path, cycles);

  if (view.total_cycles == 0)
    view.notes.push_back("component total is zero; percentages omitted");
  return view;
}

ApiView build_api_view(const Aggregate& agg, const std::string& image_path) {
  ApiView view;
  view.library = image_path;
  view.hz = agg.hz;

  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> by_symbol;
  for (const auto& row : agg.rows) {
    if (row.owner_path != image_path) continue;
    auto& [count, cycles] = by_symbol[row.symbol];
    count += row.counters.count;
    cycles += row.counters.attributed_cycles;
  }
  for (auto& [symbol, cc] : by_symbol) view.total_cycles += cc.second;

  for (auto& [symbol, cc] : by_symbol) {
    ApiRow row;
    row.symbol = symbol;
    row.count = cc.first;
    row.cycles = cc.second;
    row.seconds = cycles_to_seconds(cc.second, agg.hz);
    row.percent = percent_of(cc.second, view.total_cycles);
    view.rows.push_back(std::move(row));
  }
  std::sort(view.rows.begin(), view.rows.end(),
            [](const ApiRow& a, const ApiRow& b) {
              if (a.cycles != b.cycles) return a.cycles > b.cycles;
              if (a.count != b.count) return a.count > b.count;
              return a.symbol < b.symbol;
            });
  if (view.rows.empty())
    view.notes.push_back("no recorded API resolves to this image");
  return view;
}

ImbalanceReport build_imbalance(const Aggregate& agg, double threshold) {
  ImbalanceReport report;
  report.threshold = threshold;

  std::map<std::uint64_t, std::pair<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>>>
      groups;  // tag -> (threads, (exec sum, wait sum))
  for (const auto& t : agg.threads) {
    auto& g = groups[t.group_tag];
    g.first += 1;
    g.second.first += t.exec_attr;
    g.second.second += t.wait_raw;
  }
  for (auto& [tag, g] : groups) {
    GroupRow row;
    row.tag = tag;
    row.threads = g.first;
    row.mean_exec_cycles = g.first ? g.second.first / g.first : 0;
    row.mean_wait_cycles = g.first ? g.second.second / g.first : 0;
    report.groups.push_back(row);
  }
  std::sort(report.groups.begin(), report.groups.end(),
            [](const GroupRow& a, const GroupRow& b) {
              if (a.mean_exec_cycles != b.mean_exec_cycles)
                return a.mean_exec_cycles > b.mean_exec_cycles;
              return a.tag < b.tag;
            });

  // Only worker groups participate in the ratio; the main thread's share
  // of work is structurally different and would dominate it.
  std::uint64_t max_mean = 0, min_mean = 0;
  std::uint32_t worker_groups = 0;
  for (const auto& g : report.groups) {
    if (g.tag == 0) continue;
    ++worker_groups;
    max_mean = std::max(max_mean, g.mean_exec_cycles);
    min_mean = worker_groups == 1 ? g.mean_exec_cycles
                                  : std::min(min_mean, g.mean_exec_cycles);
  }
  if (worker_groups >= 2) {
    if (min_mean == 0) {
      report.ratio = max_mean ? double(max_mean) : 1.0;
      if (max_mean)
        report.notes.push_back(
            "a worker group recorded no execution cycles; ratio reported as "
            "the maximum mean");
    } else {
      report.ratio = double(max_mean) / double(min_mean);
    }
    report.flagged = report.ratio > threshold;
  } else {
    report.notes.push_back(
        "fewer than two worker groups; imbalance not applicable");
  }
  return report;
}

}  // namespace xflow
