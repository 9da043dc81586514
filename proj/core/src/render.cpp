// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include <cinttypes>
#include <cstdarg>
#include <cstdio>

#include <json.hpp>

#include "xflow/analyzer.hpp"

namespace xflow {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_line(const char* fmt, ...)
    __attribute__((format(printf, 1, 2)));

std::string format_line(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

void append_notes(std::string& out, const std::vector<std::string>& notes) {
  for (const auto& n : notes) out += format_line("note: %s\n", n.c_str());
}

ordered_json json_notes(const std::vector<std::string>& notes) {
  ordered_json arr = ordered_json::array();
  for (const auto& n : notes) arr.push_back(n);
  return arr;
}

ordered_json component_json(const ComponentView& view) {
  ordered_json j;
  j["schema"] = "xflow.component";
  j["version"] = 1;
  j["component"] = view.component;
  j["hz"] = view.hz;
  j["total_cycles"] = view.total_cycles;
  j["rows"] = ordered_json::array();
  for (const auto& row : view.rows) {
    ordered_json r;
    r["name"] = row.name;
    if (!row.path.empty()) r["path"] = row.path;
    r["cycles"] = row.cycles;
    r["seconds"] = row.seconds;
    r["percent"] = row.percent;
    j["rows"].push_back(std::move(r));
  }
  j["notes"] = json_notes(view.notes);
  return j;
}

ordered_json api_json(const ApiView& view) {
  ordered_json j;
  j["schema"] = "xflow.api";
  j["version"] = 1;
  j["library"] = view.library;
  j["hz"] = view.hz;
  j["total_cycles"] = view.total_cycles;
  j["rows"] = ordered_json::array();
  for (const auto& row : view.rows) {
    ordered_json r;
    r["symbol"] = row.symbol;
    r["count"] = row.count;
    r["cycles"] = row.cycles;
    r["seconds"] = row.seconds;
    r["percent"] = row.percent;
    j["rows"].push_back(std::move(r));
  }
  j["notes"] = json_notes(view.notes);
  return j;
}

}  // namespace

std::string render_text(const ComponentView& view) {
  std::string out;
  out += format_line("component view: %s\n", view.component.c_str());
  out += format_line("total: %" PRIu64 " cycles (%.6f s at %" PRIu64 " hz)\n",
                     view.total_cycles,
                     view.hz ? double(view.total_cycles) / double(view.hz) : 0.0,
                     view.hz);
  out += format_line("%-32s %20s %14s %8s\n", "where", "cycles", "seconds",
                     "percent");
  for (const auto& row : view.rows)
    out += format_line("%-32s %20" PRIu64 " %14.6f %7.1f%%\n",
                       row.name.c_str(), row.cycles, row.seconds, row.percent);
  append_notes(out, view.notes);
  return out;
}

std::string render_text(const ApiView& view) {
  std::string out;
  out += format_line("api view: %s\n", view.library.c_str());
  out += format_line("total attributed: %" PRIu64 " cycles\n",
                     view.total_cycles);
  out += format_line("%-40s %14s %20s %14s %8s\n", "symbol", "count", "cycles",
                     "seconds", "percent");
  for (const auto& row : view.rows)
    out += format_line("%-40s %14" PRIu64 " %20" PRIu64 " %14.6f %7.1f%%\n",
                       row.symbol.c_str(), row.count, row.cycles, row.seconds,
                       row.percent);
  append_notes(out, view.notes);
  return out;
}

std::string render_text(const ImbalanceReport& report) {
  std::string out;
  out += format_line("thread groups: %s (ratio %.2f, threshold %.2f)\n",
                     report.flagged ? "IMBALANCED" : "balanced", report.ratio,
                     report.threshold);
  out += format_line("%-18s %8s %20s %20s\n", "group", "threads",
                     "mean exec cycles", "mean wait cycles");
  for (const auto& g : report.groups)
    out += format_line("%016" PRIx64 "   %8u %20" PRIu64 " %20" PRIu64 "\n",
                       g.tag, g.threads, g.mean_exec_cycles,
                       g.mean_wait_cycles);
  append_notes(out, report.notes);
  return out;
}

std::string render_json(const ComponentView& view) {
  return component_json(view).dump(2) + "\n";
}

std::string render_json(const ApiView& view) {
  return api_json(view).dump(2) + "\n";
}

std::string render_json_overview(const ComponentView& component,
                                 const ApiView* api) {
  ordered_json j;
  j["schema"] = "xflow.overview";
  j["version"] = 1;
  j["component"] = component_json(component);
  j["api"] = api ? api_json(*api) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

std::string render_json(const ImbalanceReport& report) {
  ordered_json j;
  j["schema"] = "xflow.imbalance";
  j["version"] = 1;
  j["threshold"] = report.threshold;
  j["ratio"] = report.ratio;
  j["flagged"] = report.flagged;
  j["groups"] = ordered_json::array();
  for (const auto& g : report.groups) {
    ordered_json r;
    char tag[20];
    snprintf(tag, sizeof tag, "%016" PRIx64, g.tag);
    r["tag"] = tag;
    r["threads"] = g.threads;
    r["mean_exec_cycles"] = g.mean_exec_cycles;
    r["mean_wait_cycles"] = g.mean_wait_cycles;
    j["groups"].push_back(std::move(r));
  }
  j["notes"] = json_notes(report.notes);
  return j.dump(2) + "\n";
}

}  // namespace xflow
