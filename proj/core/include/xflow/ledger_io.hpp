// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// The on-disk ledger: one tab-separated file per thread per process.
//
//   XFLOW\t1
//   #tid\t<decimal>
//   #group\t<16 hex digits>
//   #hz\t<decimal>
//   #total_cycles\t<decimal>
//   #image\t<id>\t<path>           (repeated, ascending id; id 0 = the
//                                    profiled executable)
//   <site>\t<image>\t<symbol>\t<kind>\t<count>\t<timed>\t<raw>\t<attr>
//
// Counter fields are zero-padded to 20 digits (the group tag to 16 hex
// digits) so equal workloads of different lengths produce byte-identical
// file sizes. Rows with count 0 are omitted. Files are named
// xflow.<pid>.<ordinal>.tsv and replaced atomically, so a snapshot and a
// final flush never leave a torn file behind.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xflow/folder.hpp"
#include "xflow/types.hpp"

namespace xflow {

struct LedgerImageRow {
  std::uint32_t id = 0;
  std::string path;
};

struct LedgerHeader {
  std::uint64_t tid = 0;
  std::uint64_t group_tag = 0;
  std::uint64_t hz = 0;
  std::uint64_t total_cycles = 0;
  std::vector<LedgerImageRow> images;
};

struct LedgerRow {
  SiteId site = 0;
  std::uint32_t caller_image = 0;
  std::string symbol;
  SiteKind kind = SiteKind::PltEager;
  SiteCounters counters;
};

struct LedgerFileContent {
  LedgerHeader header;
  std::vector<LedgerRow> rows;
};

/// Exact file bytes for the given content.
std::string render_ledger(const LedgerFileContent& content);

/// Writes bytes to `path` via a temporary file and rename, fsyncing first.
/// On failure, falls back to a single direct write of `path` + ".retry".
/// Returns false only when both attempts failed.
bool write_file_atomic(const std::string& path, std::string_view bytes);

struct LedgerParse {
  bool ok = false;
  std::string error;  // set when !ok (whole file rejected)
  LedgerFileContent content;
  std::vector<std::string> warnings;  // skipped rows, unknown headers
};

LedgerParse parse_ledger(std::string_view bytes);
LedgerParse read_ledger_file(const std::string& path);

std::string ledger_file_name(std::uint64_t pid, std::uint64_t ordinal);

/// Extracts (pid, ordinal) from a ledger file name; nullopt when the name
/// does not match the pattern.
std::optional<std::pair<std::uint64_t, std::uint64_t>> parse_ledger_file_name(
    std::string_view name);

}  // namespace xflow
