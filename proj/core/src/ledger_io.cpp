// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/ledger_io.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <cstring>

namespace xflow {
namespace {

void append_u64_padded(std::string& out, std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%020llu", (unsigned long long)v);
  out += buf;
}

void append_hex16(std::string& out, std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  out += buf;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_hex64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, 16);
  return ec == std::errc() && p == s.data() + s.size();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    auto pos = line.find('\t');
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return out;
}

bool write_plain(const std::string& path, std::string_view bytes,
                 bool sync) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC,
                  0644);
  if (fd < 0) return false;
  std::size_t done = 0;
  while (done < bytes.size()) {
    ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      return false;
    }
    done += static_cast<std::size_t>(n);
  }
  bool ok = !sync || fsync(fd) == 0;
  ::close(fd);
  return ok;
}

}  // namespace

std::string render_ledger(const LedgerFileContent& content) {
  std::string out;
  out.reserve(256 + content.rows.size() * 160);
  out += "XFLOW\t1\n";
  out += "#tid\t";
  append_u64_padded(out, content.header.tid);
  out += "\n#group\t";
  append_hex16(out, content.header.group_tag);
  out += "\n#hz\t";
  append_u64_padded(out, content.header.hz);
  out += "\n#total_cycles\t";
  append_u64_padded(out, content.header.total_cycles);
  out += '\n';
  for (const auto& img : content.header.images) {
    out += "#image\t";
    out += std::to_string(img.id);
    out += '\t';
    out += img.path;
    out += '\n';
  }
  for (const auto& row : content.rows) {
    if (row.counters.count == 0) continue;
    out += std::to_string(row.site);
    out += '\t';
    out += std::to_string(row.caller_image);
    out += '\t';
    out += row.symbol;
    out += '\t';
    out += to_string(row.kind);
    out += '\t';
    append_u64_padded(out, row.counters.count);
    out += '\t';
    append_u64_padded(out, row.counters.timed_count);
    out += '\t';
    append_u64_padded(out, row.counters.raw_cycles);
    out += '\t';
    append_u64_padded(out, row.counters.attributed_cycles);
    out += '\n';
  }
  return out;
}

bool write_file_atomic(const std::string& path, std::string_view bytes) {
  std::string tmp = path + ".tmp";
  if (write_plain(tmp, bytes, true) && ::rename(tmp.c_str(), path.c_str()) == 0)
    return true;
  ::unlink(tmp.c_str());
  return write_plain(path + ".retry", bytes, false);
}

LedgerParse parse_ledger(std::string_view bytes) {
  LedgerParse out;
  std::size_t lineno = 0;
  bool first = true;
  while (!bytes.empty()) {
    auto nl = bytes.find('\n');
    std::string_view line = bytes.substr(0, nl);
    bytes.remove_prefix(nl == std::string_view::npos ? bytes.size() : nl + 1);
    ++lineno;
    if (line.empty()) continue;

    if (first) {
      if (line != "XFLOW\t1") {
        out.error = "unsupported format or version: " + std::string(line);
        return out;
      }
      first = false;
      continue;
    }

    auto fields = split_tabs(line);
    if (line[0] == '#') {
      std::string_view key = fields[0];
      if (key == "#tid" && fields.size() == 2) {
        parse_u64(fields[1], out.content.header.tid);
      } else if (key == "#group" && fields.size() == 2) {
        parse_hex64(fields[1], out.content.header.group_tag);
      } else if (key == "#hz" && fields.size() == 2) {
        parse_u64(fields[1], out.content.header.hz);
      } else if (key == "#total_cycles" && fields.size() == 2) {
        parse_u64(fields[1], out.content.header.total_cycles);
      } else if (key == "#image" && fields.size() == 3) {
        std::uint64_t id = 0;
        if (parse_u64(fields[1], id))
          out.content.header.images.push_back(
              {static_cast<std::uint32_t>(id), std::string(fields[2])});
        else
          out.warnings.push_back("line " + std::to_string(lineno) +
                                 ": bad image id");
      } else {
        out.warnings.push_back("line " + std::to_string(lineno) +
                               ": unknown header " + std::string(key));
      }
      continue;
    }

    if (fields.size() != 8) {
      out.warnings.push_back("line " + std::to_string(lineno) +
                             ": expected 8 fields, got " +
                             std::to_string(fields.size()));
      continue;
    }
    LedgerRow row;
    std::uint64_t site = 0, image = 0;
    auto kind = site_kind_from(fields[3]);
    if (!parse_u64(fields[0], site) || !parse_u64(fields[1], image) ||
        !kind || !parse_u64(fields[4], row.counters.count) ||
        !parse_u64(fields[5], row.counters.timed_count) ||
        !parse_u64(fields[6], row.counters.raw_cycles) ||
        !parse_u64(fields[7], row.counters.attributed_cycles)) {
      out.warnings.push_back("line " + std::to_string(lineno) +
                             ": unparsable row");
      continue;
    }
    row.site = static_cast<SiteId>(site);
    row.caller_image = static_cast<std::uint32_t>(image);
    row.symbol = std::string(fields[2]);
    row.kind = *kind;
    out.content.rows.push_back(std::move(row));
  }
  if (first) {
    out.error = "empty file";
    return out;
  }
  out.ok = true;
  return out;
}

LedgerParse read_ledger_file(const std::string& path) {
  LedgerParse out;
  int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) {
    out.error = "cannot open " + path;
    return out;
  }
  std::string text;
  char buf[65536];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n <= 0) break;
    text.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fd);
  return parse_ledger(text);
}

std::string ledger_file_name(std::uint64_t pid, std::uint64_t ordinal) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "xflow.%llu.%llu.tsv",
                (unsigned long long)pid, (unsigned long long)ordinal);
  return buf;
}

std::optional<std::pair<std::uint64_t, std::uint64_t>> parse_ledger_file_name(
    std::string_view name) {
  if (!name.starts_with("xflow.") || !name.ends_with(".tsv")) return std::nullopt;
  name.remove_prefix(6);
  name.remove_suffix(4);
  auto dot = name.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  std::uint64_t pid = 0, ordinal = 0;
  if (!parse_u64(name.substr(0, dot), pid) ||
      !parse_u64(name.substr(dot + 1), ordinal))
    return std::nullopt;
  return std::make_pair(pid, ordinal);
}

}  // namespace xflow
