// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/env.hpp"

#include <csignal>
#include <cstdlib>

#include <charconv>

namespace xflow::env {

std::optional<std::string> get(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::uint64_t get_u64(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v, v + std::char_traits<char>::length(v), out);
  if (ec != std::errc() || *p != '\0') return fallback;
  return out;
}

std::vector<std::string> get_list(const char* name) {
  std::vector<std::string> out;
  const char* v = std::getenv(name);
  if (!v) return out;
  std::string_view s(v);
  while (!s.empty()) {
    auto pos = s.find(',');
    std::string_view item = s.substr(0, pos);
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

std::optional<int> parse_signal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text[0] >= '0' && text[0] <= '9') {
    int num = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), num);
    if (ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
    if (num <= 0 || num >= 64) return std::nullopt;
    return num;
  }
  std::string_view name = text;
  if (name.starts_with("SIG")) name.remove_prefix(3);
  struct Entry {
    const char* name;
    int num;
  };
  static constexpr Entry table[] = {
      {"USR1", SIGUSR1}, {"USR2", SIGUSR2}, {"HUP", SIGHUP},
      {"TERM", SIGTERM}, {"INT", SIGINT},   {"QUIT", SIGQUIT},
  };
  for (const auto& e : table)
    if (name == e.name) return e.num;
  return std::nullopt;
}

std::string default_out_dir() { return "./xflow-out"; }

}  // namespace xflow::env
