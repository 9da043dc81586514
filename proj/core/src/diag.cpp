// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/diag.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstring>

namespace xflow::diag {
namespace {

std::atomic<std::uint64_t> g_emitted{0};
std::atomic<std::uint64_t> g_suppressed{0};
constexpr std::uint64_t kLimit = 64;

void emit(const char* fmt, va_list ap) {
  char buf[512];
  std::memcpy(buf, "[xflow] ", 8);
  int n = vsnprintf(buf + 8, sizeof buf - 9, fmt, ap);
  if (n < 0) return;
  std::size_t len = 8 + static_cast<std::size_t>(n);
  if (len > sizeof buf - 1) len = sizeof buf - 1;
  buf[len++] = '\n';
  ssize_t rc = write(2, buf, len);
  (void)rc;
}

}  // namespace

void warn(const char* fmt, ...) {
  if (g_emitted.fetch_add(1, std::memory_order_relaxed) >= kLimit) {
    g_suppressed.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  va_list ap;
  va_start(ap, fmt);
  emit(fmt, ap);
  va_end(ap);
}

void note(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  emit(fmt, ap);
  va_end(ap);
}

std::uint64_t suppressed_count() {
  return g_suppressed.load(std::memory_order_relaxed);
}

}  // namespace xflow::diag
