// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Diagnostics that are safe to emit from inside a patched process: plain
// write(2) to stderr, no allocation, rate limited so a hot failure path
// cannot flood the host program's output.
#pragma once

#include <cstdarg>
#include <cstdint>

namespace xflow::diag {

/// printf-style warning, prefixed "[xflow] ". At most 64 messages per
/// process; later calls are counted but not printed.
void warn(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

/// Unconditional message, same prefix, not rate limited. For init errors.
void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

std::uint64_t suppressed_count();

}  // namespace xflow::diag
