// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Environment contract between the CLI, the preloaded agent, and tests.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xflow::env {

// Public knobs.
inline constexpr const char* kOutDir = "XFLOW_OUT_DIR";
inline constexpr const char* kTimingRate = "XFLOW_TIMING_RATE";
inline constexpr const char* kDumpSignal = "XFLOW_DUMP_SIGNAL";
inline constexpr const char* kDenyImages = "XFLOW_DENY_IMAGES";
inline constexpr const char* kShadowDepth = "XFLOW_SHADOW_DEPTH";
inline constexpr const char* kWaitApis = "XFLOW_WAIT_APIS";
inline constexpr const char* kOracle = "XFLOW_ORACLE";  // read by fixtures

// Advanced / test hooks.
inline constexpr const char* kSiteCapacity = "XFLOW_SITE_CAPACITY";
inline constexpr const char* kDebugSites = "XFLOW_DEBUG_SITES";
inline constexpr const char* kSelfTest = "XFLOW_SELFTEST";
inline constexpr const char* kAgentPath = "XFLOW_AGENT";

std::optional<std::string> get(const char* name);
std::uint64_t get_u64(const char* name, std::uint64_t fallback);

/// Comma-separated list, empty elements dropped.
std::vector<std::string> get_list(const char* name);

/// Accepts "USR1", "SIGUSR1", or a numeric signal; empty optional when the
/// variable is unset or unparsable.
std::optional<int> parse_signal(std::string_view text);

std::string default_out_dir();  // ./xflow-out

}  // namespace xflow::env
