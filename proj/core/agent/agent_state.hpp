// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Process-wide state of the preloaded agent. Split in two: HotState is the
// handful of words the per-invocation handlers read (kept apart so the hot
// cache line never shares with install bookkeeping), AgentState is
// everything the installer, interposers, and persist path maintain under
// the install lock.
#pragma once

#include <pthread.h>

#include <csignal>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "xflow/image_registry.hpp"
#include "xflow/maps.hpp"
#include "xflow/shadow_region.hpp"
#include "xflow/tracer.hpp"
#include "xflow/types.hpp"
#include "xflow/wait_set.hpp"

namespace xflow::agent {

struct HotState {
  SiteRecord* records = nullptr;
  std::uint8_t* code_base = nullptr;  // entry i at code_base + i * stride
  std::uint64_t timing_rate = kDefaultTimingRate;  // 0 disables timing
  std::uint32_t ready = 0;  // becomes 1 once install finished
};

extern HotState g_hot __attribute__((aligned(64)));

/// Metadata the persist path needs per site; index is the site id.
struct SiteMeta {
  std::string symbol;
  ImageId caller = kNoImage;
  SiteKind kind = SiteKind::PltEager;
  bool valid = false;
  std::uintptr_t plt_slot = 0;
  std::uintptr_t got_cell = 0;
};

struct PatchRecord {
  enum class Kind : std::uint8_t { Slot, Cell };
  Kind kind = Kind::Slot;
  SiteId site = kNoSite;
  std::uintptr_t addr = 0;
  std::uint64_t original[2] = {0, 0};  // 16 slot bytes, or cell value in [0]
  std::uint64_t patched[2] = {0, 0};
  int orig_prot = 0;
};

struct AgentState {
  // Immutable after init.
  std::uint64_t tsc_hz = 0;
  std::uint64_t start_cycles = 0;
  std::uint32_t site_capacity = kDefaultSiteCapacity;
  std::uint32_t shadow_depth = kDefaultShadowDepth;
  std::string out_dir;
  int dump_signal = -1;
  std::vector<std::string> deny;
  SymbolSet waits;
  std::string debug_sites_path;

  // Real entry points behind the interposed names.
  void* (*real_dlopen)(const char*, int) = nullptr;
  void* (*real_dlsym)(void*, const char*) = nullptr;
  int (*real_pthread_create)(pthread_t*, const pthread_attr_t*,
                             void* (*)(void*), void*) = nullptr;

  // Guarded by mu: everything below.
  std::mutex mu;
  ImageRegistry registry;
  ShadowRegion region;
  ExecRanges exec;
  std::vector<SiteMeta> sites;          // index = site id
  std::vector<PatchRecord> patches;
  std::map<std::pair<std::uint64_t, ImageId>, SiteId> dlsym_sites;
  std::uint64_t sites_skipped_capacity = 0;

  pthread_key_t thread_key = 0;
  bool thread_key_valid = false;
};

AgentState& state();

/// Resolves the real entry points behind the interposed names (versioned
/// lookups only; a plain lookup would bind back to our own exports).
/// Idempotent; returns false when any of them cannot be found.
bool ensure_reals();

/// Installs interception for every image not yet instrumented. Called at
/// startup and after each successful dlopen. Caller must hold state().mu.
void install_new_images_locked();

/// Writes (or rewrites) the ledger for one context, and for all contexts.
void persist_context(ThreadContext* ctx);
void persist_all();

/// Mints (or reuses) a Dlsym site for `real_fn` on behalf of
/// `caller_image`; returns the shadow entry address, or 0 when the region
/// is exhausted. Takes state().mu.
std::uint64_t make_dlsym_site(const char* name, std::uint64_t real_fn,
                              ImageId caller_image);

/// Thread lifecycle helpers shared by the interposer and the key dtor.
void thread_begin(std::uint64_t group_tag);
void thread_finish();

/// Writes the site table TSV for test hooks; no-op when the path is empty.
/// Caller must hold state().mu.
void dump_debug_sites();

}  // namespace xflow::agent
