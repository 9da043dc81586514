// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Lifecycle of the preloaded agent. The constructor runs before any of the
// program's own initializers: it calibrates the cycle clock, reserves the
// shadow region, patches every image already loaded, and attaches the main
// thread. From then on the interposers keep coverage complete (dlopen,
// dlsym, pthread_create) and the destructor writes the final ledgers.
//
// Flush points: thread exit (that thread's ledger), the dump signal (every
// ledger, mid-run), process exit (every ledger). A process that dies by
// _exit or a fatal signal skips the final flush; the dump signal exists
// for exactly that situation.

#include <fcntl.h>
#include <pthread.h>
#include <signal.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "agent_state.hpp"
#include "patcher.hpp"
#include "xflow/diag.hpp"
#include "xflow/elf_file.hpp"
#include "xflow/env.hpp"
#include "xflow/ledger_io.hpp"
#include "xflow/sites.hpp"
#include "xflow/tracer.hpp"

extern "C" void xflow_enter_thunk();
extern "C" void xflow_exit_thunk();

namespace xflow::agent {

AgentState& state() {
  // Deliberately immortal: the final flush runs from this library's fini
  // hook, which the loader calls after every atexit-registered destructor
  // has already run. A function-local static would be gone by then.
  static AgentState* st = new AgentState();
  return *st;
}

namespace {

bool mkdir_p(const std::string& dir) {
  std::string partial;
  for (std::size_t i = 0; i <= dir.size(); ++i) {
    if (i < dir.size() && dir[i] != '/') continue;
    partial.assign(dir, 0, i == dir.size() ? i : i + 1);
    if (partial.empty() || partial == "/") continue;
    if (mkdir(partial.c_str(), 0777) != 0 && errno != EEXIST) return false;
  }
  return true;
}

void ctx_key_dtor(void*) { thread_finish(); }

/// Ledger snapshot of one context. Takes state().mu.
void persist_context_locked_free(ThreadContext* ctx) {
  AgentState& st = state();
  LedgerFileContent content;
  std::string path;
  {
    std::lock_guard<std::mutex> lock(st.mu);
    // The #tid header carries the thread ordinal (the file format's thread
    // identity); the kernel tid is an OS detail the reports never need.
    content.header.tid = ctx->ordinal;
    content.header.group_tag = ctx->group_tag;
    content.header.hz = st.tsc_hz;
    const std::uint64_t end = ctx->end_cycles ? ctx->end_cycles : rdtsc();
    content.header.total_cycles =
        end > ctx->start_cycles ? end - ctx->start_cycles : 0;
    for (const LoadedImage& img : st.registry.images()) {
      if (img.is_agent) continue;
      content.header.images.push_back({img.id, img.path});
    }

    const std::uint32_t upper = st.region.allocated();
    for (SiteId sid = 0; sid < upper && sid < ctx->site_capacity; ++sid) {
      const std::uint64_t count = ctx->counts[sid];
      if (count == 0) continue;
      if (sid >= st.sites.size() || !st.sites[sid].valid) continue;
      const SiteMeta& meta = st.sites[sid];
      LedgerRow row;
      row.site = sid;
      row.caller_image = meta.caller;
      row.symbol = meta.symbol;
      row.kind = meta.kind;
      row.counters = {count, ctx->timed[sid], ctx->raw[sid], ctx->attr[sid]};
      content.rows.push_back(std::move(row));
    }
    path = st.out_dir + "/" +
           ledger_file_name(std::uint64_t(getpid()), ctx->ordinal);
  }

  if (!write_file_atomic(path, render_ledger(content)))
    diag::warn("cannot write %s", path.c_str());
}

void* dump_thread_main(void*) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, state().dump_signal);
  for (;;) {
    int sig = 0;
    if (sigwait(&set, &sig) != 0) return nullptr;
    persist_all();
  }
}

// The jump target encoded in a slot patch (the movabs immediate).
std::uint64_t slot_patch_target(const PatchRecord& rec) {
  std::uint64_t target;
  std::memcpy(&target, reinterpret_cast<const std::uint8_t*>(rec.patched) + 2,
              8);
  return target;
}

// Patch, revert, verify, repatch: proves the byte bookkeeping is faithful
// while the process is still single threaded.
void run_self_test_locked() {
  AgentState& st = state();
  std::size_t bad = 0;
  for (const PatchRecord& rec : st.patches)
    if (!patch_intact(rec)) ++bad;
  for (const PatchRecord& rec : st.patches)
    if (!unpatch(rec)) ++bad;
  for (const PatchRecord& rec : st.patches) {
    const std::size_t len = rec.kind == PatchRecord::Kind::Cell ? 8 : 16;
    if (std::memcmp(reinterpret_cast<void*>(rec.addr), rec.original, len) !=
        0)
      ++bad;
  }
  for (PatchRecord& rec : st.patches) {
    const bool ok =
        rec.kind == PatchRecord::Kind::Cell
            ? patch_cell(rec.addr, rec.patched[0], rec.orig_prot, rec.site,
                         rec)
            : patch_slot(rec.addr, slot_patch_target(rec), rec.orig_prot,
                         rec.site, rec);
    if (!ok || !patch_intact(rec)) ++bad;
  }
  if (bad == 0)
    diag::note("selftest ok patches=%zu", st.patches.size());
  else
    diag::note("selftest FAILED checks=%zu", bad);
}

}  // namespace

void install_new_images_locked() {
  AgentState& st = state();
  if (st.region.capacity() == 0) return;

  const std::vector<ImageId> fresh = st.registry.scan(&g_hot, st.deny);
  const std::vector<MapEntry> maps = read_self_maps();
  if (maps.empty()) {
    // Without the memory map there is no way to tell code from data or to
    // pick patch protections. Leave everything untouched.
    diag::note("cannot read the process memory map; images left unpatched");
    return;
  }
  st.exec = ExecRanges(maps);
  if (fresh.empty()) return;

  struct Pending {
    SiteId id;
    SiteKind kind;
    std::uintptr_t patch_addr;
    int prot;
  };
  std::vector<Pending> pending;

  for (ImageId id : fresh) {
    const LoadedImage* img = st.registry.find(id);
    if (!img || img->is_agent || img->is_linker || img->denied) continue;
    ElfFile elf = ElfFile::open(img->path);
    if (!elf.valid()) {
      diag::warn("skipping %s: %s", img->path.c_str(), elf.error().c_str());
      continue;
    }

    const CellReader live = [](std::uintptr_t a) {
      return *reinterpret_cast<const std::uint64_t*>(a);
    };
    SiteDerivation derived = derive_sites(*img, elf, st.exec,
                                          never_intercept_set(), st.waits,
                                          live);

    for (ApiSite& s : derived.sites) {
      const std::uint64_t cell_value = live(s.got_cell);
      if (st.region.contains(cell_value)) continue;  // already routed here
      auto sid = st.region.allocate_site();
      if (!sid) {
        st.sites_skipped_capacity += 1;
        continue;
      }
      std::uint64_t plt0 = 0, initial = 0, resolved = 0;
      if (s.kind == SiteKind::PltLazy) {
        plt0 = derived.plt0;
        initial = cell_value;
      } else {
        resolved = cell_value;
      }
      st.region.install_entry(*sid, s, plt0, initial, resolved);

      SiteMeta meta;
      meta.symbol = s.symbol;
      meta.caller = img->id;
      meta.kind = s.kind;
      meta.valid = true;
      meta.plt_slot = s.plt_slot;
      meta.got_cell = s.got_cell;
      if (st.sites.size() <= *sid) st.sites.resize(*sid + 1);
      st.sites[*sid] = std::move(meta);

      const std::uintptr_t patch_addr =
          s.kind == SiteKind::DynGot ? s.got_cell : s.plt_slot;
      pending.push_back(
          {*sid, s.kind, patch_addr, protection_at(maps, patch_addr)});
    }
  }

  // Entries must execute before the first patched call can reach them.
  st.region.seal_batch();

  for (const Pending& p : pending) {
    if (p.prot < 0) continue;
    PatchRecord rec;
    const std::uint64_t entry = st.region.entry_addr(p.id);
    const bool ok =
        p.kind == SiteKind::DynGot
            ? patch_cell(p.patch_addr, entry, p.prot, p.id, rec)
            : patch_slot(p.patch_addr, entry, p.prot, p.id, rec);
    if (ok) st.patches.push_back(rec);
  }
}

std::uint64_t make_dlsym_site(const char* name, std::uint64_t real_fn,
                              ImageId caller_image) {
  AgentState& st = state();
  std::lock_guard<std::mutex> lock(st.mu);
  if (st.region.capacity() == 0) return 0;

  const auto key = std::make_pair(real_fn, caller_image);
  auto it = st.dlsym_sites.find(key);
  if (it != st.dlsym_sites.end()) return st.region.entry_addr(it->second);

  auto sid = st.region.allocate_site();
  if (!sid) {
    st.sites_skipped_capacity += 1;
    return 0;
  }

  ApiSite site;
  site.id = *sid;
  site.caller = caller_image;
  site.symbol = name;
  site.kind = SiteKind::Dlsym;
  site.wait_api = st.waits.contains(name);

  const std::uint64_t entry =
      st.region.install_entry(*sid, site, 0, 0, real_fn);
  st.region.seal_batch();

  SiteMeta meta;
  meta.symbol = site.symbol;
  meta.caller = caller_image;
  meta.kind = SiteKind::Dlsym;
  meta.valid = true;
  if (st.sites.size() <= *sid) st.sites.resize(*sid + 1);
  st.sites[*sid] = std::move(meta);
  st.dlsym_sites.emplace(key, *sid);
  return entry;
}

void thread_begin(std::uint64_t group_tag) {
  AgentState& st = state();
  ThreadContext* ctx =
      tracer::attach(st.site_capacity, st.shadow_depth, group_tag);
  if (ctx && st.thread_key_valid)
    pthread_setspecific(st.thread_key, ctx);
}

void thread_finish() {
  ThreadContext* ctx = tracer::current();
  if (!ctx) return;
  AgentState& st = state();
  if (st.thread_key_valid) pthread_setspecific(st.thread_key, nullptr);
  tracer::detach();
  persist_context(ctx);
}

void persist_context(ThreadContext* ctx) {
  if (ctx && ctx->magic == kCtxMagic) persist_context_locked_free(ctx);
}

void persist_all() {
  for (ThreadContext* ctx = tracer::all_contexts(); ctx; ctx = ctx->next)
    persist_context(ctx);
}

void dump_debug_sites() {
  AgentState& st = state();
  if (st.debug_sites_path.empty()) return;
  std::string text =
      "#site\timage\tsymbol\tkind\tslot\tcell\tresolver_launches\n";
  char line[1024];
  for (SiteId sid = 0; sid < st.sites.size(); ++sid) {
    const SiteMeta& m = st.sites[sid];
    if (!m.valid) continue;
    const LoadedImage* img = st.registry.find(m.caller);
    const std::uint32_t launches =
        g_hot.records
            ? g_hot.records[sid].resolver_launches.load(
                  std::memory_order_relaxed)
            : 0;
    std::snprintf(line, sizeof line, "%u\t%s\t%s\t%s\t0x%zx\t0x%zx\t%u\n",
                  sid, img ? img->path.c_str() : "?", m.symbol.c_str(),
                  to_string(m.kind), std::size_t(m.plt_slot),
                  std::size_t(m.got_cell), launches);
    text += line;
  }
  write_file_atomic(st.debug_sites_path, text);
}

namespace {

__attribute__((constructor(101))) void agent_init() {
  AgentState& st = state();

  st.out_dir = env::get(env::kOutDir).value_or(env::default_out_dir());
  // 0 is a deliberate "count only, never time" setting; the CLI refuses
  // it but the env accepts it for overhead measurements.
  const std::uint64_t rate =
      env::get_u64(env::kTimingRate, kDefaultTimingRate);
  st.site_capacity = static_cast<std::uint32_t>(
      env::get_u64(env::kSiteCapacity, kDefaultSiteCapacity));
  st.shadow_depth = static_cast<std::uint32_t>(
      env::get_u64(env::kShadowDepth, kDefaultShadowDepth));
  st.deny = env::get_list(env::kDenyImages);
  st.waits = wait_set_with(env::get_list(env::kWaitApis));
  st.debug_sites_path = env::get(env::kDebugSites).value_or("");
  if (auto sig = env::get(env::kDumpSignal))
    st.dump_signal = env::parse_signal(*sig).value_or(-1);

  if (!ensure_reals()) {
    diag::note("loader entry points not found; not instrumenting");
    return;
  }
  if (!mkdir_p(st.out_dir))
    diag::warn("cannot create %s", st.out_dir.c_str());

  st.tsc_hz = calibrate_tsc_hz();
  st.start_cycles = rdtsc();

  if (pthread_key_create(&st.thread_key, ctx_key_dtor) == 0)
    st.thread_key_valid = true;

  {
    std::lock_guard<std::mutex> lock(st.mu);
    if (!st.region.init(
            st.site_capacity,
            reinterpret_cast<std::uint64_t>(&xflow_enter_thunk),
            reinterpret_cast<std::uint64_t>(&xflow_exit_thunk),
            tracer::tls_slot_displacement())) {
      diag::note("shadow region unavailable; not instrumenting");
      return;
    }
    g_hot.records = st.region.record(0);
    g_hot.code_base = st.region.code_base();
    g_hot.timing_rate = rate;
    __atomic_store_n(&g_hot.ready, 1u, __ATOMIC_RELEASE);

    install_new_images_locked();
    if (env::get_u64(env::kSelfTest, 0) != 0) run_self_test_locked();
    dump_debug_sites();
  }

  thread_begin(0);

  if (st.dump_signal > 0) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, st.dump_signal);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    pthread_attr_t attr;
    pthread_attr_init(&attr);
    pthread_attr_setdetachstate(&attr, PTHREAD_CREATE_DETACHED);
    pthread_t tid;
    if (st.real_pthread_create(&tid, &attr, dump_thread_main, nullptr) != 0)
      diag::warn("dump-signal thread failed to start");
    pthread_attr_destroy(&attr);
  }
}

__attribute__((destructor(101))) void agent_fini() {
  if (!g_hot.ready) return;
  tracer::detach();
  persist_all();
  // Rewritten so the file carries final counter values, not the install
  // snapshot.
  std::lock_guard<std::mutex> lock(state().mu);
  dump_debug_sites();
}

}  // namespace
}  // namespace xflow::agent
