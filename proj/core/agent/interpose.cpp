// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// The three loader-facing APIs the agent interposes by export. dlopen
// extends interception over whatever it loaded before anyone can call into
// it; dlsym hands out shadow entries instead of raw function addresses so
// lookup-based call sites are observed too; pthread_create gives every new
// thread a recording context tagged by its start routine.
//
// Composition caveat: forwarding shifts the caller that the loader sees,
// so RTLD_NEXT lookups forwarded here search from this library, not from
// the program image that asked. With this agent loaded first that order
// still visits every library after it, which covers the usual interposer
// use (finding the libc definition), but a chain of several RTLD_NEXT
// interposers below us would be skipped over.

#include <dlfcn.h>
#include <pthread.h>

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <mutex>

#include "agent_state.hpp"
#include "xflow/diag.hpp"
#include "xflow/tracer.hpp"
#include "xflow/wait_set.hpp"

namespace xflow::agent {

namespace {

// Versioned lookup only: a plain dlsym reference from this object would
// resolve right back to the interposer below.
void* resolve_real(const char* name) {
  void* p = dlvsym(RTLD_NEXT, name, "GLIBC_2.34");
  if (!p) p = dlvsym(RTLD_NEXT, name, "GLIBC_2.2.5");
  return p;
}

struct ShimArg {
  void* (*fn)(void*) = nullptr;
  void* arg = nullptr;
  std::uint64_t group_tag = 0;
};

void* thread_shim(void* p) {
  ShimArg a = *static_cast<ShimArg*>(p);
  std::free(p);
  thread_begin(a.group_tag);
  void* result = a.fn(a.arg);
  // pthread_exit and cancellation skip this return path; the context key
  // destructor finishes those threads instead.
  thread_finish();
  return result;
}

std::uint64_t tag_for_routine(void* (*fn)(void*)) {
  AgentState& st = state();
  std::lock_guard<std::mutex> lock(st.mu);
  const auto addr = reinterpret_cast<std::uintptr_t>(fn);
  const LoadedImage* img = st.registry.find_by_addr(addr);
  if (!img) return thread_group_tag("?", addr);
  return thread_group_tag(path_basename(img->path), addr - img->bias);
}

/// The image to charge a dlsym result to. When the call arrived through a
/// patched site the top shadow frame is that site and carries the caller;
/// otherwise the return address still points into the calling image.
ImageId dlsym_caller(std::uintptr_t return_addr) {
  AgentState& st = state();
  std::lock_guard<std::mutex> lock(st.mu);
  ThreadContext* ctx = tracer::current();
  if (ctx && !ctx->stack.empty()) {
    const SiteId sid = ctx->stack.top().site_id;
    if (sid < st.sites.size() && st.sites[sid].valid &&
        st.sites[sid].symbol == "dlsym")
      return st.sites[sid].caller;
  }
  const LoadedImage* img = st.registry.find_by_addr(return_addr);
  return img ? img->id : kNoImage;
}

}  // namespace

bool ensure_reals() {
  AgentState& st = state();
  if (!st.real_dlopen)
    st.real_dlopen =
        reinterpret_cast<void* (*)(const char*, int)>(resolve_real("dlopen"));
  if (!st.real_dlsym)
    st.real_dlsym =
        reinterpret_cast<void* (*)(void*, const char*)>(resolve_real("dlsym"));
  if (!st.real_pthread_create)
    st.real_pthread_create = reinterpret_cast<int (*)(
        pthread_t*, const pthread_attr_t*, void* (*)(void*), void*)>(
        resolve_real("pthread_create"));
  return st.real_dlopen && st.real_dlsym && st.real_pthread_create;
}

}  // namespace xflow::agent

using namespace xflow;
using namespace xflow::agent;

extern "C" __attribute__((visibility("default"))) void* dlopen(
    const char* file, int mode) {
  AgentState& st = state();
  if (!ensure_reals()) {
    diag::note("cannot locate the real dlopen; failing the call");
    return nullptr;
  }
  void* handle = st.real_dlopen(file, mode);
  if (handle && g_hot.ready) {
    std::lock_guard<std::mutex> lock(st.mu);
    install_new_images_locked();
    dump_debug_sites();
  }
  return handle;
}

extern "C" __attribute__((visibility("default"))) void* dlsym(
    void* handle, const char* name) {
  AgentState& st = state();
  if (!ensure_reals()) {
    diag::note("cannot locate the real dlsym; failing the call");
    return nullptr;
  }
  // Headers promise `name` is nonnull; an interposer cannot rely on that.
  // Whatever libc does with a null, the program gets the same.
  const char* sym = name;
  if (!sym) return st.real_dlsym(handle, sym);
  void* real = st.real_dlsym(handle, sym);
  if (!real || !g_hot.ready) return real;
  if (never_intercept_set().contains(sym)) return real;

  const auto addr = reinterpret_cast<std::uintptr_t>(real);
  const auto ra =
      reinterpret_cast<std::uintptr_t>(__builtin_return_address(0));

  {
    std::lock_guard<std::mutex> lock(st.mu);
    const LoadedImage* target = st.registry.find_by_addr(addr);
    if (!target) {
      // The address may sit in an image loaded behind our back (loader
      // internals, audit libs). One rescan covers it or proves it foreign.
      install_new_images_locked();
      target = st.registry.find_by_addr(addr);
    }
    if (!target || target->is_agent || target->is_linker || target->denied)
      return real;
    // Data symbols resolve here too; only executable addresses get a stub.
    if (!st.exec.contains(addr)) return real;
  }

  const ImageId caller = dlsym_caller(ra);
  if (caller == kNoImage) return real;

  const std::uint64_t stub = make_dlsym_site(name, addr, caller);
  return stub ? reinterpret_cast<void*>(stub) : real;
}

extern "C" __attribute__((visibility("default"))) int pthread_create(
    pthread_t* thread, const pthread_attr_t* attr, void* (*start)(void*),
    void* arg) {
  AgentState& st = state();
  if (!ensure_reals()) {
    diag::note("cannot locate the real pthread_create; failing the call");
    return EAGAIN;
  }
  void* (*routine)(void*) = start;
  if (!g_hot.ready || !routine)
    return st.real_pthread_create(thread, attr, routine, arg);

  auto* shim = static_cast<ShimArg*>(std::malloc(sizeof(ShimArg)));
  if (!shim) return st.real_pthread_create(thread, attr, routine, arg);
  shim->fn = routine;
  shim->arg = arg;
  shim->group_tag = tag_for_routine(routine);

  int rc = st.real_pthread_create(thread, attr, thread_shim, shim);
  if (rc != 0) std::free(shim);
  return rc;
}
