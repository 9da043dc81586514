// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/wait_set.hpp"

namespace xflow {

SymbolSet::SymbolSet(std::initializer_list<std::string_view> names) {
  for (auto n : names) add(n);
}

void SymbolSet::add(std::string_view name) {
  if (!name.empty()) names_.emplace(name);
}

bool SymbolSet::contains(std::string_view name) const {
  return names_.count(std::string(name)) != 0;
}

// Both tables are leaked on purpose: the agent consults them up to the
// loader's fini pass, after locally-scoped statics are destroyed.
const SymbolSet& default_wait_set() {
  static const SymbolSet& set = *new SymbolSet{
      "pthread_cond_wait",      "pthread_cond_timedwait",
      "pthread_cond_clockwait", "pthread_barrier_wait",
      "pthread_join",           "pthread_timedjoin_np",
      "pthread_tryjoin_np",     "sem_wait",
      "sem_timedwait",          "sem_clockwait",
      "sleep",                  "usleep",
      "nanosleep",              "clock_nanosleep",
      "poll",                   "ppoll",
      "select",                 "pselect",
      "epoll_wait",             "epoll_pwait",
      "epoll_pwait2",           "sigwait",
      "sigwaitinfo",            "sigtimedwait",
      "wait",                   "waitpid",
      "waitid",                 "wait3",
      "wait4",                  "pause",
      "thrd_join",              "thrd_sleep",
      "cnd_wait",               "cnd_timedwait",
  };
  return set;
}

SymbolSet wait_set_with(const std::vector<std::string>& extra) {
  SymbolSet set = default_wait_set();
  for (const auto& s : extra) set.add(s);
  return set;
}

const SymbolSet& never_intercept_set() {
  static const SymbolSet& set = *new SymbolSet{
      // glibc marks these _Noreturn: the call never comes back, so a
      // swapped return address would leak a frame or worse.
      "exit", "_exit", "_Exit", "quick_exit", "abort", "pthread_exit",
      "thrd_exit", "__cxa_throw", "__cxa_rethrow", "_Unwind_Resume",
      "_Unwind_RaiseException", "__assert_fail", "__stack_chk_fail",
      "err", "errx", "verr", "verrx", "__libc_fatal",
      // exec family: the image is replaced on success.
      "execv", "execve", "execvp", "execvpe", "execl", "execle", "execlp",
      "fexecve",
      // returns-twice and non-local control transfer. (fork is fine: each
      // resulting process returns exactly once. vfork shares the stack.)
      "vfork", "setjmp", "_setjmp", "__sigsetjmp", "sigsetjmp",
      "longjmp", "_longjmp", "siglongjmp", "__longjmp_chk",
      // user-space context switching moves between stacks entirely.
      "getcontext", "setcontext", "swapcontext", "makecontext",
  };
  return set;
}

}  // namespace xflow
