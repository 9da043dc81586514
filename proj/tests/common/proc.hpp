// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Shared plumbing for tests that drive real processes: spawn with captured
// output and extra environment, temone directories, and shortcuts for
// reading the ledgers a run leaves behind. Paths to the built artifacts
// arrive through environment variables set by the test harness:
//   XFLOW_TEST_FX      fixture directory
//   XFLOW_TEST_CLI     the xflow binary
//   XFLOW_TEST_AGENT   the agent shared object
#pragma once

#include <fcntl.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "xflow/analyzer.hpp"
#include "xflow/wait_set.hpp"

namespace xt {

struct RunResult {
  int status = -1;       // exit code, or 128+signal
  long max_rss_kb = 0;   // child peak RSS
  std::string out;
  std::string err;
};

using EnvList = std::vector<std::pair<std::string, std::string>>;

inline std::string need_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) {
    std::fprintf(stderr, "missing env %s\n", name);
    std::abort();
  }
  return v;
}

inline std::string fx_dir() { return need_env("XFLOW_TEST_FX"); }
inline std::string fixture(const std::string& name) {
  return fx_dir() + "/" + name;
}
inline std::string cli() { return need_env("XFLOW_TEST_CLI"); }
inline std::string agent() { return need_env("XFLOW_TEST_AGENT"); }

inline void drain(int fd, std::string& into) {
  char buf[4096];
  for (;;) {
    ssize_t n = read(fd, buf, sizeof buf);
    if (n > 0) {
      into.append(buf, std::size_t(n));
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    return;
  }
}

// Runs argv[0] with the given extra environment, capturing both streams.
// The extra variables override inherited ones; a variable with an empty
// value is removed from the child environment.
inline RunResult run_proc(const std::vector<std::string>& argv,
                          const EnvList& extra_env = {}) {
  RunResult r;
  int out_pipe[2], err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) return r;

  pid_t pid = fork();
  if (pid < 0) return r;
  if (pid == 0) {
    dup2(out_pipe[1], 1);
    dup2(err_pipe[1], 2);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    close(err_pipe[1]);
    for (const auto& [k, v] : extra_env) {
      if (v.empty())
        unsetenv(k.c_str());
      else
        setenv(k.c_str(), v.c_str(), 1);
    }
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    execv(cargv[0], cargv.data());
    std::fprintf(stderr, "exec %s: %s\n", cargv[0], std::strerror(errno));
    _exit(126);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);
  drain(out_pipe[0], r.out);
  drain(err_pipe[0], r.err);
  close(out_pipe[0]);
  close(err_pipe[0]);

  int status = 0;
  struct rusage ru {};
  while (wait4(pid, &status, 0, &ru) < 0 && errno == EINTR) {
  }
  r.max_rss_kb = ru.ru_maxrss;
  if (WIFEXITED(status))
    r.status = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    r.status = 128 + WTERMSIG(status);
  return r;
}

// Preloads the agent directly (no CLI in between) so tests can pin the
// exact environment the agent sees.
inline RunResult run_agented(const std::vector<std::string>& argv,
                             const std::string& out_dir,
                             EnvList extra_env = {}) {
  extra_env.emplace_back("LD_PRELOAD", agent());
  extra_env.emplace_back("XFLOW_OUT_DIR", out_dir);
  return run_proc(argv, extra_env);
}

class TempDir {
 public:
  TempDir() {
    char tmpl[] = "/tmp/xflow-test-XXXXXX";
    path_ = mkdtemp(tmpl) ? tmpl : "";
  }
  ~TempDir() {
    if (!path_.empty()) {
      std::string cmd = "rm -rf '" + path_ + "'";
      if (std::system(cmd.c_str()) != 0) {
      }
    }
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline xflow::Aggregate merged(const std::string& dir) {
  xflow::Aggregate agg =
      xflow::merge_ledger_dir(dir, xflow::default_wait_set());
  xflow::resolve_owners(agg);
  return agg;
}

inline std::string basename_of(const std::string& path) {
  auto pos = path.rfind('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

// Total count across rows whose caller basename and symbol match.
inline std::uint64_t count_for(const xflow::Aggregate& agg,
                               const std::string& caller_base,
                               const std::string& symbol) {
  std::uint64_t total = 0;
  for (const auto& row : agg.rows)
    if (row.symbol == symbol && basename_of(row.caller_path) == caller_base)
      total += row.counters.count;
  return total;
}

// The single row matching caller basename + symbol; null when absent or
// ambiguous.
inline const xflow::MergedRow* row_for(const xflow::Aggregate& agg,
                                       const std::string& caller_base,
                                       const std::string& symbol) {
  const xflow::MergedRow* hit = nullptr;
  for (const auto& row : agg.rows)
    if (row.symbol == symbol && basename_of(row.caller_path) == caller_base) {
      if (hit) return nullptr;
      hit = &row;
    }
  return hit;
}

inline std::string read_file(const std::string& path) {
  std::string text;
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
  std::fclose(f);
  return text;
}

}  // namespace xt
