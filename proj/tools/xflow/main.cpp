// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end.
//
//   xflow run [--out DIR] [--timing-rate N] [--dump-signal SIG]
//             [--deny SUBSTR,...] [--agent PATH] -- CMD ARGS...
//   xflow report [--out DIR] [--view component|api|imbalance]
//                [--image NAME] [--format text|json]
//
// `run` preloads the agent into CMD and passes the child's exit status
// through unchanged (128+signal when it died on one); failures of xflow
// itself exit 1. `report` reads the ledgers a run left behind: 0 on
// success, 2 when some input files had to be skipped, 1 when nothing
// usable was found. Without --view it prints the application's component
// breakdown followed by the API view of its largest callee library.

#include <fcntl.h>
#include <limits.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xflow/analyzer.hpp"
#include "xflow/env.hpp"
#include "xflow/wait_set.hpp"

namespace {

std::string self_exe_dir() {
  char buf[PATH_MAX];
  ssize_t n = readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n <= 0) return ".";
  buf[n] = '\0';
  std::string path(buf);
  auto pos = path.rfind('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

bool file_exists(const std::string& path) {
  struct stat st{};
  return stat(path.c_str(), &st) == 0;
}

std::string absolute_path(const std::string& path) {
  char buf[PATH_MAX];
  if (realpath(path.c_str(), buf)) return buf;
  return path;
}

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

std::string find_agent(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (auto env = xflow::env::get(xflow::env::kAgentPath)) return *env;
  const std::string dir = self_exe_dir();
  for (const char* rel : {"/../lib/libxflow-agent.so", "/libxflow-agent.so"}) {
    std::string candidate = dir + rel;
    if (file_exists(candidate)) return candidate;
  }
  return "";
}

struct RunOptions {
  std::string out_dir = xflow::env::default_out_dir();
  std::string timing_rate;
  std::string dump_signal;
  std::string deny;
  std::string agent;
  std::vector<std::string> command;
};

int cmd_run(const RunOptions& opt) {
  const std::string agent = find_agent(opt.agent);
  if (agent.empty() || !file_exists(agent)) {
    const std::string hint =
        agent.empty() ? self_exe_dir() + "/../lib/libxflow-agent.so" : agent;
    std::fprintf(stderr,
                 "xflow: agent library not found at %s; use --agent or %s\n",
                 hint.c_str(), xflow::env::kAgentPath);
    return 1;
  }
  if (opt.command.empty()) {
    std::fprintf(stderr, "xflow: no command given (use: run [flags] -- CMD ARGS...)\n");
    return 1;
  }
  if (!mkdir_p(opt.out_dir)) {
    std::fprintf(stderr, "xflow: cannot create %s: %s\n", opt.out_dir.c_str(),
                 std::strerror(errno));
    return 1;
  }

  setenv(xflow::env::kOutDir, absolute_path(opt.out_dir).c_str(), 1);
  if (!opt.timing_rate.empty())
    setenv(xflow::env::kTimingRate, opt.timing_rate.c_str(), 1);
  if (!opt.dump_signal.empty())
    setenv(xflow::env::kDumpSignal, opt.dump_signal.c_str(), 1);
  if (!opt.deny.empty()) setenv(xflow::env::kDenyImages, opt.deny.c_str(), 1);

  const std::string agent_abs = absolute_path(agent);
  const char* existing = getenv("LD_PRELOAD");
  const std::string preload =
      existing && *existing ? agent_abs + ":" + existing : agent_abs;
  setenv("LD_PRELOAD", preload.c_str(), 1);

  // The close-on-exec pipe tells exec failure apart from a child that
  // legitimately exited 127: a successful exec closes it silently, a
  // failed one writes errno first.
  int fds[2];
  if (pipe2(fds, O_CLOEXEC) != 0) {
    std::fprintf(stderr, "xflow: pipe: %s\n", std::strerror(errno));
    return 1;
  }

  pid_t pid = fork();
  if (pid < 0) {
    std::fprintf(stderr, "xflow: fork: %s\n", std::strerror(errno));
    return 1;
  }
  if (pid == 0) {
    close(fds[0]);
    std::vector<char*> argv;
    argv.reserve(opt.command.size() + 1);
    for (const auto& a : opt.command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    int err = errno;
    ssize_t ignored = write(fds[1], &err, sizeof err);
    (void)ignored;
    _exit(127);
  }

  close(fds[1]);
  int exec_errno = 0;
  ssize_t n;
  while ((n = read(fds[0], &exec_errno, sizeof exec_errno)) < 0 &&
         errno == EINTR) {
  }
  close(fds[0]);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) {
      std::fprintf(stderr, "xflow: waitpid: %s\n", std::strerror(errno));
      return 1;
    }
  }
  if (n > 0) {
    std::fprintf(stderr, "xflow: cannot run %s: %s\n",
                 opt.command.front().c_str(), std::strerror(exec_errno));
    return 1;
  }
  // Stays on stderr so the child's stdout remains byte-identical to an
  // uninstrumented run.
  std::fprintf(stderr, "xflow: ledgers in %s\n",
               absolute_path(opt.out_dir).c_str());
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 1;
}

struct ReportOptions {
  std::string out_dir = xflow::env::default_out_dir();
  std::string view;  // empty = overview (component + top callee's APIs)
  std::string image;
  std::string format = "text";
};

// Callee-library row with the most attributed time, or "" when the
// component spent everything in self/wait.
std::string largest_callee(const xflow::ComponentView& view) {
  std::string best;
  std::uint64_t best_cycles = 0;
  for (const auto& row : view.rows) {
    if (row.path.empty()) continue;
    if (row.cycles >= best_cycles && row.cycles > 0) {
      best_cycles = row.cycles;
      best = row.path;
    }
  }
  return best;
}

int cmd_report(const ReportOptions& opt) {
  xflow::Aggregate agg =
      xflow::merge_ledger_dir(opt.out_dir, xflow::default_wait_set());
  if (!agg.ok) {
    std::fprintf(stderr, "xflow: %s\n", agg.error.c_str());
    return 1;
  }
  for (const auto& w : agg.warnings)
    std::fprintf(stderr, "xflow: warning: %s\n", w.c_str());
  xflow::resolve_owners(agg);

  const bool json = opt.format == "json";
  std::string body;
  if (opt.view.empty()) {
    std::string err;
    const std::string image = xflow::select_image(agg, opt.image, err);
    if (image.empty()) {
      std::fprintf(stderr, "xflow: %s\n", err.c_str());
      return 1;
    }
    auto component = xflow::build_component_view(agg, image);
    const std::string callee = largest_callee(component);
    xflow::ApiView api;
    if (!callee.empty()) api = xflow::build_api_view(agg, callee);
    if (json) {
      body = xflow::render_json_overview(component,
                                         callee.empty() ? nullptr : &api);
    } else {
      body = render_text(component);
      if (!callee.empty()) {
        body += "\n";
        body += render_text(api);
      }
    }
  } else if (opt.view == "component" || opt.view == "api") {
    std::string err;
    const std::string image = xflow::select_image(agg, opt.image, err);
    if (image.empty()) {
      std::fprintf(stderr, "xflow: %s\n", err.c_str());
      return 1;
    }
    if (opt.view == "component") {
      auto view = xflow::build_component_view(agg, image);
      body = json ? render_json(view) : render_text(view);
    } else {
      auto view = xflow::build_api_view(agg, image);
      body = json ? render_json(view) : render_text(view);
    }
  } else {
    auto report = xflow::build_imbalance(agg, 4.0);
    body = json ? render_json(report) : render_text(report);
  }
  std::fputs(body.c_str(), stdout);
  return agg.warnings.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  // Split at "--" before parsing: everything behind it belongs to the
  // profiled command verbatim, flags and all.
  std::vector<std::string> own;
  std::vector<std::string> command;
  bool past_dashes = false;
  for (int i = 0; i < argc; ++i) {
    if (!past_dashes && std::strcmp(argv[i], "--") == 0) {
      past_dashes = true;
      continue;
    }
    (past_dashes ? command : own).emplace_back(argv[i]);
  }

  CLI::App app{"dynamic-linking API profiler"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand(
      "run", "Profile a command (everything after -- runs unmodified)");
  run->add_option("--out", run_opt.out_dir, "Ledger output directory")
      ->capture_default_str();
  run->add_option("--timing-rate", run_opt.timing_rate,
                  "Time every Nth call per site (N >= 1)")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            char* end = nullptr;
            errno = 0;
            unsigned long long v = std::strtoull(s.c_str(), &end, 10);
            if (errno || !end || *end || s.empty() || v < 1)
              return "expected an integer >= 1, got '" + s + "'";
            return {};
          },
          "UINT>=1"));
  run->add_option("--dump-signal", run_opt.dump_signal,
                  "Signal that snapshots ledgers mid-run (name or number)");
  run->add_option("--deny", run_opt.deny,
                  "Comma-separated image substrings to leave unpatched");
  run->add_option("--agent", run_opt.agent, "Agent library path");
  run->allow_extras();

  ReportOptions rep_opt;
  auto* report = app.add_subcommand("report", "Render views from ledgers");
  report->add_option("--out", rep_opt.out_dir, "Ledger directory to read")
      ->capture_default_str();
  report->add_option("--view", rep_opt.view,
                     "component, api, or imbalance (default: component "
                     "overview plus the busiest callee's api view)")
      ->check(CLI::IsMember({"component", "api", "imbalance"}));
  report->add_option("--image", rep_opt.image,
                     "Image the view focuses on (path, basename, or "
                     "unique substring; default: the profiled executable)");
  report->add_option("--format", rep_opt.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  std::vector<char*> own_argv;
  own_argv.reserve(own.size());
  for (auto& s : own) own_argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(own_argv.size()), own_argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (run->parsed()) {
    // Tokens before "--" that no flag consumed are the command too, so
    // `xflow run ls` works; mixing both forms is rejected as ambiguous.
    std::vector<std::string> extras = run->remaining();
    if (!extras.empty() && !command.empty()) {
      std::fprintf(stderr,
                   "xflow: unexpected arguments before --: '%s'\n",
                   extras.front().c_str());
      return 1;
    }
    run_opt.command = command.empty() ? std::move(extras) : std::move(command);
    return cmd_run(run_opt);
  }
  return cmd_report(rep_opt);
}
