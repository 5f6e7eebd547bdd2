#pragma once

// Minimal POSIX subprocess runner: `/bin/sh -c <command>` with merged
// stdout/stderr capture and a wall-clock limit.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <string>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rcrepair/error.hpp"

namespace rcrepair {

struct ProcessResult {
  int exit_code = 0;
  bool signaled = false;
  int signal = 0;
  bool timed_out = false;
  std::string output;
};

/// Substitutes every `{key}` occurrence in `tmpl`; unknown keys are left as-is.
template <typename Map>
std::string substitute_slots(std::string tmpl, const Map& slots) {
  for (const auto& [key, value] : slots) {
    const std::string needle = "{" + key + "}";
    for (auto pos = tmpl.find(needle); pos != std::string::npos;
         pos = tmpl.find(needle, pos + value.size()))
      tmpl.replace(pos, needle.size(), value);
  }
  return tmpl;
}

/// Quotes `s` for safe interpolation into a POSIX shell command.
inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

inline ProcessResult run_command(const std::string& command, const std::filesystem::path& cwd,
                                 std::chrono::milliseconds timeout) {
  int fds[2];
  if (pipe(fds) != 0) throw Error("process", "pipe() failed");

  pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error("process", "fork() failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    dup2(fds[1], STDERR_FILENO);
    close(fds[0]);
    close(fds[1]);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);
  fcntl(fds[0], F_SETFL, fcntl(fds[0], F_GETFL) | O_NONBLOCK);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[4096];
  bool open = true;
  while (open) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      break;
    }
    pollfd p{fds[0], POLLIN, 0};
    int rc = poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 100)));
    if (rc > 0) {
      ssize_t n = read(fds[0], buf, sizeof buf);
      if (n > 0)
        result.output.append(buf, static_cast<std::size_t>(n));
      else if (n == 0)
        open = false;
    }
  }
  close(fds[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signaled = !result.timed_out;
    result.signal = WTERMSIG(status);
    result.exit_code = 128 + result.signal;
  }
  return result;
}

}  // namespace rcrepair
