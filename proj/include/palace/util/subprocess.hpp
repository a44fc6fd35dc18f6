#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <string>
#include <string_view>

#include "palace/error.hpp"

namespace palace {

struct CommandResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string out;
};

/// Runs `command` through /bin/sh, feeding `input` on stdin and capturing
/// stdout. The child is killed once `timeout` elapses.
inline CommandResult run_command(const std::string& command, std::string_view input,
                                 std::chrono::milliseconds timeout) {
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0) throw Error(ErrorKind::provider, "pipe() failed");
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw Error(ErrorKind::provider, "pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorKind::provider, "fork() failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  fcntl(to_child[1], F_SETFL, O_NONBLOCK);

  CommandResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t written = 0;
  int write_fd = to_child[1];
  if (input.empty()) {
    close(write_fd);
    write_fd = -1;
  }
  char buf[4096];
  bool reading = true;
  while (reading) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {from_child[0], POLLIN, 0};
    if (write_fd >= 0) fds[nfds++] = {write_fd, POLLOUT, 0};
    if (poll(fds, nfds, static_cast<int>(left.count())) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (write_fd >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const auto n = write(write_fd, input.data() + written, input.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN) written = input.size();
      if (written >= input.size()) {
        close(write_fd);
        write_fd = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const auto n = read(from_child[0], buf, sizeof(buf));
      if (n > 0) {
        result.out.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EAGAIN) {
        reading = false;
      }
    }
  }
  if (write_fd >= 0) close(write_fd);
  close(from_child[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (!result.timed_out && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

}  // namespace palace
