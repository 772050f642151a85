#include "arbor/subprocess.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <poll.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

namespace arbor::exec {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ms_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
      .count();
}

// Writing to a dead child's stdin must surface as EPIPE, not kill the harness.
void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblock(int fd) { ::fcntl(fd, F_SETFL, O_NONBLOCK); }

struct Pipe {
  int read_fd = -1;
  int write_fd = -1;

  // O_CLOEXEC at creation: children forked concurrently from other threads
  // must not inherit each other's pipe ends, or EOF never arrives.
  bool open() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) return false;
    read_fd = fds[0];
    write_fd = fds[1];
    return true;
  }
  void close_read() {
    if (read_fd >= 0) ::close(read_fd), read_fd = -1;
  }
  void close_write() {
    if (write_fd >= 0) ::close(write_fd), write_fd = -1;
  }
  ~Pipe() {
    close_read();
    close_write();
  }
};

}  // namespace

SpawnResult run_subprocess(const SpawnRequest& request) {
  ignore_sigpipe_once();
  SpawnResult result;
  auto start = Clock::now();

  if (request.argv.empty()) {
    result.spawn_failed = true;
    result.spawn_error = "empty argv";
    return result;
  }

  Pipe in_pipe, out_pipe, err_pipe;
  if (!in_pipe.open() || !out_pipe.open() || !err_pipe.open()) {
    result.spawn_failed = true;
    result.spawn_error = std::string("pipe: ") + std::strerror(errno);
    return result;
  }

  std::vector<std::string> argv_store = request.argv;
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);

  // Sanitized environment: fixed whitelist plus a scratch HOME/TMPDIR.
  std::vector<std::string> env_store = {
      "PATH=/usr/local/bin:/usr/bin:/bin",
      "LC_ALL=C.UTF-8",
      "LANG=C.UTF-8",
      "PYTHONIOENCODING=utf-8",
      "PYTHONDONTWRITEBYTECODE=1",
      "PYTHONHASHSEED=0",
      "HOME=" + request.workdir,
      "TMPDIR=" + request.workdir,
  };
  std::vector<char*> envp;
  for (std::string& e : env_store) envp.push_back(e.data());
  envp.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) {
    result.spawn_failed = true;
    result.spawn_error = std::string("fork: ") + std::strerror(errno);
    return result;
  }

  if (pid == 0) {
    // Child: own process group so the whole candidate tree can be killed.
    ::setpgid(0, 0);
    if (!request.workdir.empty() && ::chdir(request.workdir.c_str()) != 0) ::_exit(125);
    // dup2 clears CLOEXEC on the standard fds; every other pipe end closes
    // itself at exec.
    ::dup2(in_pipe.read_fd, STDIN_FILENO);
    ::dup2(out_pipe.write_fd, STDOUT_FILENO);
    ::dup2(err_pipe.write_fd, STDERR_FILENO);

    if (request.memory_cap_bytes > 0) {
      rlimit lim;
      lim.rlim_cur = static_cast<rlim_t>(request.memory_cap_bytes);
      lim.rlim_max = static_cast<rlim_t>(request.memory_cap_bytes);
      ::setrlimit(RLIMIT_AS, &lim);
    }
    rlimit core{0, 0};
    ::setrlimit(RLIMIT_CORE, &core);

    ::execvpe(argv[0], argv.data(), envp.data());
    ::_exit(126);  // exec failed
  }

  // Parent.
  in_pipe.close_read();
  out_pipe.close_write();
  err_pipe.close_write();
  set_nonblock(in_pipe.write_fd);
  set_nonblock(out_pipe.read_fd);
  set_nonblock(err_pipe.read_fd);

  const std::string& stdin_data = request.stdin_data;
  std::size_t stdin_off = 0;
  bool stdin_done = stdin_data.empty();
  if (stdin_done) in_pipe.close_write();

  bool killed = false;
  auto deadline = start + std::chrono::milliseconds(request.timeout_ms);

  auto append_capped = [&](std::string& sink, bool& truncated, const char* data,
                           std::size_t n) {
    std::size_t cap = static_cast<std::size_t>(request.max_output_bytes);
    if (sink.size() >= cap) {
      truncated = true;
      return;  // keep draining, discard beyond the cap
    }
    std::size_t take = std::min(n, cap - sink.size());
    sink.append(data, take);
    if (take < n) truncated = true;
  };

  while (out_pipe.read_fd >= 0 || err_pipe.read_fd >= 0 || !stdin_done) {
    if (!killed && Clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      killed = true;
      result.timed_out = true;
    }

    pollfd fds[3];
    int nfds = 0;
    int out_idx = -1, err_idx = -1, in_idx = -1;
    if (out_pipe.read_fd >= 0) {
      out_idx = nfds;
      fds[nfds++] = {out_pipe.read_fd, POLLIN, 0};
    }
    if (err_pipe.read_fd >= 0) {
      err_idx = nfds;
      fds[nfds++] = {err_pipe.read_fd, POLLIN, 0};
    }
    if (!stdin_done) {
      in_idx = nfds;
      fds[nfds++] = {in_pipe.write_fd, POLLOUT, 0};
    }

    int wait_ms = 20;
    if (!killed) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                      deadline - Clock::now())
                      .count();
      if (left < 0) left = 0;
      wait_ms = static_cast<int>(std::min<std::int64_t>(left, 50)) + 1;
    }
    int rc = ::poll(fds, static_cast<nfds_t>(nfds), wait_ms);
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;

    char buf[8192];
    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t n = ::read(out_pipe.read_fd, buf, sizeof buf);
      if (n > 0)
        append_capped(result.stdout_text, result.stdout_truncated, buf, (std::size_t)n);
      else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR))
        out_pipe.close_read();
    }
    if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t n = ::read(err_pipe.read_fd, buf, sizeof buf);
      if (n > 0)
        append_capped(result.stderr_text, result.stderr_truncated, buf, (std::size_t)n);
      else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR))
        err_pipe.close_read();
    }
    if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
      if (fds[in_idx].revents & (POLLERR | POLLHUP)) {
        stdin_done = true;
        in_pipe.close_write();
      } else {
        ssize_t n = ::write(in_pipe.write_fd, stdin_data.data() + stdin_off,
                            stdin_data.size() - stdin_off);
        if (n > 0) {
          stdin_off += static_cast<std::size_t>(n);
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          stdin_done = true;  // EPIPE: child closed stdin, fine
          in_pipe.close_write();
        }
        if (stdin_off >= stdin_data.size()) {
          stdin_done = true;
          in_pipe.close_write();
        }
      }
    }
  }

  // Pipes are drained; now wait for exit, still honoring the deadline.
  int status = 0;
  for (;;) {
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) break;
    if (!killed && Clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      killed = true;
      result.timed_out = true;
    }
    struct timespec ts{0, 2'000'000};  // 2 ms
    ::nanosleep(&ts, nullptr);
  }

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.term_signal = WTERMSIG(status);
    result.exit_code = 128 + result.term_signal;
  }
  if ((result.exit_code == 126 || result.exit_code == 125) &&
      result.stdout_text.empty() && result.stderr_text.empty() &&
      !result.timed_out) {
    result.spawn_failed = true;
    result.spawn_error = result.exit_code == 125
                             ? "cannot enter workdir " + request.workdir
                             : "cannot execute " + request.argv[0];
  }
  result.wall_ms = ms_since(start);
  return result;
}

}  // namespace arbor::exec
