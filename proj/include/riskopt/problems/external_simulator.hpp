#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "riskopt/errors.hpp"
#include "riskopt/problems/problem.hpp"

namespace riskopt::problems {

/// Child process speaking newline-delimited JSON on stdin/stdout.
/// Request {"id","x","w","seed"}, response {"id","y"}.
class ExternalSimulator {
 public:
  explicit ExternalSimulator(std::string command, double timeout_s = 600.0)
      : command_(std::move(command)), timeout_s_(timeout_s) {
    if (command_.empty()) throw InvalidArgument("external simulator: empty command");
    int in[2], out[2], err[2];
    if (pipe(in) != 0 || pipe(out) != 0 || pipe(err) != 0)
      throw SimulatorError("external simulator: pipe failed: " + std::string(std::strerror(errno)));
    const std::string script = "exec " + command_;
    pid_ = fork();
    if (pid_ < 0) throw SimulatorError("external simulator: fork failed: " + std::string(std::strerror(errno)));
    if (pid_ == 0) {
      dup2(in[0], STDIN_FILENO);
      dup2(out[1], STDOUT_FILENO);
      dup2(err[1], STDERR_FILENO);
      for (int fd : {in[0], in[1], out[0], out[1], err[0], err[1]}) close(fd);
      execl("/bin/sh", "sh", "-c", script.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(in[0]);
    close(out[1]);
    close(err[1]);
    to_child_ = in[1];
    from_child_ = out[0];
    err_child_ = err[0];
    fcntl(from_child_, F_SETFL, fcntl(from_child_, F_GETFL) | O_NONBLOCK);
    fcntl(err_child_, F_SETFL, fcntl(err_child_, F_GETFL) | O_NONBLOCK);
    signal(SIGPIPE, SIG_IGN);
  }

  ExternalSimulator(const ExternalSimulator&) = delete;
  ExternalSimulator& operator=(const ExternalSimulator&) = delete;

  ~ExternalSimulator() { shutdown(); }

  double query(const Vector& x, const Vector& w, std::uint64_t seed) {
    if (pid_ <= 0) throw SimulatorError("external simulator is not running", stderr_);
    const long id = next_id_++;
    nlohmann::json req;
    req["id"] = id;
    req["x"] = to_std(x);
    req["w"] = to_std(w);
    req["seed"] = seed;
    const std::string line = req.dump() + "\n";
    write_all(line);
    const std::string resp = read_line();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(resp);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError("external simulator: malformed response line '" + resp + "': " + e.what(), stderr_);
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("y") || !j["id"].is_number_integer() ||
        !j["y"].is_number())
      throw ProtocolError("external simulator: response needs integer 'id' and numeric 'y': " + resp, stderr_);
    if (j["id"].get<long>() != id)
      throw ProtocolError("external simulator: response id " + std::to_string(j["id"].get<long>()) +
                              " does not match request " + std::to_string(id),
                          stderr_);
    const double y = j["y"].get<double>();
    if (!std::isfinite(y)) throw ProtocolError("external simulator: non-finite y", stderr_);
    return y;
  }

  const std::string& captured_stderr() const { return stderr_; }
  long queries() const { return next_id_; }

 private:
  void write_all(const std::string& s) {
    std::size_t done = 0;
    while (done < s.size()) {
      const ssize_t n = write(to_child_, s.data() + done, s.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        drain_stderr();
        throw SimulatorError("external simulator: write failed (" + std::string(std::strerror(errno)) +
                                 ")" + exit_note(),
                             stderr_);
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration<double>(timeout_s_);
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const double left = std::chrono::duration<double>(deadline - clock::now()).count();
      if (left <= 0.0) {
        drain_stderr();
        kill_child();
        throw SimulatorError("external simulator: no response within " + std::to_string(timeout_s_) + " s",
                             stderr_);
      }
      pollfd fds[2] = {{from_child_, POLLIN, 0}, {err_child_, POLLIN, 0}};
      const int ms = static_cast<int>(std::min(left * 1000.0, 1e9)) + 1;
      const int r = poll(fds, 2, ms);
      if (r < 0 && errno != EINTR) throw SimulatorError("external simulator: poll failed", stderr_);
      drain_stderr();
      if (r > 0 && (fds[0].revents & (POLLIN | POLLHUP | POLLERR))) {
        char buf[4096];
        const ssize_t n = read(from_child_, buf, sizeof buf);
        if (n > 0) {
          buffer_.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
          throw SimulatorError("external simulator: process closed its output" + exit_note(), stderr_);
        }
      }
    }
  }

  void drain_stderr() {
    if (err_child_ < 0) return;
    char buf[4096];
    for (;;) {
      const ssize_t n = read(err_child_, buf, sizeof buf);
      if (n <= 0) break;
      stderr_.append(buf, static_cast<std::size_t>(n));
    }
  }

  std::string exit_note() {
    if (pid_ <= 0) return {};
    int status = 0;
    // brief grace period for the exit status to become available
    for (int i = 0; i < 50; ++i) {
      const pid_t r = waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        pid_ = -1;
        if (WIFEXITED(status)) return "; exit status " + std::to_string(WEXITSTATUS(status));
        if (WIFSIGNALED(status)) return "; killed by signal " + std::to_string(WTERMSIG(status));
        return {};
      }
      usleep(2000);
    }
    return {};
  }

  void kill_child() {
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

  void shutdown() {
    if (to_child_ >= 0) close(to_child_);
    to_child_ = -1;
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 100 && waitpid(pid_, &status, WNOHANG) == 0; ++i) usleep(5000);
      if (waitpid(pid_, &status, WNOHANG) == 0) kill_child();
      pid_ = -1;
    }
    if (from_child_ >= 0) close(from_child_);
    if (err_child_ >= 0) close(err_child_);
    from_child_ = err_child_ = -1;
  }

  std::string command_;
  double timeout_s_;
  pid_t pid_ = -1;
  int to_child_ = -1, from_child_ = -1, err_child_ = -1;
  long next_id_ = 0;
  std::string buffer_;
  std::string stderr_;
};

/// A problem whose observations come from an external simulator. There is no
/// ground-truth oracle, so optimality gaps are unavailable.
inline ProblemSpec external_problem(const std::string& command, Vector x_lower, Vector x_upper, qmc::WDomain w,
                                    risk::RiskKind kind, double alpha, int l_inner, int l_eval,
                                    double timeout_s = 600.0) {
  auto sim = std::make_shared<ExternalSimulator>(command, timeout_s);
  ProblemSpec p;
  p.name = "external";
  p.x_lower = std::move(x_lower);
  p.x_upper = std::move(x_upper);
  p.w = std::move(w);
  p.kind = kind;
  p.alpha = alpha;
  p.l_inner = l_inner;
  p.l_eval = l_eval;
  p.has_oracle = false;
  p.sampler = [sim](const Vector& x, const Vector& wp, std::uint64_t seed) { return sim->query(x, wp, seed); };
  p.validate();
  return p;
}

}  // namespace riskopt::problems
