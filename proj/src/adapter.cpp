#include "sopwl/adapter.hpp"

#include "sopwl/errors.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace sopwl {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

// ---------------------------------------------------------------------------

SubprocessConfig SubprocessConfig::from_command(std::string_view command,
                                                double timeout_seconds) {
  SubprocessConfig cfg;
  cfg.timeout_seconds = timeout_seconds;
  std::istringstream ss{std::string(command)};
  std::string word;
  while (ss >> word) {
    if (cfg.executable.empty()) {
      cfg.executable = word;
    } else {
      cfg.args.push_back(word);
    }
  }
  if (cfg.executable.empty()) {
    throw AdapterError("adapter command is empty");
  }
  return cfg;
}

SubprocessAdapter::SubprocessAdapter(SubprocessConfig config)
    : config_(std::move(config)) {
  if (config_.executable.empty()) {
    throw AdapterError("adapter executable is empty");
  }
  if (!(config_.timeout_seconds > 0.0)) {
    throw AdapterError("adapter timeout must be positive");
  }
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto p = s.find(from); p != std::string::npos;
       p = s.find(from, p + to.size())) {
    s.replace(p, from.size(), to);
  }
}

}  // namespace

std::vector<std::string> SubprocessAdapter::expand_args(
    const fs::path& lp_path, const fs::path& sol_path) const {
  std::vector<std::string> args = config_.args;
  const bool templated = std::any_of(args.begin(), args.end(), [](auto& a) {
    return a.find("{lp}") != std::string::npos ||
           a.find("{sol}") != std::string::npos;
  });
  if (!templated) {
    args.emplace_back("{lp}");
    args.emplace_back("{sol}");
  }
  std::ostringstream timeout;
  timeout << config_.timeout_seconds;
  for (auto& a : args) {
    replace_all(a, "{lp}", lp_path.string());
    replace_all(a, "{sol}", sol_path.string());
    replace_all(a, "{timeout}", timeout.str());
  }
  return args;
}

void SubprocessAdapter::run(const fs::path& lp_path, const fs::path& sol_path,
                            const fs::path& log_path) const {
  std::vector<std::string> args = expand_args(lp_path, sol_path);
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(config_.executable.c_str()));
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  const int log_fd =
      ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (log_fd < 0) {
    throw AdapterError("cannot open solver log " + log_path.string());
  }
  // exec failures are reported back through this close-on-exec pipe.
  int status_pipe[2];
  if (::pipe2(status_pipe, O_CLOEXEC) != 0) {
    ::close(log_fd);
    throw AdapterError("pipe: " + std::string(std::strerror(errno)));
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(log_fd);
    ::close(status_pipe[0]);
    ::close(status_pipe[1]);
    throw AdapterError("fork: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::close(status_pipe[0]);
    ::dup2(log_fd, STDOUT_FILENO);
    ::dup2(log_fd, STDERR_FILENO);
    ::setpgid(0, 0);
    ::execvp(argv[0], argv.data());
    const int err = errno;
    [[maybe_unused]] auto n = ::write(status_pipe[1], &err, sizeof(err));
    ::_exit(127);
  }
  ::close(log_fd);
  ::close(status_pipe[1]);
  int exec_errno = 0;
  const auto got = ::read(status_pipe[0], &exec_errno, sizeof(exec_errno));
  ::close(status_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof(exec_errno))) {
    ::waitpid(pid, nullptr, 0);
    throw AdapterError("cannot launch '" + config_.executable +
                       "': " + std::strerror(exec_errno));
  }

  using clock = std::chrono::steady_clock;
  const auto deadline =
      clock::now() + std::chrono::duration_cast<clock::duration>(
                         std::chrono::duration<double>(config_.timeout_seconds));
  int wstatus = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &wstatus, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) {
      throw AdapterError("waitpid: " + std::string(std::strerror(errno)));
    }
    if (clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw AdapterError("solver timed out after " +
                         std::to_string(config_.timeout_seconds) +
                         " s (log: " + log_path.string() + ")");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(wstatus) || WEXITSTATUS(wstatus) != 0) {
    throw AdapterError("solver '" + config_.executable +
                       "' failed with status " +
                       std::to_string(WIFEXITED(wstatus)
                                          ? WEXITSTATUS(wstatus)
                                          : 128 + WTERMSIG(wstatus)) +
                       " (log: " + log_path.string() + ")");
  }
}

void CallbackAdapter::run(const fs::path& lp_path, const fs::path& sol_path,
                          const fs::path& log_path) const {
  write_file(log_path, "in-process solver\n");
  write_file(sol_path, fn_(read_file(lp_path)));
}

// ---------------------------------------------------------------------------

SolveResult solve(const MilpModel& model, const SolverAdapter& adapter,
                  const fs::path& work_dir) {
  fs::create_directories(work_dir);
  SolveResult result;
  result.lp_path = work_dir / "model.lp";
  result.solution_path = work_dir / "solution.sol";
  result.log_path = work_dir / "solver.log";
  write_file(result.lp_path, write_lp(model));
  std::error_code ec;
  fs::remove(result.solution_path, ec);

  const auto start = std::chrono::steady_clock::now();
  adapter.run(result.lp_path, result.solution_path, result.log_path);
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();

  if (!fs::exists(result.solution_path)) {
    throw AdapterError("solver produced no solution file (log: " +
                       result.log_path.string() + ")");
  }
  result.solution = parse_solution(read_file(result.solution_path), model);
  if (result.solution.status == SolveStatus::Error) {
    throw AdapterError("solver reported error status (log: " +
                       result.log_path.string() + ")");
  }
  return result;
}

}  // namespace sopwl
