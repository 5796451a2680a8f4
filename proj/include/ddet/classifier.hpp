#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <errno.h>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "ddet/errors.hpp"
#include "ddet/geometry.hpp"
#include "ddet/io.hpp"
#include "ddet/proposal.hpp"

namespace ddet {

struct ClassScore {
  std::string label;
  double prob = 0.0;
};

struct Detection {
  BBox2D bbox;
  std::string label;
  double prob = 0.0;
  int cluster_id = 0;
};

// Backends must be deterministic for a given image, return scores sorted by
// descending probability, and be safe to call from several threads at once.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual std::vector<ClassScore> classify(const Image& subimage) const = 0;
};

using Palette = std::map<std::string, Rgb>;

// Shared default: the stub classifier scores against it and the synthetic
// scene generator paints with it.
inline Palette default_palette() {
  return Palette{
      {"blue", Rgb{25, 25, 230}},  {"cyan", Rgb{25, 230, 230}},
      {"green", Rgb{25, 230, 25}}, {"magenta", Rgb{230, 25, 230}},
      {"red", Rgb{230, 25, 25}},   {"yellow", Rgb{230, 230, 25}},
  };
}

// Mean-color nearest-palette classifier: softmax over negative Euclidean
// RGB distances. Deterministic and training-free, so end-to-end accuracy on
// flat-colored synthetic scenes is controllable: uniform crops of a palette
// color score near 1, crops diluted by background degrade smoothly.
class StubClassifier : public ClassifierBackend {
 public:
  explicit StubClassifier(Palette palette, double temperature = 25.0)
      : palette_(std::move(palette)), temperature_(temperature) {
    if (palette_.empty()) throw ConfigError("stub classifier palette must not be empty");
    for (auto a = palette_.begin(); a != palette_.end(); ++a)
      for (auto b = std::next(a); b != palette_.end(); ++b)
        if (a->second == b->second)
          throw ConfigError("palette colors must be pairwise distinct ('" + a->first +
                            "' and '" + b->first + "')");
    if (!(temperature_ > 0.0)) throw ConfigError("softmax temperature must be positive");
  }

  std::vector<ClassScore> classify(const Image& subimage) const override {
    double sr = 0, sg = 0, sb = 0;
    const auto& bytes = subimage.bytes();
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
      sr += bytes[i];
      sg += bytes[i + 1];
      sb += bytes[i + 2];
    }
    const double n = static_cast<double>(subimage.width()) * subimage.height();
    const double mr = sr / n, mg = sg / n, mb = sb / n;

    std::vector<ClassScore> scores;
    scores.reserve(palette_.size());
    double min_d = 0.0;
    bool first = true;
    for (const auto& [label, color] : palette_) {
      const double dr = mr - color.r, dg = mg - color.g, db = mb - color.b;
      const double d = std::sqrt(dr * dr + dg * dg + db * db);
      if (first || d < min_d) min_d = d;
      first = false;
      scores.push_back(ClassScore{label, d});  // distance for now
    }
    double sum = 0.0;
    for (auto& s : scores) {
      s.prob = std::exp(-(s.prob - min_d) / temperature_);
      sum += s.prob;
    }
    for (auto& s : scores) s.prob /= sum;

    std::sort(scores.begin(), scores.end(), [](const ClassScore& a, const ClassScore& b) {
      if (a.prob != b.prob) return a.prob > b.prob;
      return a.label < b.label;
    });
    return scores;
  }

  const Palette& palette() const { return palette_; }

 private:
  Palette palette_;
  double temperature_;
};

// ---------------------------------------------------------------------------
// external backend: PPM on the child's stdin, JSON scores on its stdout
// ---------------------------------------------------------------------------

namespace detail {

struct ChildResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string out;
  std::string err;
};

// Runs `command` through /bin/sh, feeding stdin_bytes and collecting both
// output streams. Non-blocking pipes driven by poll() so large images cannot
// deadlock against a child that writes before reading everything.
inline ChildResult run_child(const std::string& command, std::string_view stdin_bytes,
                             double timeout_s) {
  // O_CLOEXEC keeps concurrently spawned children from inheriting each
  // other's pipe ends; a leaked write end would hold off EOF on a sibling's
  // stdin forever.
  int in_pipe[2] = {-1, -1}, out_pipe[2] = {-1, -1}, err_pipe[2] = {-1, -1};
  if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0 ||
      pipe2(err_pipe, O_CLOEXEC) != 0) {
    const std::string msg = std::strerror(errno);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
      if (fd >= 0) close(fd);
    throw BackendError("pipe2() failed: " + msg);
  }

  const pid_t pid = fork();
  if (pid < 0) throw BackendError("fork() failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    // dup2 clears O_CLOEXEC on the standard fds; everything else closes at exec
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    signal(SIGPIPE, SIG_DFL);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  for (int fd : {in_pipe[1], out_pipe[0], err_pipe[0]})
    fcntl(fd, F_SETFL, fcntl(fd, F_GETFL) | O_NONBLOCK);

  // Writing into a dead child's pipe must surface as EPIPE, not SIGPIPE.
  struct IgnoreSigpipe {
    IgnoreSigpipe() { signal(SIGPIPE, SIG_IGN); }
  };
  static IgnoreSigpipe ignore_sigpipe;

  ChildResult res;
  std::size_t written = 0;
  int stdin_fd = in_pipe[1], stdout_fd = out_pipe[0], stderr_fd = err_pipe[0];
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);

  while (stdout_fd >= 0 || stderr_fd >= 0 || stdin_fd >= 0) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      kill(pid, SIGKILL);
      res.timed_out = true;
      break;
    }
    const int wait_ms = static_cast<int>(std::min<long long>(
        1000, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1));

    pollfd fds[3];
    int nfds = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (stdin_fd >= 0) {
      idx_in = nfds;
      fds[nfds++] = pollfd{stdin_fd, POLLOUT, 0};
    }
    if (stdout_fd >= 0) {
      idx_out = nfds;
      fds[nfds++] = pollfd{stdout_fd, POLLIN, 0};
    }
    if (stderr_fd >= 0) {
      idx_err = nfds;
      fds[nfds++] = pollfd{stderr_fd, POLLIN, 0};
    }
    const int rv = poll(fds, static_cast<nfds_t>(nfds), wait_ms);
    if (rv < 0) {
      if (errno == EINTR) continue;
      kill(pid, SIGKILL);
      waitpid(pid, nullptr, 0);
      throw BackendError("poll() failed: " + std::string(std::strerror(errno)));
    }
    if (rv == 0) continue;  // deadline re-checked at loop top

    if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      if (written >= stdin_bytes.size() || (fds[idx_in].revents & (POLLERR | POLLHUP))) {
        close(stdin_fd);
        stdin_fd = -1;
      } else {
        const ssize_t k = write(stdin_fd, stdin_bytes.data() + written,
                                std::min<std::size_t>(stdin_bytes.size() - written, 65536));
        if (k > 0) {
          written += static_cast<std::size_t>(k);
          if (written >= stdin_bytes.size()) {
            close(stdin_fd);
            stdin_fd = -1;
          }
        } else if (k < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
          close(stdin_fd);  // EPIPE: child stopped reading; keep collecting output
          stdin_fd = -1;
        }
      }
    }
    for (auto [idx, fd_ptr, buf] :
         {std::tuple{idx_out, &stdout_fd, &res.out}, std::tuple{idx_err, &stderr_fd, &res.err}}) {
      if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      char tmp[65536];
      const ssize_t k = read(*fd_ptr, tmp, sizeof(tmp));
      if (k > 0) {
        buf->append(tmp, static_cast<std::size_t>(k));
      } else if (k == 0 || (k < 0 && errno != EAGAIN && errno != EWOULDBLOCK)) {
        close(*fd_ptr);
        *fd_ptr = -1;
      }
    }
  }

  if (stdin_fd >= 0) close(stdin_fd);
  if (stdout_fd >= 0) close(stdout_fd);
  if (stderr_fd >= 0) close(stderr_fd);

  // A child may close its streams and linger; the deadline still applies.
  int status = 0;
  while (true) {
    const pid_t r = waitpid(pid, &status, res.timed_out ? 0 : WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      res.timed_out = true;
      continue;
    }
    usleep(2000);
  }
  if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) res.exit_code = 128 + WTERMSIG(status);
  return res;
}

}  // namespace detail

// Adapter for plugging in a real network without linking one: the child
// process receives the sub-image as binary PPM (P6) on stdin and must print
// a JSON array of {"label": string, "prob": number} to stdout and exit 0.
class ExternalClassifier : public ClassifierBackend {
 public:
  explicit ExternalClassifier(std::string command, double timeout_s = 10.0)
      : command_(std::move(command)), timeout_s_(timeout_s) {
    if (command_.empty()) throw ConfigError("external classifier command must not be empty");
    if (!(timeout_s_ > 0.0)) throw ConfigError("classifier timeout must be positive");
  }

  std::vector<ClassScore> classify(const Image& subimage) const override {
    const std::string ppm = write_ppm(subimage);
    detail::ChildResult child = detail::run_child(command_, ppm, timeout_s_);
    if (child.timed_out)
      throw TimeoutError("external classifier timed out after " + std::to_string(timeout_s_) +
                         " s");
    if (child.exit_code != 0)
      throw BackendError("external classifier exited with code " +
                         std::to_string(child.exit_code) +
                         (child.err.empty() ? "" : ": " + child.err));

    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(child.out);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("external classifier emitted malformed JSON: ") + e.what());
    }
    if (!parsed.is_array()) throw ProtocolError("external classifier output must be a JSON array");

    std::vector<ClassScore> scores;
    double sum = 0.0;
    for (const auto& item : parsed) {
      if (!item.is_object() || !item.contains("label") || !item.contains("prob") ||
          !item["label"].is_string() || !item["prob"].is_number())
        throw ProtocolError("each score must be {\"label\": string, \"prob\": number}");
      const double prob = item["prob"].get<double>();
      if (!(prob >= 0.0 && prob <= 1.0))
        throw ProtocolError("score probability " + std::to_string(prob) + " outside [0,1]");
      scores.push_back(ClassScore{item["label"].get<std::string>(), prob});
      sum += prob;
    }
    if (sum > 1.0 + 1e-9)
      throw ProtocolError("score probabilities sum to " + std::to_string(sum) + " > 1");

    std::sort(scores.begin(), scores.end(), [](const ClassScore& a, const ClassScore& b) {
      if (a.prob != b.prob) return a.prob > b.prob;
      return a.label < b.label;
    });
    return scores;
  }

 private:
  std::string command_;
  double timeout_s_;
};

// Output filter: a proposal becomes a detection iff its top-1 probability
// clears lambda; equality keeps (only scores strictly below the threshold
// are discarded).
inline std::vector<Detection> filter_by_lambda(
    const std::vector<std::pair<Proposal, std::vector<ClassScore>>>& scored, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in [0,1]");
  std::vector<Detection> out;
  for (const auto& [proposal, scores] : scored) {
    if (scores.empty()) continue;
    const ClassScore& top = scores.front();
    if (top.prob >= lambda)
      out.push_back(Detection{proposal.bbox, top.label, top.prob, proposal.cluster_id});
  }
  return out;
}

}  // namespace ddet
