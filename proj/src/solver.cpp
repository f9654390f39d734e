#include "chiropath/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "chiropath/error.hpp"
#include "chiropath/log.hpp"

namespace chiropath {

namespace {

struct ProcessResult {
  std::string output;
  int status = 0;
  bool timed_out = false;
  bool launched = true;
  double wall_seconds = 0.0;
};

ProcessResult run_process(const std::vector<std::string>& argv, double timeout,
                          std::uint64_t memory_limit_mb) {
  ProcessResult result;
  int fds[2];
  if (pipe2(fds, O_CLOEXEC) != 0) throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    dup2(fds[1], STDERR_FILENO);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    if (memory_limit_mb > 0) {
      const rlim_t bytes = static_cast<rlim_t>(memory_limit_mb) * 1024 * 1024;
      rlimit lim{bytes, bytes};
      setrlimit(RLIMIT_AS, &lim);
    }
    execv(args[0], args.data());
    const char msg[] = "exec failed\n";
    [[maybe_unused]] auto w = write(STDERR_FILENO, msg, sizeof msg - 1);
    _exit(127);
  }
  close(fds[1]);

  const auto deadline = start + std::chrono::duration<double>(timeout);
  char buf[1 << 16];
  bool open_pipe = true;
  while (open_pipe) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      break;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd pfd{fds[0], POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left + 1, 1000)));
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    const ssize_t got = read(fds[0], buf, sizeof buf);
    if (got > 0) {
      result.output.append(buf, static_cast<std::size_t>(got));
    } else if (got == 0 || errno != EINTR) {
      open_pipe = false;
    }
  }
  close(fds[0]);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.status = status;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127 && result.output.find("exec failed") != std::string::npos) {
    result.launched = false;
  }
  return result;
}

std::filesystem::path scratch_file(const std::filesystem::path& workdir, const std::string& ext) {
  static std::atomic<std::uint64_t> counter{0};
  std::filesystem::path dir = workdir.empty() ? std::filesystem::temp_directory_path() : workdir;
  std::filesystem::create_directories(dir);
  return dir / ("chiropath-" + std::to_string(getpid()) + "-" + std::to_string(counter++) + ext);
}

std::string tail(const std::string& text, std::size_t max = 2000) {
  return text.size() <= max ? text : text.substr(text.size() - max);
}

std::size_t lit_code(int lit) {
  return 2 * static_cast<std::size_t>(lit > 0 ? lit : -lit) + (lit < 0 ? 1 : 0);
}

}  // namespace

std::filesystem::path resolve_backend(const std::filesystem::path& requested) {
  std::filesystem::path path = requested;
  if (path.empty()) {
    if (const char* env = std::getenv("CHIROPATH_SOLVER"); env != nullptr) path = env;
  }
  if (path.empty()) throw DomainError("no SAT backend given (use --solver or CHIROPATH_SOLVER)");
  if (path.string().find('/') == std::string::npos) {
    const char* env_path = std::getenv("PATH");
    std::istringstream dirs(env_path != nullptr ? env_path : "");
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
      const auto candidate = std::filesystem::path(dir) / path;
      if (access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    throw DomainError("SAT backend '" + path.string() + "' not found on PATH");
  }
  if (access(path.c_str(), X_OK) != 0) throw DomainError("SAT backend not executable: " + path.string());
  return std::filesystem::absolute(path);
}

std::string backend_identity(const std::filesystem::path& backend) {
  std::string id = backend.filename().string();
  try {
    const ProcessResult r = run_process({backend.string(), "--version"}, 10.0, 0);
    std::istringstream lines(r.output);
    std::string first;
    std::getline(lines, first);
    if (!first.empty()) id += " " + first;
  } catch (const std::exception&) {
  }
  return id;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Sat: return "SAT";
    case Verdict::Unsat: return "UNSAT";
    case Verdict::Timeout: return "TIMEOUT";
    case Verdict::Error: return "ERROR";
  }
  return "?";
}

Verdict verdict_from_name(const std::string& name) {
  for (Verdict v : {Verdict::Sat, Verdict::Unsat, Verdict::Timeout, Verdict::Error}) {
    if (name == verdict_name(v)) return v;
  }
  throw IntegrityError("unknown verdict '" + name + "'");
}

SolveResult parse_backend_output(const std::string& output, int num_vars) {
  SolveResult result;
  std::optional<Verdict> claimed;
  std::vector<int> values;
  std::istringstream in(output);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("s ", 0) == 0) {
      const std::string word = line.substr(2);
      if (word.rfind("SATISFIABLE", 0) == 0) claimed = Verdict::Sat;
      else if (word.rfind("UNSATISFIABLE", 0) == 0) claimed = Verdict::Unsat;
      else claimed = Verdict::Error;
    } else if (line.rfind("v ", 0) == 0 || line == "v") {
      std::istringstream vs(line.substr(1));
      int lit = 0;
      while (vs >> lit) {
        if (lit != 0) values.push_back(lit);
      }
    }
  }
  if (!claimed || *claimed == Verdict::Error) {
    result.verdict = Verdict::Error;
    result.diagnostics = "no verdict line in backend output:\n" + tail(output);
    return result;
  }
  result.verdict = *claimed;
  if (*claimed == Verdict::Sat) {
    result.model.assign(static_cast<std::size_t>(num_vars) + 1, false);
    std::vector<bool> seen(static_cast<std::size_t>(num_vars) + 1, false);
    for (int lit : values) {
      const int var = std::abs(lit);
      if (var > num_vars) continue;
      seen[static_cast<std::size_t>(var)] = true;
      result.model[static_cast<std::size_t>(var)] = lit > 0;
    }
    for (int v = 1; v <= num_vars; ++v) {
      if (!seen[static_cast<std::size_t>(v)]) {
        result.verdict = Verdict::Error;
        result.model.clear();
        result.diagnostics = "model does not assign variable " + std::to_string(v);
        break;
      }
    }
  }
  return result;
}

Verification check_model(const CnfFormula& cnf, const Model& model, std::span<const int> assumptions) {
  if (cnf.num_vars() == 0 && model.empty()) {
    if (cnf.num_clauses() > 0 || !assumptions.empty()) return {false, "empty model for non-empty formula"};
    return {};
  }
  if (model.size() != static_cast<std::size_t>(cnf.num_vars()) + 1) {
    return {false, "model size " + std::to_string(model.size()) + " does not match " +
                       std::to_string(cnf.num_vars()) + " variables"};
  }
  const auto holds = [&](int lit) {
    const bool v = model[static_cast<std::size_t>(std::abs(lit))];
    return lit > 0 ? v : !v;
  };
  for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
    const auto c = cnf.clause(i);
    if (std::none_of(c.begin(), c.end(), holds)) {
      return {false, "clause " + std::to_string(i) + " (" + group_name(cnf.group(i)) + ") falsified"};
    }
  }
  for (int lit : assumptions) {
    if (std::abs(lit) > cnf.num_vars() || !holds(lit)) {
      return {false, "assumption " + std::to_string(lit) + " falsified"};
    }
  }
  const VarMap& vm = cnf.varmap();
  if (vm.dimension() == 0) return {};

  const Chirotope chi = decode_chirotope(cnf, model);
  if (!check_gp(chi)) return {false, "decoded chirotope violates a Grassmann-Plucker condition"};
  const auto facets = facets_of(chi);
  if (facets != decode_facets(cnf, model)) return {false, "facet variables disagree with the chirotope"};
  const PathType& path = cnf.path();
  for (LabelSet f : path.facets()) {
    if (!std::binary_search(facets.begin(), facets.end(), f, lex_less)) {
      return {false, "path facet {" + format_labels(f, ',') + "} is not a facet"};
    }
  }
  const auto dist = facet_distance(facets, path.facet(0), path.facet(path.length()));
  if (dist && *dist < cnf.distance_bound()) {
    return {false, "end facets at distance " + std::to_string(*dist) + " < " +
                       std::to_string(cnf.distance_bound())};
  }
  return {};
}

bool verify_model(const CnfFormula& cnf, const Model& model, std::span<const int> assumptions) {
  return check_model(cnf, model, assumptions).ok;
}

SolveResult solve(const CnfFormula& cnf, const SolverConfig& config, std::span<const int> assumptions) {
  if (config.timeout <= 0) throw DomainError("solver timeout must be positive");
  SolveResult result;
  result.instance_digest = instance_digest(cnf);
  result.backend = config.backend.filename().string();
  const auto file = scratch_file(config.workdir, ".cnf");
  {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    write_dimacs(cnf, out, assumptions);
  }
  std::vector<std::string> argv{config.backend.string()};
  argv.insert(argv.end(), config.flags.begin(), config.flags.end());
  if (config.seed) argv.push_back("--seed=" + std::to_string(*config.seed));
  argv.push_back(file.string());

  ProcessResult run;
  try {
    run = run_process(argv, config.timeout, config.memory_limit_mb);
  } catch (...) {
    std::filesystem::remove(file);
    throw;
  }
  std::filesystem::remove(file);
  result.wall_seconds = run.wall_seconds;
  if (!run.launched) {
    result.verdict = Verdict::Error;
    result.diagnostics = "could not execute " + config.backend.string();
    return result;
  }
  if (run.timed_out) {
    result.verdict = Verdict::Timeout;
    return result;
  }
  SolveResult parsed = parse_backend_output(run.output, cnf.num_vars());
  result.verdict = parsed.verdict;
  result.diagnostics = parsed.diagnostics;
  if (parsed.verdict == Verdict::Sat) {
    const Verification v = check_model(cnf, parsed.model, assumptions);
    if (!v.ok) {
      result.verdict = Verdict::Error;
      result.diagnostics = "backend model rejected: " + v.reason;
      return result;
    }
    result.model = std::move(parsed.model);
  } else if (parsed.verdict == Verdict::Error && WIFSIGNALED(run.status)) {
    result.diagnostics += "\nbackend killed by signal " + std::to_string(WTERMSIG(run.status));
  }
  return result;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const CnfFormula& cnf)
    : cnf_(cnf),
      values_(static_cast<std::size_t>(cnf.num_vars()) + 1, 0),
      watches_(2 * (static_cast<std::size_t>(cnf.num_vars()) + 1)),
      watched_(cnf.num_clauses(), {0, 1}) {
  for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
    const auto c = cnf.clause(i);
    if (c.size() == 1) {
      units_.push_back(c[0]);
      continue;
    }
    watches_[lit_code(c[0])].push_back(i);
    watches_[lit_code(c[1])].push_back(i);
  }
}

bool Propagator::enqueue(int lit) {
  const int var = std::abs(lit);
  const int want = lit > 0 ? 1 : -1;
  const int have = values_[static_cast<std::size_t>(var)];
  if (have != 0) return have == want;
  values_[static_cast<std::size_t>(var)] = static_cast<std::int8_t>(want);
  trail_.push_back(lit);
  return true;
}

bool Propagator::run() {
  const auto lit_value = [&](int lit) {
    const int v = values_[static_cast<std::size_t>(std::abs(lit))];
    return lit > 0 ? v : -v;
  };
  while (head_ < trail_.size()) {
    const int falsified = -trail_[head_++];
    auto& list = watches_[lit_code(falsified)];
    std::size_t keep = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::size_t ci = list[i];
      const auto c = cnf_.clause(ci);
      auto& w = watched_[ci];
      if (c[static_cast<std::size_t>(w[0])] == falsified) std::swap(w[0], w[1]);
      const int other = c[static_cast<std::size_t>(w[0])];
      if (lit_value(other) > 0) {
        list[keep++] = ci;
        continue;
      }
      bool moved = false;
      for (std::size_t p = 0; p < c.size(); ++p) {
        const int pi = static_cast<int>(p);
        if (pi == w[0] || pi == w[1] || lit_value(c[p]) < 0) continue;
        w[1] = pi;
        watches_[lit_code(c[p])].push_back(ci);
        moved = true;
        break;
      }
      if (moved) continue;
      list[keep++] = ci;
      if (!enqueue(other)) {
        for (++i; i < list.size(); ++i) list[keep++] = list[i];
        list.resize(keep);
        head_ = trail_.size();
        return false;
      }
    }
    list.resize(keep);
  }
  return true;
}

bool Propagator::assign(int lit) {
  if (root_conflict_) return false;
  if (!enqueue(lit)) return false;
  return run();
}

bool Propagator::propagate_units() {
  for (int lit : units_) {
    if (!enqueue(lit)) {
      root_conflict_ = true;
      return false;
    }
  }
  if (!run()) {
    root_conflict_ = true;
    return false;
  }
  return true;
}

void Propagator::backtrack(std::size_t trail_size) {
  while (trail_.size() > trail_size) {
    values_[static_cast<std::size_t>(std::abs(trail_.back()))] = 0;
    trail_.pop_back();
  }
  head_ = std::min(head_, trail_.size());
}

const char* order_name(SplitOrder order) {
  return order == SplitOrder::Occurrence ? "occurrence" : "index";
}

SplitOrder order_from_name(const std::string& name) {
  if (name == "occurrence") return SplitOrder::Occurrence;
  if (name == "index") return SplitOrder::Index;
  throw DomainError("unknown split order '" + name + "' (expected occurrence or index)");
}

std::vector<int> split_order(const CnfFormula& cnf, SplitOrder order) {
  const int signs = cnf.varmap().sign_count();
  std::vector<int> vars(static_cast<std::size_t>(signs));
  for (int v = 1; v <= signs; ++v) vars[static_cast<std::size_t>(v - 1)] = v;
  if (order == SplitOrder::Occurrence) {
    std::vector<std::size_t> count(static_cast<std::size_t>(signs) + 1, 0);
    for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
      for (int lit : cnf.clause(i)) {
        const int var = std::abs(lit);
        if (var <= signs) ++count[static_cast<std::size_t>(var)];
      }
    }
    std::stable_sort(vars.begin(), vars.end(), [&](int a, int b) {
      return count[static_cast<std::size_t>(a)] > count[static_cast<std::size_t>(b)];
    });
  }
  return vars;
}

namespace {

class Splitter {
 public:
  Splitter(const CnfFormula& cnf, SplitOrder order) : cnf_(cnf), prop_(cnf), order_(split_order(cnf, order)) {}

  SplitOutcome run(const std::vector<int>& prefix, int base_depth, int extra) {
    SplitOutcome out;
    if (!prop_.propagate_units()) return out;
    for (int lit : prefix) {
      if (!prop_.assign(lit)) return out;
    }
    cube_ = prefix;
    base_depth_ = base_depth;
    target_ = extra;
    descend(0, out);
    if (out.capped) {
      log_warn("split depth capped: fewer than " + std::to_string(extra) +
               " unfixed sign variables remain");
    }
    return out;
  }

 private:
  void descend(int made, SplitOutcome& out) {
    if (made == target_) {
      emit(made, out);
      return;
    }
    int var = 0;
    for (int v : order_) {
      if (prop_.value(v) == 0) {
        var = v;
        break;
      }
    }
    if (var == 0) {
      out.capped = true;
      emit(made, out);
      return;
    }
    for (int lit : {var, -var}) {
      const std::size_t mark = prop_.trail_size();
      if (prop_.assign(lit)) {
        cube_.push_back(lit);
        descend(made + 1, out);
        cube_.pop_back();
      }
      prop_.backtrack(mark);
    }
  }

  void emit(int made, SplitOutcome& out) {
    SplitNode node;
    node.cube = cube_;
    node.depth = base_depth_ + made;
    const int signs = cnf_.varmap().sign_count();
    for (int lit : prop_.trail()) {
      if (std::abs(lit) <= signs) node.implied.push_back(lit);
    }
    std::sort(node.implied.begin(), node.implied.end(),
              [](int a, int b) { return std::abs(a) < std::abs(b); });
    out.leaves.push_back(std::move(node));
  }

  const CnfFormula& cnf_;
  Propagator prop_;
  std::vector<int> order_;
  std::vector<int> cube_;
  int base_depth_ = 0;
  int target_ = 0;
};

void check_cube(const CnfFormula& cnf, std::span<const int> cube) {
  for (int lit : cube) {
    if (lit == 0 || std::abs(lit) > cnf.varmap().sign_count()) {
      throw DomainError("cube literal " + std::to_string(lit) + " is not a sign variable");
    }
  }
}

}  // namespace

SplitOutcome split(const CnfFormula& cnf, int depth, SplitOrder order) {
  if (depth < 1) throw DomainError("split depth must be at least 1");
  return Splitter(cnf, order).run({}, 0, depth);
}

SplitOutcome resplit(const SplitNode& node, const CnfFormula& cnf, int additional_depth, SplitOrder order) {
  if (node.resolved()) throw StateError("cannot resplit a resolved node [" + format_cube(node.cube) + "]");
  if (additional_depth < 1) throw DomainError("additional split depth must be at least 1");
  check_cube(cnf, node.cube);
  return Splitter(cnf, order).run(node.cube, static_cast<int>(node.cube.size()), additional_depth);
}

std::string format_cube(std::span<const int> cube) {
  std::string out;
  for (int lit : cube) {
    if (!out.empty()) out += ' ';
    out += std::to_string(lit);
  }
  return out;
}

std::vector<int> parse_cube(const std::string& text) {
  std::istringstream in(text);
  std::vector<int> out;
  int lit = 0;
  while (in >> lit) {
    if (lit == 0) throw DomainError("cube literal 0");
    out.push_back(lit);
  }
  if (!in.eof()) throw DomainError("malformed cube '" + text + "'");
  return out;
}

}  // namespace chiropath
