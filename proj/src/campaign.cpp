#include "chiropath/campaign.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "chiropath/digest.hpp"
#include "chiropath/error.hpp"
#include "chiropath/log.hpp"

namespace chiropath {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

// Writes only when the content differs; returns true if the file was written.
bool write_if_changed(const fs::path& file, const std::string& content) {
  if (fs::exists(file) && read_text(file) == content) return false;
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return true;
}

std::vector<int> cube_from_json(const json& j) {
  std::vector<int> cube;
  for (const auto& lit : j) cube.push_back(lit.get<int>());
  return cube;
}

class LedgerWriter {
 public:
  explicit LedgerWriter(const fs::path& file) {
    fd_ = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot open ledger " + file.string() + ": " + std::strerror(errno));
  }
  ~LedgerWriter() {
    if (fd_ >= 0) ::close(fd_);
  }
  LedgerWriter(const LedgerWriter&) = delete;
  LedgerWriter& operator=(const LedgerWriter&) = delete;

  void append(const json& record) {
    const std::string line = record.dump() + "\n";
    std::lock_guard lock(mutex_);
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t w = ::write(fd_, line.data() + done, line.size() - done);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error(std::string("ledger write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(w);
    }
    if (::fsync(fd_) != 0) throw std::runtime_error(std::string("ledger fsync failed: ") + std::strerror(errno));
  }

 private:
  int fd_ = -1;
  std::mutex mutex_;
};

struct SplitRecord {
  std::vector<std::vector<int>> children;
  bool after_timeout = false;
};

struct LedgerState {
  json header;
  std::map<std::string, std::map<std::vector<int>, json>> results;
  std::map<std::string, std::map<std::vector<int>, SplitRecord>> splits;
  std::map<std::size_t, json> slots;
  std::size_t result_count = 0;
  std::size_t split_count = 0;
  std::size_t valid_bytes = 0;  // length of the well-formed prefix
};

bool resolved_verdict(const json& result) {
  const std::string v = result.at("verdict").get<std::string>();
  return v == "SAT" || v == "UNSAT";
}

LedgerState load_ledger(const fs::path& file) {
  const std::string text = read_text(file);
  LedgerState state;
  std::size_t pos = 0;
  std::size_t index = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const bool complete = end != std::string::npos;
    const std::string line = text.substr(pos, complete ? end - pos : std::string::npos);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error&) {
      if (!complete) break;  // torn final write
      throw IntegrityError("ledger record " + std::to_string(index) + " is malformed");
    }
    try {
      const std::string type = record.at("type").get<std::string>();
      if (index == 0) {
        if (type != "header") throw IntegrityError("ledger does not start with a header record");
        state.header = record;
      } else if (type == "result") {
        const std::string digest = record.at("digest").get<std::string>();
        const auto cube = cube_from_json(record.at("cube"));
        verdict_from_name(record.at("verdict").get<std::string>());
        auto& slot = state.results[digest][cube];
        if (slot.is_null() || !resolved_verdict(slot)) slot = record;
        ++state.result_count;
      } else if (type == "split") {
        SplitRecord split;
        for (const auto& child : record.at("children")) split.children.push_back(cube_from_json(child));
        split.after_timeout = record.at("reason").get<std::string>() == "timeout";
        state.splits[record.at("digest").get<std::string>()][cube_from_json(record.at("cube"))] = split;
        ++state.split_count;
      } else if (type == "slot") {
        state.slots[record.at("slot").get<std::size_t>()] = record;
      } else {
        throw IntegrityError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw IntegrityError("ledger record " + std::to_string(index) + " is malformed: " + e.what());
    } catch (const IntegrityError& e) {
      throw IntegrityError("ledger record " + std::to_string(index) + ": " + e.what());
    }
    ++index;
    pos = complete ? end + 1 : text.size();
    state.valid_bytes = pos;
  }
  if (state.header.is_null()) throw IntegrityError("ledger has no header record");
  return state;
}

CampaignStatus status_from_state(const LedgerState& state) {
  CampaignStatus status;
  const json& h = state.header;
  status.d = h.at("d").get<int>();
  status.n = h.at("n").get<int>();
  status.k = h.at("k").get<int>();
  status.manifest_digest = h.at("manifest_digest").get<std::string>();
  std::map<ClassKey, ClassProgress> classes;
  for (const auto& c : h.at("classes")) {
    ClassProgress p;
    p.m = c.at("m").get<int>();
    p.l = c.at("l").get<int>();
    p.total = c.at("count").get<std::size_t>();
    classes[{p.m, p.l}] = p;
  }
  for (const auto& [slot, rec] : state.slots) {
    const ClassKey key{rec.at("m").get<int>(), rec.at("l").get<int>()};
    auto it = classes.find(key);
    if (it == classes.end()) throw IntegrityError("slot " + std::to_string(slot) + " has an unknown class");
    ClassProgress& p = it->second;
    ++p.resolved;
    if (rec.at("verdict").get<std::string>() == "SAT") ++p.sat;
    else ++p.unsat;
    if (rec.at("difficult").get<bool>()) ++p.difficult;
  }
  for (auto& [key, p] : classes) status.classes.push_back(p);
  status.results = state.result_count;
  status.splits = state.split_count;
  return status;
}

std::map<ClassKey, std::size_t> class_counts(const std::vector<PathRecord>& records) {
  std::map<ClassKey, std::size_t> counts;
  for (const auto& r : records) ++counts[{r.cls.m, r.cls.l}];
  return counts;
}

struct Instance {
  PathType path;
  int m = 0;
  int l = 0;
  std::vector<std::size_t> slots;
};

enum class Outcome { Unsat, Sat, Open };

class CampaignRunner {
 public:
  CampaignRunner(const CampaignManifest& manifest, LedgerState state, LedgerWriter& writer)
      : manifest_(manifest), state_(std::move(state)), writer_(writer),
        start_(std::chrono::steady_clock::now()) {}

  void run(std::vector<Instance> instances) {
    instances_ = std::move(instances);
    const int workers = std::max(1, manifest_.jobs);
    std::vector<std::thread> pool;
    for (int i = 1; i < workers; ++i) pool.emplace_back([this] { work(); });
    work();
    for (auto& t : pool) t.join();
    if (failure_) std::rethrow_exception(failure_);
  }

  std::size_t solves() const { return solves_; }
  const std::optional<fs::path>& model_file() const { return model_file_; }
  const std::optional<std::string>& refuting_path() const { return refuting_path_; }

 private:
  struct Context {
    const Instance* instance = nullptr;
    CnfFormula cnf;
    std::string digest;
    bool difficult = false;
    std::size_t leaves = 0;
  };

  void work() {
    while (!stop_) {
      const std::size_t i = next_++;
      if (i >= instances_.size()) return;
      try {
        process(instances_[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex_);
        if (!failure_) failure_ = std::current_exception();
        stop_ = true;
      }
    }
  }

  bool out_of_budget() {
    if (manifest_.solve_limit && solves_ >= *manifest_.solve_limit) return true;
    if (manifest_.budget_seconds) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (elapsed >= *manifest_.budget_seconds) return true;
    }
    return false;
  }

  void process(const Instance& inst) {
    bool done = true;
    for (std::size_t s : inst.slots) done = done && state_.slots.count(s) > 0;
    if (done) return;

    Context ctx;
    ctx.instance = &inst;
    ctx.cnf = encode_instance(inst.path, manifest_.n);
    ctx.digest = instance_digest(ctx.cnf);
    const Outcome outcome = visit(ctx, {});
    if (outcome == Outcome::Open) return;
    for (std::size_t s : inst.slots) {
      if (state_.slots.count(s) > 0) continue;
      json rec{{"type", "slot"},
               {"slot", s},
               {"m", inst.m},
               {"l", inst.l},
               {"digest", ctx.digest},
               {"verdict", outcome == Outcome::Sat ? "SAT" : "UNSAT"},
               {"difficult", ctx.difficult},
               {"leaves", ctx.leaves},
               {"reused", s != inst.slots.front()},
               {"time", utc_now()}};
      writer_.append(rec);
    }
  }

  const json* known_result(const std::string& digest, const std::vector<int>& cube) const {
    const auto it = state_.results.find(digest);
    if (it == state_.results.end()) return nullptr;
    const auto jt = it->second.find(cube);
    if (jt == it->second.end() || !resolved_verdict(jt->second)) return nullptr;
    return &jt->second;
  }

  const SplitRecord* known_split(const std::string& digest, const std::vector<int>& cube) const {
    const auto it = state_.splits.find(digest);
    if (it == state_.splits.end()) return nullptr;
    const auto jt = it->second.find(cube);
    return jt == it->second.end() ? nullptr : &jt->second;
  }

  Outcome visit_children(Context& ctx, const std::vector<std::vector<int>>& children) {
    Outcome agg = Outcome::Unsat;
    for (const auto& child : children) {
      const Outcome o = visit(ctx, child);
      if (o == Outcome::Sat) return Outcome::Sat;
      if (o == Outcome::Open) agg = Outcome::Open;
    }
    return agg;
  }

  void record_split(Context& ctx, const std::vector<int>& cube, const std::vector<SplitNode>& leaves,
                    const char* reason) {
    json children = json::array();
    for (const auto& leaf : leaves) children.push_back(leaf.cube);
    writer_.append(json{{"type", "split"},
                        {"digest", ctx.digest},
                        {"cube", cube},
                        {"reason", reason},
                        {"children", children},
                        {"time", utc_now()}});
  }

  Outcome visit(Context& ctx, const std::vector<int>& cube) {
    if (const SplitRecord* s = known_split(ctx.digest, cube)) {
      ctx.difficult = ctx.difficult || s->after_timeout;
      return visit_children(ctx, s->children);
    }
    if (const json* r = known_result(ctx.digest, cube)) {
      ++ctx.leaves;
      return r->at("verdict").get<std::string>() == "SAT" ? Outcome::Sat : Outcome::Unsat;
    }
    if (cube.empty() && manifest_.split.initial_depth > 0) {
      const SplitOutcome initial = split(ctx.cnf, manifest_.split.initial_depth, manifest_.split.order);
      record_split(ctx, cube, initial.leaves, "initial");
      std::vector<std::vector<int>> children;
      for (const auto& leaf : initial.leaves) children.push_back(leaf.cube);
      return visit_children(ctx, children);
    }
    if (stop_) return Outcome::Open;
    if (out_of_budget()) {
      stop_ = true;
      return Outcome::Open;
    }
    ++solves_;
    const SolveResult res = chiropath::solve(ctx.cnf, manifest_.solver, cube);
    json rec{{"type", "result"},
             {"slot", ctx.instance->slots.front()},
             {"m", ctx.instance->m},
             {"l", ctx.instance->l},
             {"digest", ctx.digest},
             {"cube", cube},
             {"depth", cube.size()},
             {"verdict", verdict_name(res.verdict)},
             {"wall", res.wall_seconds},
             {"backend", backend_id_},
             {"time", utc_now()}};
    if (res.verdict == Verdict::Sat) rec["model_file"] = store_model(ctx, res).string();
    if (res.verdict == Verdict::Error) rec["diagnostics"] = res.diagnostics;
    write_job_artifact(ctx.digest, cube, rec);
    writer_.append(rec);

    switch (res.verdict) {
      case Verdict::Unsat:
        ++ctx.leaves;
        return Outcome::Unsat;
      case Verdict::Sat:
        ++ctx.leaves;
        stop_ = true;
        return Outcome::Sat;
      case Verdict::Error:
        log_warn("backend error on " + ctx.instance->path.to_string() + " [" + format_cube(cube) +
                 "]: " + res.diagnostics);
        return Outcome::Open;
      case Verdict::Timeout:
        break;
    }
    const int depth = static_cast<int>(cube.size());
    if (depth + manifest_.split.increment > manifest_.split.max_depth) {
      log_warn("unresolved at maximum split depth: " + ctx.instance->path.to_string() + " [" +
               format_cube(cube) + "]");
      return Outcome::Open;
    }
    SplitNode node;
    node.cube = cube;
    node.depth = depth;
    node.state = NodeState::Timeout;
    const SplitOutcome children = resplit(node, ctx.cnf, manifest_.split.increment, manifest_.split.order);
    record_split(ctx, cube, children.leaves, "timeout");
    ctx.difficult = true;
    std::vector<std::vector<int>> cubes;
    for (const auto& leaf : children.leaves) cubes.push_back(leaf.cube);
    return visit_children(ctx, cubes);
  }

  fs::path store_model(const Context& ctx, const SolveResult& res) {
    const fs::path dir = manifest_.workdir / "models";
    fs::create_directories(dir);
    const fs::path file = dir / (ctx.digest + ".model");
    std::ostringstream out;
    out << "c path " << ctx.instance->path.to_string() << "\n";
    out << "c n " << manifest_.n << "\n";
    out << decode_chirotope(ctx.cnf, res.model).to_text();
    out << "v";
    for (std::size_t v = 1; v < res.model.size(); ++v) {
      out << ' ' << (res.model[v] ? "" : "-") << v;
    }
    out << " 0\n";
    write_if_changed(file, out.str());
    std::lock_guard lock(failure_mutex_);
    if (!model_file_) {
      model_file_ = file;
      refuting_path_ = ctx.instance->path.to_string();
    }
    return file;
  }

  void write_job_artifact(const std::string& digest, const std::vector<int>& cube, const json& rec) {
    const fs::path dir = manifest_.workdir / "jobs" / digest;
    fs::create_directories(dir);
    const std::string name = cube.empty() ? "root" : sha256_hex(format_cube(cube)).substr(0, 16);
    std::ofstream(dir / (name + ".json")) << rec.dump(2) << "\n";
  }

 public:
  std::string backend_id_;

 private:
  const CampaignManifest& manifest_;
  LedgerState state_;
  LedgerWriter& writer_;
  std::vector<Instance> instances_;
  std::atomic<std::size_t> next_{0};
  std::atomic<std::size_t> solves_{0};
  std::atomic<bool> stop_{false};
  std::chrono::steady_clock::time_point start_;
  std::mutex failure_mutex_;
  std::exception_ptr failure_;
  std::optional<fs::path> model_file_;
  std::optional<std::string> refuting_path_;
};

}  // namespace

std::string CampaignManifest::digest() const {
  const json identity{{"d", d},
                      {"n", n},
                      {"k", k},
                      {"path_digest", path_digest},
                      {"enumerated", enumerated},
                      {"backend", solver.backend.filename().string()},
                      {"flags", solver.flags},
                      {"seed", solver.seed ? json(*solver.seed) : json(nullptr)},
                      {"split",
                       {{"initial_depth", split.initial_depth},
                        {"increment", split.increment},
                        {"max_depth", split.max_depth},
                        {"order", order_name(split.order)}}}};
  return sha256_hex(identity.dump());
}

std::string manifest_to_json(const CampaignManifest& m) {
  json j{{"d", m.d},
         {"n", m.n},
         {"k", m.k},
         {"path_file", m.path_file.string()},
         {"path_digest", m.path_digest},
         {"enumerated", m.enumerated},
         {"solver",
          {{"backend", m.solver.backend.string()},
           {"flags", m.solver.flags},
           {"timeout", m.solver.timeout},
           {"memory_limit_mb", m.solver.memory_limit_mb},
           {"seed", m.solver.seed ? json(*m.solver.seed) : json(nullptr)}}},
         {"split",
          {{"initial_depth", m.split.initial_depth},
           {"increment", m.split.increment},
           {"max_depth", m.split.max_depth},
           {"order", order_name(m.split.order)}}},
         {"jobs", m.jobs},
         {"workdir", m.workdir.string()}};
  if (m.budget_seconds) j["budget_seconds"] = *m.budget_seconds;
  if (m.solve_limit) j["solve_limit"] = *m.solve_limit;
  return j.dump(2) + "\n";
}

CampaignManifest manifest_from_json(const std::string& text, const fs::path& base_dir) {
  CampaignManifest m;
  try {
    const json j = json::parse(text);
    const auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    m.d = j.at("d").get<int>();
    m.n = j.at("n").get<int>();
    m.k = j.at("k").get<int>();
    m.path_file = resolve(j.at("path_file").get<std::string>());
    m.path_digest = j.at("path_digest").get<std::string>();
    m.enumerated = j.value("enumerated", true);
    const json& s = j.at("solver");
    m.solver.backend = s.at("backend").get<std::string>();
    m.solver.flags = s.value("flags", std::vector<std::string>{});
    m.solver.timeout = s.value("timeout", 60.0);
    m.solver.memory_limit_mb = s.value("memory_limit_mb", std::uint64_t{0});
    if (s.contains("seed") && !s.at("seed").is_null()) m.solver.seed = s.at("seed").get<std::uint64_t>();
    if (j.contains("split")) {
      const json& sp = j.at("split");
      m.split.initial_depth = sp.value("initial_depth", 0);
      m.split.increment = sp.value("increment", 2);
      m.split.max_depth = sp.value("max_depth", 12);
      m.split.order = order_from_name(sp.value("order", std::string("occurrence")));
    }
    m.jobs = j.value("jobs", 1);
    m.workdir = resolve(j.value("workdir", std::string(".")));
    if (j.contains("budget_seconds")) m.budget_seconds = j.at("budget_seconds").get<double>();
    if (j.contains("solve_limit")) m.solve_limit = j.at("solve_limit").get<std::size_t>();
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed manifest: ") + e.what());
  }
  if (m.solver.timeout <= 0) throw DomainError("manifest solver timeout must be positive");
  if (m.split.initial_depth < 0 || m.split.increment < 1 || m.split.max_depth < m.split.initial_depth) {
    throw DomainError("manifest split policy is inconsistent");
  }
  const std::string actual = sha256_file(m.path_file);
  if (actual != m.path_digest) {
    throw IntegrityError("path file " + m.path_file.string() + " has digest " + actual +
                         ", manifest expects " + m.path_digest);
  }
  return m;
}

CampaignManifest read_manifest(const fs::path& file) {
  return manifest_from_json(read_text(file), file.parent_path());
}

void write_manifest(const CampaignManifest& manifest, const fs::path& file) {
  write_if_changed(file, manifest_to_json(manifest));
}

CampaignManifest prepare_campaign(int d, int n, int k, const fs::path& workdir, const SolverConfig& solver,
                                  const SplitPolicy& split, int jobs) {
  const auto buckets = enumerate_all(d, n, k);
  std::vector<PathType> paths;
  for (const auto& [key, bucket] : buckets) paths.insert(paths.end(), bucket.paths.begin(), bucket.paths.end());
  std::ostringstream out;
  write_path_file(out, paths, n);
  const fs::path file = workdir / ("paths-" + std::to_string(d) + "-" + std::to_string(n) + "-" +
                                   std::to_string(k) + ".jsonl");
  write_if_changed(file, out.str());
  CampaignManifest m;
  m.d = d;
  m.n = n;
  m.k = k;
  m.path_file = file;
  m.path_digest = sha256_file(file);
  m.enumerated = true;
  m.solver = solver;
  m.split = split;
  m.jobs = jobs;
  m.workdir = workdir;
  return m;
}

const char* campaign_verdict_name(CampaignVerdict v) {
  switch (v) {
    case CampaignVerdict::AllUnsat: return "ALL-UNSAT";
    case CampaignVerdict::Refuted: return "REFUTED";
    case CampaignVerdict::Incomplete: return "INCOMPLETE";
  }
  return "?";
}

std::size_t CampaignStatus::total() const {
  std::size_t t = 0;
  for (const auto& c : classes) t += c.total;
  return t;
}

std::size_t CampaignStatus::resolved() const {
  std::size_t t = 0;
  for (const auto& c : classes) t += c.resolved;
  return t;
}

std::size_t CampaignStatus::difficult() const {
  std::size_t t = 0;
  for (const auto& c : classes) t += c.difficult;
  return t;
}

std::size_t CampaignStatus::sat() const {
  std::size_t t = 0;
  for (const auto& c : classes) t += c.sat;
  return t;
}

CampaignVerdict CampaignStatus::verdict() const {
  if (sat() > 0) return CampaignVerdict::Refuted;
  if (resolved() == total()) return CampaignVerdict::AllUnsat;
  return CampaignVerdict::Incomplete;
}

CampaignStatus campaign_status(const fs::path& ledger) { return status_from_state(load_ledger(ledger)); }

CampaignReport run_campaign(const CampaignManifest& manifest, const fs::path& ledger) {
  if (sha256_file(manifest.path_file) != manifest.path_digest) {
    throw IntegrityError("path file " + manifest.path_file.string() + " does not match the manifest digest");
  }
  std::vector<PathRecord> records;
  {
    std::ifstream in(manifest.path_file);
    records = read_path_file(in);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PathClass& c = records[i].cls;
    if (c.d != manifest.d || c.n != manifest.n || c.k != manifest.k) {
      throw IntegrityError("path " + std::to_string(i) + " is not a (" + std::to_string(manifest.d) + "," +
                           std::to_string(manifest.n) + "," + std::to_string(manifest.k) + ") path");
    }
  }
  const auto counts = class_counts(records);
  if (manifest.enumerated) {
    const auto reference = reference_counts(manifest.d, manifest.n, manifest.k);
    if (!reference.empty() && reference != counts) {
      std::string detail;
      for (const auto& [key, count] : reference) {
        const auto it = counts.find(key);
        detail += " (" + std::to_string(key.first) + "," + std::to_string(key.second) + "): " +
                  std::to_string(it == counts.end() ? 0 : it->second) + " vs " + std::to_string(count);
      }
      throw IntegrityError("path counts differ from the reference table:" + detail);
    }
  }

  const std::string manifest_digest = manifest.digest();
  LedgerState state;
  if (fs::exists(ledger) && fs::file_size(ledger) > 0) {
    state = load_ledger(ledger);
    if (state.header.at("manifest_digest").get<std::string>() != manifest_digest) {
      throw IntegrityError("ledger " + ledger.string() + " belongs to a different manifest");
    }
    if (state.header.at("path_digest").get<std::string>() != manifest.path_digest) {
      throw IntegrityError("ledger " + ledger.string() + " was written for a different path file");
    }
    if (state.valid_bytes < fs::file_size(ledger)) {
      log_warn("dropping torn final ledger record");
      fs::resize_file(ledger, state.valid_bytes);
    }
  } else {
    json classes = json::array();
    for (const auto& [key, count] : counts) classes.push_back({{"m", key.first}, {"l", key.second}, {"count", count}});
    state.header = json{{"type", "header"},
                        {"version", 1},
                        {"manifest_digest", manifest_digest},
                        {"path_digest", manifest.path_digest},
                        {"d", manifest.d},
                        {"n", manifest.n},
                        {"k", manifest.k},
                        {"classes", classes},
                        {"time", utc_now()}};
    if (ledger.has_parent_path()) fs::create_directories(ledger.parent_path());
    LedgerWriter(ledger).append(state.header);
  }

  CampaignReport report;
  const auto find_model = [&] {
    const LedgerState final_state = load_ledger(ledger);
    for (const auto& [digest, cubes] : final_state.results) {
      for (const auto& [cube, rec] : cubes) {
        if (rec.at("verdict").get<std::string>() == "SAT" && rec.contains("model_file")) {
          report.model_file = rec.at("model_file").get<std::string>();
        }
      }
    }
  };
  const CampaignStatus before = status_from_state(state);
  if (before.verdict() != CampaignVerdict::Incomplete) {
    report.verdict = before.verdict();
    report.status = before;
    if (report.verdict == CampaignVerdict::Refuted) find_model();
    return report;
  }

  std::map<std::string, std::size_t> by_path;
  std::vector<Instance> instances;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string key = records[i].path.to_string();
    auto [it, fresh] = by_path.emplace(key, instances.size());
    if (fresh) instances.push_back(Instance{records[i].path, records[i].cls.m, records[i].cls.l, {}});
    instances[it->second].slots.push_back(i);
  }
  std::stable_sort(instances.begin(), instances.end(),
                   [](const Instance& a, const Instance& b) { return a.m > b.m; });

  fs::create_directories(manifest.workdir);
  LedgerWriter writer(ledger);
  CampaignRunner runner(manifest, std::move(state), writer);
  runner.backend_id_ = backend_identity(manifest.solver.backend);
  runner.run(std::move(instances));

  report.status = campaign_status(ledger);
  report.verdict = report.status.verdict();
  report.solves = runner.solves();
  report.model_file = runner.model_file();
  report.refuting_path = runner.refuting_path();
  if (report.verdict == CampaignVerdict::Refuted && !report.model_file) find_model();
  return report;
}

}  // namespace chiropath
