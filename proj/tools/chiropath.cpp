#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "chiropath/bounds.hpp"
#include "chiropath/campaign.hpp"
#include "chiropath/combinat.hpp"
#include "chiropath/digest.hpp"
#include "chiropath/encoder.hpp"
#include "chiropath/error.hpp"
#include "chiropath/log.hpp"
#include "chiropath/solver.hpp"

namespace fs = std::filesystem;
using namespace chiropath;

namespace {

enum Exit { kOk = 0, kRefuted = 1, kUsage = 2, kIncomplete = 3, kInternal = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw UsageError("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

// Identical existing output is left alone; different output needs --force.
void write_output(const fs::path& file, const std::string& content, bool force) {
  if (fs::exists(file)) {
    if (read_file(file) == content) {
      log_info("output " + file.string() + " unchanged");
      return;
    }
    if (!force) throw UsageError(file.string() + " exists with different content (use --force)");
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + file.string());
  log_info("wrote " + file.string() + " sha256=" + sha256_hex(content));
}

void log_input(const fs::path& file) {
  if (!fs::is_regular_file(file)) throw UsageError("cannot read " + file.string());
  log_info("input " + file.string() + " sha256=" + sha256_file(file));
}

std::pair<int, int> parse_pair(const std::string& text, char sep, const char* what) {
  const auto pos = text.find(sep);
  try {
    if (pos == std::string::npos) throw std::invalid_argument(text);
    return {std::stoi(text.substr(0, pos)), std::stoi(text.substr(pos + 1))};
  } catch (const std::exception&) {
    throw UsageError(std::string("bad ") + what + " '" + text + "'");
  }
}

struct PathsArgs {
  int d = 0, n = 0, k = 0;
  std::string cls;
  fs::path out;
  bool force = false;
};

int cmd_paths(const PathsArgs& o) {
  log_info("paths d=" + std::to_string(o.d) + " n=" + std::to_string(o.n) + " k=" + std::to_string(o.k));
  const auto buckets = enumerate_all(o.d, o.n, o.k);
  std::optional<ClassKey> only;
  if (!o.cls.empty()) only = parse_pair(o.cls, ',', "class");
  const auto reference = reference_counts(o.d, o.n, o.k);
  std::vector<PathType> selected;
  std::cout << "d\tn\tk\tm\tl\tcount\n";
  for (const auto& [key, bucket] : buckets) {
    if (only && *only != key) continue;
    std::cout << o.d << '\t' << o.n << '\t' << o.k << '\t' << key.first << '\t' << key.second << '\t'
              << bucket.count << '\n';
    selected.insert(selected.end(), bucket.paths.begin(), bucket.paths.end());
  }
  if (!reference.empty() && !only) {
    std::map<ClassKey, std::size_t> got;
    for (const auto& [key, bucket] : buckets) got[key] = bucket.count;
    if (got != reference) log_warn("counts differ from the published table");
  }
  if (!o.out.empty()) {
    std::ostringstream file;
    write_path_file(file, selected, o.n);
    write_output(o.out, file.str(), o.force);
  }
  return kOk;
}

struct EncodeArgs {
  fs::path path_file;
  long long index = 0;
  fs::path out;
  int distance = 0;
  bool force = false;
};

int cmd_encode(const EncodeArgs& o) {
  log_input(o.path_file);
  std::ifstream in(o.path_file);
  if (!in) throw UsageError("cannot read " + o.path_file.string());
  const auto records = read_path_file(in);
  if (o.index < 0 || o.index >= static_cast<long long>(records.size())) {
    throw UsageError("index " + std::to_string(o.index) + " outside [0," + std::to_string(records.size()) + ")");
  }
  const PathRecord& rec = records[static_cast<std::size_t>(o.index)];
  chiropath::EncodeOptions eo;
  if (o.distance > 0) eo.distance_bound = o.distance;
  const CnfFormula cnf = encode_instance(rec.path, rec.cls.n, eo);
  const std::string text = to_dimacs(cnf);
  log_info("encoded " + rec.path.to_string() + ": " + std::to_string(cnf.num_vars()) + " variables, " +
           std::to_string(cnf.num_clauses()) + " clauses, sha256=" + sha256_hex(text));
  if (o.out.empty()) std::cout << text;
  else write_output(o.out, text, o.force);
  return kOk;
}

struct SolveArgs {
  fs::path cnf_file;
  fs::path solver;
  double timeout = 600;
  std::uint64_t memory_mb = 0;
  std::vector<std::string> flags;
  long long seed = -1;
  std::string cube;
  fs::path chirotope;
  fs::path model_out;
  bool force = false;
};

SolverConfig make_config(const fs::path& solver, double timeout, std::uint64_t memory_mb,
                         const std::vector<std::string>& flags, long long seed) {
  SolverConfig c;
  c.backend = resolve_backend(solver);
  c.timeout = timeout;
  c.memory_limit_mb = memory_mb;
  c.flags = flags;
  if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
  log_info("backend " + backend_identity(c.backend) + " at " + c.backend.string() + ", timeout " +
           std::to_string(timeout) + "s");
  return c;
}

CnfFormula load_cnf(const fs::path& file) {
  log_input(file);
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read " + file.string());
  return read_dimacs(in);
}

int cmd_solve(const SolveArgs& o) {
  const CnfFormula cnf = load_cnf(o.cnf_file);
  const SolverConfig config = make_config(o.solver, o.timeout, o.memory_mb, o.flags, o.seed);
  std::vector<int> assumptions = parse_cube(o.cube);
  if (!o.chirotope.empty()) {
    log_input(o.chirotope);
    std::ifstream in(o.chirotope);
    const Chirotope chi = Chirotope::from_text(in);
    const auto fixed = assume_chirotope(cnf, cnf.path().length() > 0 ? orient_for(cnf, chi) : chi);
    assumptions.insert(assumptions.end(), fixed.begin(), fixed.end());
  }
  const SolveResult r = solve(cnf, config, assumptions);
  std::cout << verdict_name(r.verdict) << '\t' << std::fixed << std::setprecision(3) << r.wall_seconds << '\t'
            << r.instance_digest << '\n';
  if (!r.diagnostics.empty()) log_warn(r.diagnostics);
  if (r.verdict == Verdict::Sat && !o.model_out.empty()) {
    std::string text = "v";
    for (std::size_t v = 1; v < r.model.size(); ++v) text += " " + std::string(r.model[v] ? "" : "-") + std::to_string(v);
    text += " 0\n";
    if (cnf.varmap().dimension() > 0) text = decode_chirotope(cnf, r.model).to_text() + text;
    write_output(o.model_out, text, o.force);
  }
  switch (r.verdict) {
    case Verdict::Unsat: return kOk;
    case Verdict::Sat: return kRefuted;
    case Verdict::Timeout: return kIncomplete;
    case Verdict::Error: return kInternal;
  }
  return kInternal;
}

struct SplitArgs {
  fs::path cnf_file;
  int depth = 1;
  std::string order = "occurrence";
  std::string cube;
  fs::path out;
  bool force = false;
};

int cmd_split(const SplitArgs& o) {
  const CnfFormula cnf = load_cnf(o.cnf_file);
  const SplitOrder order = order_from_name(o.order);
  SplitOutcome outcome;
  if (o.cube.empty()) {
    outcome = split(cnf, o.depth, order);
  } else {
    SplitNode node;
    node.cube = parse_cube(o.cube);
    node.depth = static_cast<int>(node.cube.size());
    outcome = resplit(node, cnf, o.depth, order);
  }
  std::ostringstream text;
  for (const auto& leaf : outcome.leaves) {
    text << leaf.depth << '\t' << leaf.implied.size() << '\t' << format_cube(leaf.cube) << '\n';
  }
  log_info(std::to_string(outcome.leaves.size()) + " leaves, order " + o.order);
  if (o.out.empty()) std::cout << text.str();
  else write_output(o.out, text.str(), o.force);
  return kOk;
}

struct CampaignArgs {
  int d = 0, n = 0, k = 0;
  fs::path manifest;
  fs::path solver;
  double timeout = 600;
  std::uint64_t memory_mb = 0;
  std::vector<std::string> flags;
  long long seed = -1;
  int split_depth = 0;
  int increment = 2;
  int max_depth = 12;
  std::string order = "occurrence";
  int jobs = 1;
  fs::path ledger;
  fs::path workdir;
  double budget = 0;
  bool status_only = false;
};

void print_status(const CampaignStatus& s) {
  std::cout << "d\tn\tk\tm\tl\tcount\tresolved\tunsat\tsat\tdifficult\tpending\n";
  for (const auto& c : s.classes) {
    std::cout << s.d << '\t' << s.n << '\t' << s.k << '\t' << c.m << '\t' << c.l << '\t' << c.total << '\t'
              << c.resolved << '\t' << c.unsat << '\t' << c.sat << '\t' << c.difficult << '\t' << c.pending()
              << '\n';
  }
  std::cout << "verdict\t" << campaign_verdict_name(s.verdict()) << '\n';
}

int verdict_exit(CampaignVerdict v) {
  switch (v) {
    case CampaignVerdict::AllUnsat: return kOk;
    case CampaignVerdict::Refuted: return kRefuted;
    case CampaignVerdict::Incomplete: return kIncomplete;
  }
  return kInternal;
}

int cmd_campaign(const CampaignArgs& o) {
  if (o.ledger.empty()) throw UsageError("--ledger is required");
  if (o.status_only) {
    log_input(o.ledger);
    const CampaignStatus s = campaign_status(o.ledger);
    print_status(s);
    return verdict_exit(s.verdict());
  }
  CampaignManifest m;
  if (!o.manifest.empty()) {
    log_input(o.manifest);
    m = read_manifest(o.manifest);
    if (!o.solver.empty()) m.solver.backend = o.solver;
    m.solver.backend = resolve_backend(m.solver.backend);
  } else {
    if (o.d == 0 || o.n == 0 || o.k == 0) throw UsageError("campaign needs -d, -n and -k or --manifest");
    SplitPolicy policy;
    policy.initial_depth = o.split_depth;
    policy.increment = o.increment;
    policy.max_depth = std::max(o.max_depth, o.split_depth);
    policy.order = order_from_name(o.order);
    const fs::path workdir = o.workdir.empty() ? fs::path(o.ledger.string() + ".d") : o.workdir;
    const SolverConfig config = make_config(o.solver, o.timeout, o.memory_mb, o.flags, o.seed);
    m = prepare_campaign(o.d, o.n, o.k, workdir, config, policy, o.jobs);
    write_manifest(m, workdir / "manifest.json");
  }
  if (o.budget > 0) m.budget_seconds = o.budget;
  log_info("campaign (" + std::to_string(m.d) + "," + std::to_string(m.n) + "," + std::to_string(m.k) +
           ") manifest sha256=" + m.digest() + " paths sha256=" + m.path_digest + " jobs=" +
           std::to_string(m.jobs) + " split=" + std::to_string(m.split.initial_depth) + "/+" +
           std::to_string(m.split.increment) + "/" + std::to_string(m.split.max_depth) + " order=" +
           order_name(m.split.order));
  const CampaignReport report = run_campaign(m, o.ledger);
  log_info(std::to_string(report.solves) + " backend runs");
  print_status(report.status);
  if (report.model_file) {
    std::cout << "model\t" << report.model_file->string() << '\n';
    if (report.refuting_path) std::cout << "path\t" << *report.refuting_path << '\n';
  }
  return verdict_exit(report.verdict);
}

struct BoundsArgs {
  fs::path facts;
  fs::path hypotheses;
  std::string rows = "4:8";
  std::string cols = "0:4";
  std::vector<std::string> explain_cells;
};

int cmd_bounds(const BoundsArgs& o) {
  BoundsTable table = seed_known();
  try {
    if (!o.hypotheses.empty()) {
      log_input(o.hypotheses);
      for (const auto& h : parse_hypotheses(read_file(o.hypotheses))) apply_hypothesis(table, h);
    }
    if (!o.facts.empty()) {
      log_input(o.facts);
      for (const auto& f : parse_facts(read_file(o.facts))) apply_nonexistence(table, f.d, f.n, f.k, f.source);
    }
  } catch (const IntegrityError& e) {
    throw UsageError(e.what());
  }
  for (const auto& note : table.notes()) log_info(note);
  const auto [d_lo, d_hi] = parse_pair(o.rows, ':', "row range");
  const auto [c_lo, c_hi] = parse_pair(o.cols, ':', "column range");
  std::cout << render(table, d_lo, d_hi, c_lo, c_hi);
  for (const auto& cell : o.explain_cells) {
    const auto [d, n] = parse_pair(cell, ',', "cell");
    std::cout << explain(table, d, n);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facet-path enumeration, SAT encoding and diameter bounds for simplicial polytopes"};
  app.set_version_flag("--version", std::string("chiropath ") + CHIROPATH_VERSION);
  app.require_subcommand(1);
  bool quiet = false;
  bool verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings to stderr");
  app.add_flag("-v,--verbose", verbose, "Print debug output to stderr");

  PathsArgs po;
  auto* paths = app.add_subcommand("paths", "Enumerate path types and print counts per (m,l) class");
  paths->add_option("-d", po.d, "Dimension")->required();
  paths->add_option("-n", po.n, "Number of labels")->required();
  paths->add_option("-k", po.k, "Path length")->required();
  paths->add_option("--class", po.cls, "Restrict to one class, given as m,l");
  paths->add_option("--out", po.out, "Write the paths as JSON lines");
  paths->add_flag("--force", po.force, "Overwrite a different existing output");

  EncodeArgs eo;
  auto* encode = app.add_subcommand("encode", "Write the DIMACS instance of one path");
  encode->add_option("path-file", eo.path_file, "Path file (JSON lines)")->required();
  encode->add_option("index", eo.index, "0-based line index")->required();
  encode->add_option("--out", eo.out, "Output file (stdout when omitted)");
  encode->add_option("--distance", eo.distance, "Distance bound between end facets (default: path length)");
  encode->add_flag("--force", eo.force, "Overwrite a different existing output");

  SolveArgs so;
  auto* solve_cmd = app.add_subcommand("solve", "Run the SAT backend on a DIMACS instance");
  solve_cmd->add_option("cnf", so.cnf_file, "DIMACS file")->required();
  solve_cmd->add_option("--solver", so.solver, "Backend executable (default: $CHIROPATH_SOLVER)");
  solve_cmd->add_option("--timeout", so.timeout, "Wall-clock limit in seconds")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--memory", so.memory_mb, "Memory limit in MiB (0: none)");
  solve_cmd->add_option("--flag", so.flags, "Extra backend argument (repeatable)");
  solve_cmd->add_option("--seed", so.seed, "Seed passed to the backend");
  solve_cmd->add_option("--cube", so.cube, "Space-separated literals appended as unit clauses");
  solve_cmd->add_option("--chirotope", so.chirotope, "Fix every sign to this chirotope");
  solve_cmd->add_option("--model-out", so.model_out, "Write the verified model here");
  solve_cmd->add_flag("--force", so.force, "Overwrite a different existing output");

  SplitArgs sp;
  auto* split_cmd = app.add_subcommand("split", "Print the leaf cubes of a bounded backtracking tree");
  split_cmd->add_option("cnf", sp.cnf_file, "DIMACS file")->required();
  split_cmd->add_option("--depth", sp.depth, "Number of branching decisions")->check(CLI::PositiveNumber);
  split_cmd->add_option("--order", sp.order, "Branching order: occurrence or index");
  split_cmd->add_option("--cube", sp.cube, "Extend this cube instead of the root");
  split_cmd->add_option("--out", sp.out, "Output file (stdout when omitted)");
  split_cmd->add_flag("--force", sp.force, "Overwrite a different existing output");

  CampaignArgs co;
  auto* campaign = app.add_subcommand("campaign", "Run or resume a nonexistence campaign");
  campaign->add_option("-d", co.d, "Dimension");
  campaign->add_option("-n", co.n, "Number of labels");
  campaign->add_option("-k", co.k, "Path length");
  campaign->add_option("--manifest", co.manifest, "Campaign manifest instead of -d/-n/-k");
  campaign->add_option("--solver", co.solver, "Backend executable (default: $CHIROPATH_SOLVER)");
  campaign->add_option("--timeout", co.timeout, "Per-solve wall-clock limit in seconds")->check(CLI::PositiveNumber);
  campaign->add_option("--memory", co.memory_mb, "Per-solve memory limit in MiB (0: none)");
  campaign->add_option("--flag", co.flags, "Extra backend argument (repeatable)");
  campaign->add_option("--seed", co.seed, "Seed passed to the backend");
  campaign->add_option("--split-depth", co.split_depth, "Split every instance this deep before solving");
  campaign->add_option("--resplit", co.increment, "Extra depth when a cube times out")->check(CLI::PositiveNumber);
  campaign->add_option("--max-depth", co.max_depth, "Deepest cube before giving up on a node");
  campaign->add_option("--order", co.order, "Branching order: occurrence or index");
  campaign->add_option("--jobs", co.jobs, "Concurrent solver processes")->check(CLI::PositiveNumber);
  campaign->add_option("--ledger", co.ledger, "JSON-lines ledger (created or resumed)");
  campaign->add_option("--workdir", co.workdir, "Artifact directory (default: <ledger>.d)");
  campaign->add_option("--budget", co.budget, "Stop scheduling solves after this many seconds");
  campaign->add_flag("--status", co.status_only, "Only summarize the ledger");

  BoundsArgs bo;
  auto* bounds = app.add_subcommand("bounds", "Render the table of bounds on Delta(d,n)");
  bounds->add_option("--facts", bo.facts, "JSON array of {d,n,k,source} nonexistence facts");
  bounds->add_option("--hypotheses", bo.hypotheses, "JSON array of {d,n,value|lower|upper} assumptions");
  bounds->add_option("--rows", bo.rows, "Range of d, as lo:hi");
  bounds->add_option("--cols", bo.cols, "Range of n-2d, as lo:hi");
  bounds->add_option("--explain", bo.explain_cells, "Print the derivation of cell d,n (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  set_log_level(quiet ? LogLevel::Warn : verbose ? LogLevel::Debug : LogLevel::Info);
  log_info(std::string("chiropath ") + CHIROPATH_VERSION);

  try {
    if (paths->parsed()) return cmd_paths(po);
    if (encode->parsed()) return cmd_encode(eo);
    if (solve_cmd->parsed()) return cmd_solve(so);
    if (split_cmd->parsed()) return cmd_split(sp);
    if (campaign->parsed()) return cmd_campaign(co);
    if (bounds->parsed()) return cmd_bounds(bo);
  } catch (const UsageError& e) {
    std::cerr << "chiropath: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "chiropath: " << e.what() << '\n';
    return kUsage;
  } catch (const IntegrityError& e) {
    std::cerr << "chiropath: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "chiropath: internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
