#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "chiropath/bounds.hpp"
#include "chiropath/campaign.hpp"
#include "chiropath/chirotope.hpp"
#include "chiropath/combinat.hpp"
#include "chiropath/encoder.hpp"
#include "chiropath/error.hpp"
#include "chiropath/log.hpp"
#include "chiropath/solver.hpp"
#include "testing.hpp"

using namespace chiropath;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SolverConfig solver_config(double timeout = 600) {
  SolverConfig c;
  c.backend = testing::backend();
  c.timeout = timeout;
  return c;
}

std::vector<PathType> flatten(const std::map<ClassKey, ClassBucket>& buckets) {
  std::vector<PathType> out;
  for (const auto& [key, b] : buckets) out.insert(out.end(), b.paths.begin(), b.paths.end());
  return out;
}

std::vector<PathType> sample(std::vector<PathType> paths, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(paths.begin(), paths.end(), rng);
  if (paths.size() > count) paths.resize(count);
  return paths;
}

// 1. Path counts, one row per (d, n, k, m, l).
Outcome path_counts() {
  struct Row {
    int d, n, k, m, l;
    std::size_t count;
  };
  const std::vector<Row> table{
      {4, 10, 6, 0, 0, 15},   {4, 10, 6, 1, 1, 24},   {4, 10, 6, 2, 2, 16},   {4, 11, 7, 0, 0, 50},
      {4, 11, 7, 1, 1, 200},  {4, 11, 7, 2, 2, 354},  {4, 11, 7, 3, 3, 96},   {4, 12, 8, 0, 0, 160},
      {4, 12, 8, 1, 1, 1258}, {4, 12, 8, 2, 2, 5172}, {4, 12, 8, 3, 3, 7398}, {4, 12, 8, 4, 4, 1512},
      {5, 11, 7, 1, 0, 98},   {5, 11, 7, 2, 1, 98},   {5, 12, 8, 1, 0, 1079}, {5, 12, 8, 2, 1, 3184},
      {5, 12, 8, 3, 2, 2904}, {6, 12, 7, 1, 0, 11},   {6, 13, 8, 1, 0, 293},  {6, 13, 8, 2, 1, 452},
  };
  std::map<std::array<int, 3>, std::map<ClassKey, std::size_t>> expected;
  for (const Row& r : table) expected[{r.d, r.n, r.k}][{r.m, r.l}] = r.count;
  int matched = 0;
  std::string bad;
  for (const auto& [dnk, classes] : expected) {
    const auto got = enumerate_all(dnk[0], dnk[1], dnk[2]);
    std::map<ClassKey, std::size_t> counts;
    for (const auto& [key, b] : got) counts[key] = b.count;
    for (const auto& [key, count] : classes) {
      const auto it = counts.find(key);
      if (it != counts.end() && it->second == count) {
        ++matched;
      } else {
        bad += " (" + std::to_string(dnk[0]) + "," + std::to_string(dnk[1]) + "," + std::to_string(dnk[2]) + ")[" +
               std::to_string(key.first) + "," + std::to_string(key.second) + "]";
      }
    }
    if (counts.size() != classes.size()) bad += " extra classes at (" + std::to_string(dnk[0]) + ",...)";
  }
  return {bad.empty() && matched == 20, std::to_string(matched) + "/20 rows exact" + bad};
}

// 2. Complete campaigns that must come back ALL-UNSAT.
Outcome reconfirm_small_cases() {
  if (testing::backend().empty()) return {false, "no SAT backend configured"};
  std::string detail;
  bool ok = true;
  for (auto [d, n, k, expected] : std::vector<std::array<int, 4>>{{4, 10, 6, 55}, {5, 11, 7, 196}}) {
    testing::TempDir dir("accept-campaign");
    const auto start = Clock::now();
    const CampaignManifest m = prepare_campaign(d, n, k, dir / "work", solver_config(), SplitPolicy{}, 1);
    const CampaignReport r = run_campaign(m, dir / "ledger.jsonl");
    const double wall = seconds_since(start);
    const std::size_t slots = r.status.total();
    std::size_t unsat = 0;
    for (const ClassProgress& c : r.status.classes) unsat += c.unsat;
    const bool pass = r.verdict == CampaignVerdict::AllUnsat && slots == static_cast<std::size_t>(expected) &&
                      unsat == slots && wall < 1800;
    ok = ok && pass;
    std::ostringstream s;
    s << (detail.empty() ? "" : "; ") << "(" << d << "," << n << "," << k << ") " << campaign_verdict_name(r.verdict)
      << " " << unsat << "/" << slots << " in " << static_cast<int>(wall) << "s";
    detail += s.str();
  }
  return {ok, detail};
}

// 3. A realized configuration is found at its own distance and not beyond.
Outcome positive_control() {
  if (testing::backend().empty()) return {false, "no SAT backend configured"};
  const testing::RealizedPath rp = testing::find_realized_path(101, 4, 10, 3);
  if (rp.path.length() != rp.distance || !((rp.path.facet(0) & rp.path.facet(rp.distance)) == 0)) {
    return {false, "fixture path does not match its distance"};
  }
  const CnfFormula cnf = encode_instance(rp.path, 10);
  const auto assumed = assume_chirotope(cnf, orient_for(cnf, rp.chi));
  const SolveResult at = solve(cnf, solver_config(120), assumed);
  const bool verified = at.verdict == Verdict::Sat && verify_model(cnf, at.model, assumed);

  const CnfFormula beyond = encode_instance(rp.path, 10, EncodeOptions{rp.distance + 1});
  const SolveResult past = solve(beyond, solver_config(120), assume_chirotope(beyond, orient_for(beyond, rp.chi)));
  const bool pass = verified && past.verdict == Verdict::Unsat;
  return {pass, "distance " + std::to_string(rp.distance) + ": k=t " + verdict_name(at.verdict) +
                    (verified ? " (model verified)" : "") + ", k=t+1 " + verdict_name(past.verdict)};
}

// 4. Splitting never changes the verdict.
Outcome split_cover() {
  if (testing::backend().empty()) return {false, "no SAT backend configured"};
  int agreed = 0, instances = 0, sat = 0, leaves = 0;
  std::string bad;
  std::uint64_t seed = 400;
  for (auto [d, n, k] : std::vector<std::array<int, 3>>{{4, 10, 5}, {4, 10, 6}, {4, 11, 6}, {4, 11, 7}}) {
    for (const PathType& p : sample(flatten(enumerate_all(d, n, k)), 5, seed++)) {
      ++instances;
      const CnfFormula cnf = encode_instance(p, n);
      const Verdict whole = solve(cnf, solver_config()).verdict;
      if (whole == Verdict::Sat) ++sat;
      bool same = whole == Verdict::Sat || whole == Verdict::Unsat;
      for (int depth = 1; depth <= 4 && same; ++depth) {
        bool any_sat = false, all_unsat = true;
        for (const SplitNode& leaf : split(cnf, depth).leaves) {
          ++leaves;
          const Verdict v = solve(cnf, solver_config(), leaf.cube).verdict;
          if (v != Verdict::Sat && v != Verdict::Unsat) all_unsat = false;
          any_sat = any_sat || v == Verdict::Sat;
          all_unsat = all_unsat && v == Verdict::Unsat;
        }
        same = any_sat == (whole == Verdict::Sat) && all_unsat == (whole == Verdict::Unsat);
      }
      if (same) ++agreed;
      else bad += " " + p.to_string();
    }
  }
  return {agreed == 20 && instances == 20,
          std::to_string(agreed) + "/" + std::to_string(instances) + " instances agree at depths 1-4 (" +
              std::to_string(sat) + " SAT, " + std::to_string(leaves) + " leaf solves)" + bad};
}

// 5. Bound propagation from the seeded literature values.
Outcome bounds_tables() {
  auto cells = [](const BoundsTable& t) {
    std::vector<std::string> out;
    for (int d = 4; d <= 8; ++d) {
      for (int off = 0; off <= 4; ++off) out.push_back(t.at(d, 2 * d + off).cell());
    }
    return out;
  };
  const std::vector<std::string> table1{"4",    "5",  "5",   "6",   "7+",  "5",  "6",  "7-8", "7+",
                                        "8+",   "6",  "7-9", "8+",  "9+",  "9+", "7-10", "8+", "9+",
                                        "10+",  "11+", "8+", "9+",  "10+", "11+", "12+"};
  const std::vector<std::string> table4{"4",   "5",   "5",  "6",   "7",   "5",   "6",   "7",  "7-9",
                                        "8+",  "6",   "7",  "8-11", "9+", "9+",  "7-8", "8-12", "9+",
                                        "10+", "11+", "8-13", "9+", "10+", "11+", "12+"};
  std::string detail;
  bool ok = true;
  const BoundsTable seeded = seed_known();
  const bool t1 = cells(seeded) == table1;
  ok = ok && t1;
  detail += std::string("known table ") + (t1 ? "exact" : "differs");

  BoundsTable with_fact = seeded;
  apply_nonexistence(with_fact, 4, 12, 8, "campaign");
  const bool cor = with_fact.at(4, 12).cell() == "7" && !with_fact.at(4, 12).upper_hypothetical;
  ok = ok && cor;
  detail += std::string("; Delta(4,12)=") + with_fact.at(4, 12).cell();

  BoundsTable one = seeded;
  apply_hypothesis(one, Hypothesis{5, 12, 7, 7, "assumed"});
  const bool kw = one.at(6, 13).upper == 8;
  ok = ok && kw;
  detail += "; from Delta(5,12)=7: Delta(6,13)<=" + std::to_string(one.at(6, 13).upper.value_or(-1));

  BoundsTable full = with_fact;
  apply_hypothesis(full, Hypothesis{5, 12, 7, 7, "assumed"});
  apply_hypothesis(full, Hypothesis{6, 13, 7, 7, "assumed"});
  const bool t4 = cells(full) == table4;
  ok = ok && t4;
  detail += std::string("; summary table ") + (t4 ? "exact" : "differs");
  int derived = 0;
  for (auto [d, n, v] : std::vector<std::array<int, 3>>{{5, 13, 9}, {6, 14, 11}, {7, 14, 8}, {7, 15, 12}, {8, 16, 13}}) {
    if (full.at(d, n).upper == v) ++derived;
  }
  ok = ok && derived == 5;
  detail += "; " + std::to_string(derived) + "/5 derived bounds";
  return {ok, detail};
}

// 6. Desk-scale stand-in for the (4,12,8) campaign.
Outcome desk_scale_substitute() {
  if (testing::backend().empty()) return {false, "no SAT backend configured"};
  std::string detail;
  const int status = std::system((std::string(CHIROPATH_UNIT_TESTS) + " -nv > /dev/null 2>&1").c_str());
  const bool units = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  detail += std::string("unit suites ") + (units ? "pass" : "FAIL");

  const testing::RealizedPath rp = testing::find_realized_path(202, 4, 10, 3);
  const CnfFormula control = encode_instance(rp.path, 10);
  const SolveResult free = solve(control, solver_config(120));
  int rejected = 0, mutations = 0;
  bool baseline = false;
  if (free.verdict == Verdict::Sat && verify_model(control, free.model)) {
    baseline = true;
    std::mt19937_64 rng(7);
    const int decided = control.varmap().sign_count() + control.varmap().facet_count();
    for (; mutations < 200; ++mutations) {
      Model m = free.model;
      const std::size_t v = 1 + rng() % static_cast<std::size_t>(decided);
      m[v] = !m[v];
      rejected += verify_model(control, m) ? 0 : 1;
    }
  }
  const bool gate = baseline && rejected == mutations;
  detail += "; mutation gate " + std::to_string(rejected) + "/" + std::to_string(mutations) + " rejected";

  const auto all = enumerate_all(4, 12, 8);
  const auto picked = sample(all.at({4, 4}).paths, 24, 812);
  int unsat = 0;
  double slowest = 0;
  for (const PathType& p : picked) {
    const SolveResult r = solve(encode_instance(p, 12), solver_config(1800));
    slowest = std::max(slowest, r.wall_seconds);
    if (r.verdict == Verdict::Unsat) ++unsat;
  }
  const bool spot = picked.size() >= 20 && unsat == static_cast<int>(picked.size());
  std::ostringstream s;
  s << "; (4,12,8) m=4 spot solves " << unsat << "/" << picked.size() << " UNSAT (slowest " << slowest << "s)";
  detail += s.str();
  return {units && gate && spot, detail};
}

// 7. Chirotope oracle against Gale evenness and random realizations.
Outcome chirotope_oracle() {
  int gale = 0;
  for (auto [d, n] : std::vector<std::pair<int, int>>{{3, 8}, {4, 8}, {4, 10}}) {
    if (facets_of(Chirotope::alternating(d, n)) == testing::gale_facets(d, n) &&
        facets_of(chirotope_from_points(testing::moment_curve(d, n))) == testing::gale_facets(d, n)) {
      ++gale;
    }
  }
  std::mt19937_64 rng(2024);
  int tested = 0, passed = 0, skipped = 0;
  while (tested < 1000) {
    const int d = 2 + static_cast<int>(rng() % 4);
    const int n = d + 3 + static_cast<int>(rng() % 4);
    try {
      const Chirotope chi = chirotope_from_points(testing::random_config(rng, d, n, 1000));
      ++tested;
      if (check_gp(chi)) ++passed;
    } catch (const DegeneracyError&) {
      ++skipped;
    }
  }
  return {gale == 3 && passed == tested,
          std::to_string(gale) + "/3 cyclic polytopes match Gale evenness; " + std::to_string(passed) + "/" +
              std::to_string(tested) + " random configurations satisfy GP (" + std::to_string(skipped) +
              " degenerate draws skipped)"};
}

}  // namespace

int main() {
  set_log_level(LogLevel::Warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"path counts", path_counts},
      {"small-case campaigns", reconfirm_small_cases},
      {"positive control", positive_control},
      {"split cover", split_cover},
      {"bounds tables", bounds_tables},
      {"desk-scale substitute", desk_scale_substitute},
      {"chirotope oracle", chirotope_oracle},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].first << ": " << o.detail << " ["
              << static_cast<int>(seconds_since(start)) << "s]" << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
