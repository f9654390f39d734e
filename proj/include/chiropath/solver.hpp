#pragma once

// External SAT backend harness, model verification, and cube splitting.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chiropath/encoder.hpp"

namespace chiropath {

struct SolverConfig {
  std::filesystem::path backend;
  std::vector<std::string> flags;
  double timeout = 60.0;              // wall-clock seconds, enforced by killing the child
  std::uint64_t memory_limit_mb = 0;  // 0: unlimited
  std::optional<std::uint64_t> seed;  // passed as --seed=N
  std::filesystem::path workdir;      // scratch files; system temp when empty
};

// Resolves the backend (explicit path, else $CHIROPATH_SOLVER) and checks it
// is executable. Throws DomainError otherwise.
std::filesystem::path resolve_backend(const std::filesystem::path& requested);

// "<basename> <first line of --version>".
std::string backend_identity(const std::filesystem::path& backend);

enum class Verdict { Sat, Unsat, Timeout, Error };

const char* verdict_name(Verdict v);
Verdict verdict_from_name(const std::string& name);

struct SolveResult {
  Verdict verdict = Verdict::Error;
  Model model;  // non-empty iff Sat; model[v] for v in [1, num_vars]
  double wall_seconds = 0.0;
  std::string backend;
  std::string instance_digest;
  std::string diagnostics;  // captured backend output on Error, verification failure reason
};

// Runs the backend on cnf with the assumption literals appended as unit
// clauses. A claimed model is accepted only if verify_model passes.
SolveResult solve(const CnfFormula& cnf, const SolverConfig& config,
                  std::span<const int> assumptions = {});

struct Verification {
  bool ok = true;
  std::string reason;
};

// Clauses, GP axioms of the decoded chirotope, facet variables against
// facets_of, and the end-facet distance of the decoded facet graph.
Verification check_model(const CnfFormula& cnf, const Model& model,
                         std::span<const int> assumptions = {});
bool verify_model(const CnfFormula& cnf, const Model& model, std::span<const int> assumptions = {});

// Parses backend output ("s ..." and "v ..." lines).
SolveResult parse_backend_output(const std::string& output, int num_vars);

// ---------------------------------------------------------------------------
// Splitting

enum class SplitOrder { Occurrence, Index };

const char* order_name(SplitOrder order);
SplitOrder order_from_name(const std::string& name);

enum class NodeState { Open, Timeout, Sat, Unsat };

struct SplitNode {
  std::vector<int> cube;     // decision literals on sign variables
  int depth = 0;
  std::vector<int> implied;  // sign-variable literals fixed by propagation (cube included)
  NodeState state = NodeState::Open;

  bool resolved() const { return state == NodeState::Sat || state == NodeState::Unsat; }
};

// Standard unit propagation over the formula's clauses with two watched literals.
class Propagator {
 public:
  explicit Propagator(const CnfFormula& cnf);

  // Assigns lit and propagates; false on conflict (assignment left partial,
  // call backtrack).
  bool assign(int lit);
  bool propagate_units();  // formula unit clauses; false on conflict
  void backtrack(std::size_t trail_size);
  std::size_t trail_size() const { return trail_.size(); }
  std::span<const int> trail() const { return trail_; }
  int value(int var) const { return values_[static_cast<std::size_t>(var)]; }  // +1, -1, 0

 private:
  bool enqueue(int lit);
  bool run();

  const CnfFormula& cnf_;
  std::vector<std::int8_t> values_;
  std::vector<int> trail_;
  std::size_t head_ = 0;
  std::vector<std::vector<std::size_t>> watches_;  // by literal code
  std::vector<std::array<int, 2>> watched_;         // per clause: positions of watched literals
  std::vector<int> units_;
  bool root_conflict_ = false;
};

// Sign variables in branching order.
std::vector<int> split_order(const CnfFormula& cnf, SplitOrder order);

struct SplitOutcome {
  std::vector<SplitNode> leaves;
  bool capped = false;  // ran out of unfixed sign variables before the requested depth
};

SplitOutcome split(const CnfFormula& cnf, int depth, SplitOrder order = SplitOrder::Occurrence);

// Extends an unresolved node by additional_depth more decisions.
SplitOutcome resplit(const SplitNode& node, const CnfFormula& cnf, int additional_depth,
                     SplitOrder order = SplitOrder::Occurrence);

std::string format_cube(std::span<const int> cube);  // "3 -7 12", empty for the root
std::vector<int> parse_cube(const std::string& text);

}  // namespace chiropath
