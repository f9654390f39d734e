#pragma once

// Nonexistence campaigns: every path type of a (d, n, k) enumeration is
// encoded and solved, splitting instances that time out, with each outcome
// appended to a JSON-lines ledger so that an interrupted run can resume.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chiropath/combinat.hpp"
#include "chiropath/solver.hpp"

namespace chiropath {

struct SplitPolicy {
  int initial_depth = 0;  // 0: solve whole instances first
  int increment = 2;      // extra decisions per resplit of a timed-out node
  int max_depth = 12;     // timed-out nodes at this depth stay unresolved
  SplitOrder order = SplitOrder::Occurrence;
};

struct CampaignManifest {
  int d = 0;
  int n = 0;
  int k = 0;
  std::filesystem::path path_file;
  std::string path_digest;
  bool enumerated = true;  // path file holds a full enumeration (counts are checked)
  SolverConfig solver;
  SplitPolicy split;
  int jobs = 1;
  std::filesystem::path workdir;  // artifacts: models, per-job results

  // Operational limits; not part of the manifest identity.
  std::optional<double> budget_seconds;
  std::optional<std::size_t> solve_limit;

  // Digest over the fields that determine the campaign's outcome.
  std::string digest() const;
};

std::string manifest_to_json(const CampaignManifest& manifest);
// Relative paths are resolved against base_dir; the path-file digest is checked.
CampaignManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
CampaignManifest read_manifest(const std::filesystem::path& file);
void write_manifest(const CampaignManifest& manifest, const std::filesystem::path& file);

// Enumerates (d, n, k), writes workdir/paths-d-n-k.jsonl (unless an identical
// file is already there) and returns a manifest referring to it.
CampaignManifest prepare_campaign(int d, int n, int k, const std::filesystem::path& workdir,
                                  const SolverConfig& solver, const SplitPolicy& split, int jobs);

enum class CampaignVerdict { AllUnsat, Refuted, Incomplete };

const char* campaign_verdict_name(CampaignVerdict v);

struct ClassProgress {
  int m = 0;
  int l = 0;
  std::size_t total = 0;
  std::size_t resolved = 0;
  std::size_t unsat = 0;
  std::size_t sat = 0;
  std::size_t difficult = 0;  // needed at least one resplit after a timeout
  std::size_t pending() const { return total - resolved; }
};

struct CampaignStatus {
  int d = 0;
  int n = 0;
  int k = 0;
  std::string manifest_digest;
  std::vector<ClassProgress> classes;  // ascending (m, l)
  std::size_t results = 0;             // solver results recorded
  std::size_t splits = 0;              // split records
  std::size_t total() const;
  std::size_t resolved() const;
  std::size_t difficult() const;
  std::size_t sat() const;
  CampaignVerdict verdict() const;
};

CampaignStatus campaign_status(const std::filesystem::path& ledger);

struct CampaignReport {
  CampaignVerdict verdict = CampaignVerdict::Incomplete;
  CampaignStatus status;
  std::size_t solves = 0;  // backend runs in this invocation
  std::optional<std::filesystem::path> model_file;
  std::optional<std::string> refuting_path;
};

// Runs or resumes the campaign recorded in `ledger`.
CampaignReport run_campaign(const CampaignManifest& manifest, const std::filesystem::path& ledger);

}  // namespace chiropath
