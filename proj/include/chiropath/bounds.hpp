#pragma once

// Lower/upper bounds on the maximum diameter Delta(d, n) of d-polytopes with
// n facets, with the derivation behind every bound.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chiropath {

enum class BoundRule { Seed, Hypothesis, Lemma, KleeWalkup };

const char* rule_name(BoundRule rule);

struct Derivation {
  BoundRule rule = BoundRule::Seed;
  bool upper = true;  // which side of the interval this step set
  int value = 0;
  std::vector<std::pair<int, int>> premises;  // (d, n) cells whose upper bounds were used
  std::optional<int> fact_k;                  // Lemma: the nonexistence fact used
  std::string source;
  bool hypothetical = false;
};

struct DeltaBound {
  int d = 0;
  int n = 0;
  std::optional<int> lower;
  std::optional<int> upper;
  bool lower_hypothetical = false;
  bool upper_hypothetical = false;
  std::vector<Derivation> history;  // every step that tightened this cell, in order

  bool exact() const { return lower && upper && *lower == *upper; }
  std::string cell() const;  // "x", "a-b", "a+", "-b", "?"
};

// "There is no (d, n)-polytope with two facet-disjoint vertices at distance k."
struct NonexistenceFact {
  int d = 0;
  int n = 0;
  int k = 0;
  std::string source;
};

struct Hypothesis {
  int d = 0;
  int n = 0;
  std::optional<int> lower;
  std::optional<int> upper;
  std::string note;
};

class BoundsTable {
 public:
  const DeltaBound* find(int d, int n) const;
  const DeltaBound& at(int d, int n) const;
  const std::map<std::pair<int, int>, DeltaBound>& cells() const { return cells_; }
  const std::vector<NonexistenceFact>& facts() const { return facts_; }
  const std::vector<std::string>& notes() const { return notes_; }

  // Tighten one side; returns true if the cell changed. Throws IntegrityError
  // when the interval becomes empty.
  bool tighten(int d, int n, const Derivation& step);

  void add_fact(const NonexistenceFact& fact) { facts_.push_back(fact); }
  void note(std::string text) { notes_.push_back(std::move(text)); }

 private:
  std::map<std::pair<int, int>, DeltaBound> cells_;
  std::vector<NonexistenceFact> facts_;
  std::vector<std::string> notes_;
};

// Published values: Delta(2, n), Delta(3, n) for small n and the d = 4..8,
// n - 2d = 0..4 grid of previously known bounds.
BoundsTable seed_known();

void apply_hypothesis(BoundsTable& table, const Hypothesis& h);

// Records the fact and closes the table.
void apply_nonexistence(BoundsTable& table, int d, int n, int k, const std::string& source = "manual");

// Delta(d, 2d+j) <= Delta(d-1, 2d+j-1) + floor(j/2) + 1 for 0 <= j <= 3, and
// the Lemma for every recorded fact, repeated until nothing changes.
void apply_klee_walkup(BoundsTable& table);
void close_table(BoundsTable& table);

// Rows d in [d_lo, d_hi], columns n - 2d in [off_lo, off_hi].
std::string render(const BoundsTable& table, int d_lo, int d_hi, int off_lo, int off_hi);

// One line per derivation step of the cell.
std::string explain(const BoundsTable& table, int d, int n);

// Facts/hypotheses files: JSON arrays of {d, n, k, source} and
// {d, n, value | lower | upper, note}. Throw IntegrityError on bad input.
std::vector<NonexistenceFact> parse_facts(const std::string& json_text);
std::vector<Hypothesis> parse_hypotheses(const std::string& json_text);

}  // namespace chiropath
