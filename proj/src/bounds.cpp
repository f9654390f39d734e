#include "chiropath/bounds.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "chiropath/error.hpp"

namespace chiropath {

namespace {

using json = nlohmann::json;

std::string cell_name(int d, int n) { return "Delta(" + std::to_string(d) + "," + std::to_string(n) + ")"; }

bool apply_lemma_once(BoundsTable& table) {
  bool changed = false;
  for (const NonexistenceFact& f : table.facts()) {
    const DeltaBound* lower_dim = table.find(f.d - 1, f.n - 1);
    if (lower_dim == nullptr || !lower_dim->upper || *lower_dim->upper >= f.k) continue;
    Derivation step;
    step.rule = BoundRule::Lemma;
    step.upper = true;
    step.value = f.k - 1;
    step.premises = {{f.d - 1, f.n - 1}};
    step.fact_k = f.k;
    step.source = f.source;
    step.hypothetical = lower_dim->upper_hypothetical;
    changed = table.tighten(f.d, f.n, step) || changed;
  }
  return changed;
}

bool apply_klee_walkup_once(BoundsTable& table) {
  bool changed = false;
  std::vector<std::pair<std::pair<int, int>, Derivation>> steps;
  for (const auto& [key, b] : table.cells()) {
    if (!b.upper) continue;
    const int d = key.first + 1;
    const int n = key.second + 1;
    const int j = n - 2 * d;
    if (j < 0 || j > 3) continue;
    Derivation step;
    step.rule = BoundRule::KleeWalkup;
    step.upper = true;
    step.value = *b.upper + j / 2 + 1;
    step.premises = {key};
    step.hypothetical = b.upper_hypothetical;
    steps.push_back({{d, n}, step});
  }
  for (const auto& [cell, step] : steps) changed = table.tighten(cell.first, cell.second, step) || changed;
  return changed;
}

}  // namespace

const char* rule_name(BoundRule rule) {
  switch (rule) {
    case BoundRule::Seed: return "seed";
    case BoundRule::Hypothesis: return "hypothesis";
    case BoundRule::Lemma: return "lemma";
    case BoundRule::KleeWalkup: return "klee-walkup";
  }
  return "?";
}

std::string DeltaBound::cell() const {
  if (lower && upper) {
    return *lower == *upper ? std::to_string(*lower) : std::to_string(*lower) + "-" + std::to_string(*upper);
  }
  if (lower) return std::to_string(*lower) + "+";
  if (upper) return "-" + std::to_string(*upper);
  return "?";
}

const DeltaBound* BoundsTable::find(int d, int n) const {
  const auto it = cells_.find({d, n});
  return it == cells_.end() ? nullptr : &it->second;
}

const DeltaBound& BoundsTable::at(int d, int n) const {
  const DeltaBound* b = find(d, n);
  if (b == nullptr) throw DomainError("no bounds recorded for " + cell_name(d, n));
  return *b;
}

bool BoundsTable::tighten(int d, int n, const Derivation& step) {
  if (d < 2 || n < d + 1) throw DomainError("bounds need d >= 2 and n >= d+1, got " + cell_name(d, n));
  auto [it, fresh] = cells_.try_emplace({d, n});
  DeltaBound& b = it->second;
  if (fresh) {
    b.d = d;
    b.n = n;
  }
  std::optional<int>& side = step.upper ? b.upper : b.lower;
  bool& taint = step.upper ? b.upper_hypothetical : b.lower_hypothetical;
  const bool better = !side || (step.upper ? step.value < *side : step.value > *side);
  const bool firmer = side && step.value == *side && taint && !step.hypothetical;
  if (!better && !firmer) return false;
  side = step.value;
  taint = step.hypothetical;
  b.history.push_back(step);
  if (b.lower && b.upper && *b.lower > *b.upper) {
    throw IntegrityError("contradictory bounds for " + cell_name(d, n) + ": lower " + std::to_string(*b.lower) +
                         " exceeds upper " + std::to_string(*b.upper) + " (last step: " + rule_name(step.rule) +
                         (step.source.empty() ? "" : ", " + step.source) + ")");
  }
  return true;
}

BoundsTable seed_known() {
  BoundsTable table;
  const auto seed = [&](int d, int n, std::optional<int> lo, std::optional<int> hi, const std::string& src) {
    Derivation step;
    step.rule = BoundRule::Seed;
    step.source = src;
    if (lo) {
      step.upper = false;
      step.value = *lo;
      table.tighten(d, n, step);
    }
    if (hi) {
      step.upper = true;
      step.value = *hi;
      table.tighten(d, n, step);
    }
  };
  for (int n = 3; n <= 24; ++n) seed(2, n, n / 2, n / 2, "polygons");
  for (int n = 4; n <= 24; ++n) seed(3, n, 2 * n / 3 - 1, 2 * n / 3 - 1, "Klee 1966, 3-polytopes");

  const std::string lit = "previously known bounds";
  // rows d = 4..8, columns n - 2d = 0..4; {lower, upper (0 = open)}
  const int grid[5][5][2] = {
      {{4, 4}, {5, 5}, {5, 5}, {6, 6}, {7, 0}},
      {{5, 5}, {6, 6}, {7, 8}, {7, 0}, {8, 0}},
      {{6, 6}, {7, 9}, {8, 0}, {9, 0}, {9, 0}},
      {{7, 10}, {8, 0}, {9, 0}, {10, 0}, {11, 0}},
      {{8, 0}, {9, 0}, {10, 0}, {11, 0}, {12, 0}},
  };
  for (int row = 0; row < 5; ++row) {
    for (int col = 0; col < 5; ++col) {
      const int d = row + 4;
      const int lo = grid[row][col][0];
      const int hi = grid[row][col][1];
      seed(d, 2 * d + col, lo, hi > 0 ? std::optional<int>(hi) : std::nullopt, lit);
    }
  }
  close_table(table);
  return table;
}

void apply_hypothesis(BoundsTable& table, const Hypothesis& h) {
  Derivation step;
  step.rule = BoundRule::Hypothesis;
  step.source = h.note.empty() ? "assumed" : h.note;
  step.hypothetical = true;
  if (h.lower) {
    step.upper = false;
    step.value = *h.lower;
    table.tighten(h.d, h.n, step);
  }
  if (h.upper) {
    step.upper = true;
    step.value = *h.upper;
    table.tighten(h.d, h.n, step);
  }
  close_table(table);
}

void apply_nonexistence(BoundsTable& table, int d, int n, int k, const std::string& source) {
  table.add_fact({d, n, k, source});
  const DeltaBound* lower_dim = table.find(d - 1, n - 1);
  if (lower_dim == nullptr || !lower_dim->upper || *lower_dim->upper >= k) {
    table.note("fact (" + std::to_string(d) + "," + std::to_string(n) + "," + std::to_string(k) +
               ") is inert: upper bound of " + cell_name(d - 1, n - 1) + " is not below " + std::to_string(k));
  }
  close_table(table);
}

void apply_klee_walkup(BoundsTable& table) { close_table(table); }

void close_table(BoundsTable& table) {
  bool changed = true;
  while (changed) {
    changed = apply_klee_walkup_once(table);
    changed = apply_lemma_once(table) || changed;
  }
}

std::string render(const BoundsTable& table, int d_lo, int d_hi, int off_lo, int off_hi) {
  if (d_lo > d_hi || off_lo > off_hi) return "";
  constexpr int kWidth = 7;
  std::ostringstream out;
  out << std::left << std::setw(4) << "d";
  for (int off = off_lo; off <= off_hi; ++off) out << std::setw(kWidth) << ("n-2d=" + std::to_string(off));
  out << '\n';
  for (int d = d_lo; d <= d_hi; ++d) {
    out << std::setw(4) << d;
    for (int off = off_lo; off <= off_hi; ++off) {
      const DeltaBound* b = table.find(d, 2 * d + off);
      out << std::setw(kWidth) << (b == nullptr ? "?" : b->cell());
    }
    out << '\n';
  }
  std::string text = out.str();
  // drop trailing padding on each line
  std::string trimmed;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    line.erase(line.find_last_not_of(' ') + 1);
    trimmed += line + '\n';
  }
  return trimmed;
}

std::string explain(const BoundsTable& table, int d, int n) {
  const DeltaBound& b = table.at(d, n);
  std::string out = cell_name(d, n) + " = " + b.cell() + "\n";
  for (const Derivation& s : b.history) {
    out += std::string("  ") + (s.upper ? "<= " : ">= ") + std::to_string(s.value) + "  " + rule_name(s.rule);
    for (const auto& [pd, pn] : s.premises) out += " from " + cell_name(pd, pn);
    if (s.fact_k) out += " and no end-disjoint distance-" + std::to_string(*s.fact_k) + " pair";
    if (!s.source.empty()) out += " [" + s.source + "]";
    if (s.hypothetical) out += " (hypothetical)";
    out += '\n';
  }
  return out;
}

std::vector<NonexistenceFact> parse_facts(const std::string& json_text) {
  std::vector<NonexistenceFact> out;
  try {
    const json j = json::parse(json_text);
    if (!j.is_array()) throw IntegrityError("facts file must hold a JSON array");
    for (const auto& f : j) {
      NonexistenceFact fact{f.at("d").get<int>(), f.at("n").get<int>(), f.at("k").get<int>(),
                            f.value("source", std::string("manual"))};
      if (fact.d < 2 || fact.n < fact.d + 1 || fact.k < 1) {
        throw IntegrityError("fact out of range: (" + std::to_string(fact.d) + "," + std::to_string(fact.n) + "," +
                             std::to_string(fact.k) + ")");
      }
      out.push_back(fact);
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed facts: ") + e.what());
  }
  return out;
}

std::vector<Hypothesis> parse_hypotheses(const std::string& json_text) {
  std::vector<Hypothesis> out;
  try {
    const json j = json::parse(json_text);
    if (!j.is_array()) throw IntegrityError("hypotheses file must hold a JSON array");
    for (const auto& e : j) {
      Hypothesis h;
      h.d = e.at("d").get<int>();
      h.n = e.at("n").get<int>();
      if (e.contains("value")) h.lower = h.upper = e.at("value").get<int>();
      if (e.contains("lower")) h.lower = e.at("lower").get<int>();
      if (e.contains("upper")) h.upper = e.at("upper").get<int>();
      h.note = e.value("note", std::string());
      if (!h.lower && !h.upper) throw IntegrityError("hypothesis without value, lower or upper");
      out.push_back(h);
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed hypotheses: ") + e.what());
  }
  return out;
}

}  // namespace chiropath
