#include "chiropath/combinat.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "chiropath/error.hpp"

namespace chiropath {

namespace {

using PositionMask = std::uint64_t;

// For every label in the support, the set of positions whose facet holds it.
std::array<PositionMask, kMaxLabels + 1> columns_of(const std::vector<LabelSet>& facets) {
  std::array<PositionMask, kMaxLabels + 1> cols{};
  for (std::size_t t = 0; t < facets.size(); ++t) {
    for (LabelSet s = facets[t]; s != 0; s &= s - 1) {
      cols[static_cast<std::size_t>(lowest_label(s))] |= PositionMask{1} << t;
    }
  }
  return cols;
}

// First-appearance relabeling of one orientation. Labels of F_0 are ordered
// so that, at the first position where two of them differ, the one still
// present gets the smaller label; this is the lexicographically least choice.
std::vector<LabelSet> render(const std::vector<LabelSet>& facets) {
  const auto cols = columns_of(facets);
  LabelSet all = 0;
  for (LabelSet f : facets) all |= f;
  std::vector<int> initial = to_labels(facets.front());
  std::vector<int> later = to_labels(all & ~facets.front());
  std::stable_sort(initial.begin(), initial.end(), [&](int u, int v) {
    const PositionMask diff = cols[static_cast<std::size_t>(u)] ^ cols[static_cast<std::size_t>(v)];
    return diff != 0 && (cols[static_cast<std::size_t>(u)] & (diff & (~diff + 1))) != 0;
  });
  std::sort(later.begin(), later.end(), [&](int u, int v) {
    return std::countr_zero(cols[static_cast<std::size_t>(u)]) <
           std::countr_zero(cols[static_cast<std::size_t>(v)]);
  });

  std::array<int, kMaxLabels + 1> relabel{};
  int next = 1;
  for (int v : initial) relabel[static_cast<std::size_t>(v)] = next++;
  for (int v : later) relabel[static_cast<std::size_t>(v)] = next++;

  std::vector<LabelSet> out;
  out.reserve(facets.size());
  for (LabelSet f : facets) {
    LabelSet g = 0;
    for (LabelSet s = f; s != 0; s &= s - 1) {
      g |= label_bit(relabel[static_cast<std::size_t>(lowest_label(s))]);
    }
    out.push_back(g);
  }
  return out;
}

bool facets_less(const std::vector<LabelSet>& a, const std::vector<LabelSet>& b) {
  const std::size_t common = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < common; ++i) {
    if (a[i] != b[i]) return lex_less(a[i], b[i]);
  }
  return a.size() < b.size();
}

// Non-consecutive facets sharing d-1 (or d) labels.
bool has_chord(const std::vector<LabelSet>& facets, int d) {
  for (std::size_t i = 0; i < facets.size(); ++i) {
    for (std::size_t j = i + 2; j < facets.size(); ++j) {
      if (label_count(facets[i] & facets[j]) >= d - 1) return true;
    }
  }
  return false;
}

void require_enumerable(int d, int k) {
  if (d < 2) throw DomainError("path enumeration requires d >= 2");
  if (k < d) {
    throw DomainError("end-disjoint paths need k >= d (got d=" + std::to_string(d) +
                      ", k=" + std::to_string(k) + ")");
  }
  if (d + k > kMaxLabels || k + 1 > 64) throw DomainError("path too long for label sets");
}

}  // namespace

PathType::PathType(int d, std::vector<LabelSet> facets) : d_(d), facets_(std::move(facets)) {
  if (d_ < 1) throw DomainError("facet dimension must be positive");
  if (facets_.empty()) throw DomainError("a path needs at least one facet");
  if (facets_.size() > 64) throw DomainError("paths are limited to 63 steps");
  for (LabelSet f : facets_) {
    if (label_count(f) != d_) {
      throw DomainError("facet {" + format_labels(f, ',') + "} does not have " +
                        std::to_string(d_) + " labels");
    }
  }
}

PathType PathType::from_labels(int d, const std::vector<std::vector<int>>& facets) {
  std::vector<LabelSet> sets;
  sets.reserve(facets.size());
  for (const auto& f : facets) {
    for (int v : f) {
      if (v < 1 || v > kMaxLabels) throw DomainError("label out of range: " + std::to_string(v));
    }
    sets.push_back(chiropath::from_labels(f));
  }
  return PathType(d, std::move(sets));
}

LabelSet PathType::support() const {
  LabelSet all = 0;
  for (LabelSet f : facets_) all |= f;
  return all;
}

int PathType::revisits() const {
  int m = 0;
  LabelSet seen = facets_.front();
  for (std::size_t t = 1; t < facets_.size(); ++t) {
    const LabelSet entering = facets_[t] & ~facets_[t - 1];
    m += label_count(entering & seen);
    seen |= facets_[t];
  }
  return m;
}

PathType PathType::reversed() const {
  std::vector<LabelSet> r(facets_.rbegin(), facets_.rend());
  return PathType(d_, std::move(r));
}

std::vector<std::vector<int>> PathType::facet_labels() const {
  std::vector<std::vector<int>> out;
  out.reserve(facets_.size());
  for (LabelSet f : facets_) out.push_back(to_labels(f));
  return out;
}

std::string PathType::to_string() const {
  std::string out;
  for (LabelSet f : facets_) {
    if (!out.empty()) out += ' ';
    out += '{' + format_labels(f, ',') + '}';
  }
  return out;
}

std::strong_ordering PathType::operator<=>(const PathType& other) const {
  if (d_ != other.d_) return d_ <=> other.d_;
  if (facets_ == other.facets_) return std::strong_ordering::equal;
  return facets_less(facets_, other.facets_) ? std::strong_ordering::less
                                             : std::strong_ordering::greater;
}

bool is_facet_sequence(const PathType& path) {
  const auto& f = path.facets();
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (label_count(f[i - 1] & f[i]) != path.dimension() - 1) return false;
  }
  return true;
}

bool has_structural_shortcut(const PathType& path) {
  return has_chord(path.facets(), path.dimension());
}

bool is_admissible(const PathType& path) {
  return is_facet_sequence(path) && (path.facets().front() & path.facets().back()) == 0 &&
         !has_structural_shortcut(path);
}

PathType canonical_relabeling(const PathType& path) {
  return PathType(path.dimension(), render(path.facets()));
}

PathType canonicalize(const PathType& path) {
  auto forward = render(path.facets());
  std::vector<LabelSet> rev(path.facets().rbegin(), path.facets().rend());
  auto backward = render(rev);
  return PathType(path.dimension(),
                  facets_less(backward, forward) ? std::move(backward) : std::move(forward));
}

PathClass classify(const PathType& path, int n) {
  const int d = path.dimension();
  const int k = path.length();
  if (n < 1 || n > kMaxLabels || (path.support() & ~first_labels(n)) != 0) {
    throw DomainError("path uses labels outside {1.." + std::to_string(n) + "}");
  }
  PathClass c{d, n, k, path.revisits(), n - path.labels_used()};
  if (c.m - c.l != k + d - n) {
    throw InvariantError("counting identity m - l = k + d - n violated: m=" + std::to_string(c.m) +
                         " l=" + std::to_string(c.l) + " k+d-n=" + std::to_string(k + d - n));
  }
  if (c.m > k - d) {
    throw InvariantError("revisit bound m <= k - d violated: m=" + std::to_string(c.m) +
                         " k-d=" + std::to_string(k - d));
  }
  if (c.l > n - 2 * d) {
    throw InvariantError("drop bound l <= n - 2d violated: l=" + std::to_string(c.l) +
                         " n-2d=" + std::to_string(n - 2 * d));
  }
  return c;
}

std::vector<PathType> enumerate_nonrevisiting(int d, int k) {
  require_enumerable(d, k);
  const LabelSet start = first_labels(d);
  std::set<PathType> found;
  std::vector<LabelSet> facets{start};
  facets.reserve(static_cast<std::size_t>(k) + 1);

  // Labels of F_0 that have not departed yet are interchangeable, so only the
  // smallest of them is ever chosen to depart (restricted-growth labeling).
  auto extend = [&](auto& self, LabelSet untouched, int next_label) -> void {
    const int t = static_cast<int>(facets.size()) - 1;
    const LabelSet current = facets.back();
    if (t == k) {
      if ((current & start) == 0) found.insert(canonicalize(PathType(d, facets)));
      return;
    }
    if (label_count(current & start) > k - t) return;
    for (LabelSet s = current; s != 0; s &= s - 1) {
      const int v = lowest_label(s);
      if (contains(untouched, v) && v != lowest_label(untouched)) continue;
      const LabelSet next = (current & ~label_bit(v)) | label_bit(next_label);
      bool chord = false;
      for (int i = 0; i < t && !chord; ++i) {
        chord = label_count(next & facets[static_cast<std::size_t>(i)]) >= d - 1;
      }
      if (chord) continue;
      facets.push_back(next);
      self(self, untouched & ~label_bit(v), next_label + 1);
      facets.pop_back();
    }
  };
  extend(extend, start, d + 1);
  return {found.begin(), found.end()};
}

std::vector<PathType> generate_revisits(std::span<const PathType> paths, int m_target) {
  std::vector<PathType> out;
  for (const PathType& parent : paths) {
    if (parent.revisits() != m_target - 1) {
      throw DomainError("generate_revisits expects paths with " + std::to_string(m_target - 1) +
                        " revisits, got " + std::to_string(parent.revisits()));
    }
    const auto& facets = parent.facets();
    const auto cols = columns_of(facets);
    const std::vector<int> labels = to_labels(parent.support());

    // Children are deduplicated per parent, up to relabeling only.
    std::set<PathType> children;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        const int keep = labels[i];
        const int drop = labels[j];
        if ((cols[static_cast<std::size_t>(keep)] & cols[static_cast<std::size_t>(drop)]) != 0) {
          continue;
        }
        std::vector<LabelSet> merged;
        merged.reserve(facets.size());
        for (LabelSet f : facets) {
          merged.push_back(contains(f, drop) ? (f & ~label_bit(drop)) | label_bit(keep) : f);
        }
        PathType child(parent.dimension(), std::move(merged));
        if (!is_admissible(child)) continue;
        children.insert(canonical_relabeling(child));
      }
    }
    for (const PathType& c : children) out.push_back(canonicalize(c));
  }
  std::stable_sort(out.begin(), out.end());
  return out;
}

std::map<ClassKey, ClassBucket> enumerate_all(int d, int n, int k) {
  require_enumerable(d, k);
  if (n < 2 * d) throw DomainError("end-disjoint paths need n >= 2d");
  if (n > kMaxLabels) throw DomainError("n exceeds the label capacity");

  std::map<ClassKey, ClassBucket> result;
  std::vector<PathType> level = enumerate_nonrevisiting(d, k);
  for (int m = 0; m <= k - d; ++m) {
    if (m > 0) level = generate_revisits(level, m);
    if (level.empty()) break;
    const int l = n - (d + k - m);
    if (l >= 0) result[{m, l}] = ClassBucket{level.size(), level};
  }
  return result;
}

std::map<ClassKey, std::size_t> reference_counts(int d, int n, int k) {
  struct Row {
    int d, n, k, m, l;
    std::size_t count;
  };
  static constexpr Row kRows[] = {
      {4, 10, 6, 0, 0, 15},   {4, 10, 6, 1, 1, 24},   {4, 10, 6, 2, 2, 16},
      {4, 11, 7, 0, 0, 50},   {4, 11, 7, 1, 1, 200},  {4, 11, 7, 2, 2, 354},
      {4, 11, 7, 3, 3, 96},   {4, 12, 8, 0, 0, 160},  {4, 12, 8, 1, 1, 1258},
      {4, 12, 8, 2, 2, 5172}, {4, 12, 8, 3, 3, 7398}, {4, 12, 8, 4, 4, 1512},
      {5, 11, 7, 1, 0, 98},   {5, 11, 7, 2, 1, 98},   {5, 12, 8, 1, 0, 1079},
      {5, 12, 8, 2, 1, 3184}, {5, 12, 8, 3, 2, 2904}, {6, 12, 7, 1, 0, 11},
      {6, 13, 8, 1, 0, 293},  {6, 13, 8, 2, 1, 452},
  };
  std::map<ClassKey, std::size_t> out;
  for (const Row& r : kRows) {
    if (r.d == d && r.n == n && r.k == k) out[{r.m, r.l}] = r.count;
  }
  return out;
}

std::string path_to_json_line(const PathType& path, int n) {
  const PathClass c = classify(path, n);
  nlohmann::ordered_json j;
  j["d"] = c.d;
  j["n"] = c.n;
  j["k"] = c.k;
  j["m"] = c.m;
  j["l"] = c.l;
  j["facets"] = path.facet_labels();
  return j.dump();
}

PathRecord path_from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed path record: ") + e.what());
  }
  for (const char* key : {"d", "n", "k", "m", "l", "facets"}) {
    if (!j.contains(key)) throw IntegrityError(std::string("path record lacks field '") + key + "'");
  }
  const int d = j.at("d").get<int>();
  const int n = j.at("n").get<int>();
  PathType path = PathType::from_labels(d, j.at("facets").get<std::vector<std::vector<int>>>());
  const PathClass c = classify(path, n);
  if (c.k != j.at("k").get<int>() || c.m != j.at("m").get<int>() || c.l != j.at("l").get<int>()) {
    throw IntegrityError("path record class fields disagree with its facets: " + line);
  }
  return PathRecord{c, std::move(path)};
}

void write_path_file(std::ostream& out, std::span<const PathType> paths, int n) {
  for (const PathType& p : paths) out << path_to_json_line(p, n) << '\n';
}

std::vector<PathRecord> read_path_file(std::istream& in) {
  std::vector<PathRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(path_from_json_line(line));
  }
  return out;
}

}  // namespace chiropath
