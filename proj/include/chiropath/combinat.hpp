#pragma once

// Combinatorial facet-paths on simplicial polytopes.
//
// A path is a sequence of d-subsets F_0..F_k of vertex labels in which
// consecutive facets share a ridge (d-1 labels). The generator works on the
// "types" of end-disjoint paths that could be shortest: no two
// non-consecutive facets of the path share a ridge, and F_0, F_k are
// disjoint. Non-revisiting types are produced directly; types with m
// revisits are derived from those with m-1 by identifying two vertices.

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chiropath/labels.hpp"

namespace chiropath {

struct PathClass {
  int d = 0;
  int n = 0;
  int k = 0;
  int m = 0;  // revisits: entries of a label that appeared earlier
  int l = 0;  // drops: labels of {1..n} never used

  bool operator==(const PathClass&) const = default;
};

class PathType {
 public:
  PathType() = default;
  PathType(int d, std::vector<LabelSet> facets);

  // Convenience for tests and file input: facets as 1-based label lists.
  static PathType from_labels(int d, const std::vector<std::vector<int>>& facets);

  int dimension() const { return d_; }
  int length() const { return static_cast<int>(facets_.size()) - 1; }
  const std::vector<LabelSet>& facets() const { return facets_; }
  LabelSet facet(int i) const { return facets_[static_cast<std::size_t>(i)]; }
  LabelSet support() const;
  int labels_used() const { return label_count(support()); }
  int revisits() const;

  PathType reversed() const;
  std::vector<std::vector<int>> facet_labels() const;
  std::string to_string() const;

  // Lexicographic order on the facet sequence (facets compared as sorted tuples).
  std::strong_ordering operator<=>(const PathType& other) const;
  bool operator==(const PathType& other) const = default;

 private:
  int d_ = 0;
  std::vector<LabelSet> facets_;
};

// Consecutive facets share exactly d-1 labels, every facet has d labels.
bool is_facet_sequence(const PathType& path);

// True iff the ridge graph on the path's own facets has an F_0 -> F_k walk
// shorter than k. Requires a facet sequence.
bool has_structural_shortcut(const PathType& path);

// Facet sequence, end-disjoint, no structural shortcut.
bool is_admissible(const PathType& path);

// Lexicographically least relabeling over both orientations, with labels
// assigned in first-appearance order. Idempotent; constant on
// relabel/reverse classes.
PathType canonicalize(const PathType& path);

// Same, keeping the orientation: constant on relabeling classes only.
PathType canonical_relabeling(const PathType& path);

PathClass classify(const PathType& path, int n);

std::vector<PathType> enumerate_nonrevisiting(int d, int k);

std::vector<PathType> generate_revisits(std::span<const PathType> paths, int m_target);

struct ClassBucket {
  std::size_t count = 0;
  std::vector<PathType> paths;
};

using ClassKey = std::pair<int, int>;  // (m, l)

std::map<ClassKey, ClassBucket> enumerate_all(int d, int n, int k);

// Published counts of path types for the (d, n, k) triples the generator is
// validated against; empty when no reference exists.
std::map<ClassKey, std::size_t> reference_counts(int d, int n, int k);

// Path files: one JSON object per line, {"d","n","k","m","l","facets"}.
struct PathRecord {
  PathClass cls;
  PathType path;
};

std::string path_to_json_line(const PathType& path, int n);
PathRecord path_from_json_line(const std::string& line);
void write_path_file(std::ostream& out, std::span<const PathType> paths, int n);
std::vector<PathRecord> read_path_file(std::istream& in);

}  // namespace chiropath
