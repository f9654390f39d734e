#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chiropath/labels.hpp"

namespace chiropath {

std::uint64_t binomial(int n, int r);

// Dense lexicographic indexing of the r-subsets of {1..n}.
class BasisIndexer {
 public:
  BasisIndexer(int n, int r);

  int n() const { return n_; }
  int r() const { return r_; }
  std::size_t size() const { return subsets_.size(); }

  std::size_t rank(LabelSet subset) const;
  LabelSet unrank(std::size_t index) const { return subsets_.at(index); }
  const std::vector<LabelSet>& subsets() const { return subsets_; }

 private:
  int n_;
  int r_;
  std::vector<LabelSet> subsets_;
  std::vector<std::vector<std::uint64_t>> binom_;
};

// Every r-subset of {1..n} in lexicographic order.
std::vector<LabelSet> lex_subsets(int n, int r);

// Sign of the permutation sorting a tuple of distinct labels; 0 on repeats.
int permutation_sign(std::span<const int> tuple);

// Uniform chirotope of rank d+1 on {1..n}, stored on sorted bases.
class Chirotope {
 public:
  Chirotope(int d, int n, std::vector<std::int8_t> signs);

  static Chirotope alternating(int d, int n);  // all stored signs +1

  int dimension() const { return d_; }
  int rank() const { return d_ + 1; }
  int ground_size() const { return indexer_.n(); }
  const BasisIndexer& indexer() const { return indexer_; }
  const std::vector<std::int8_t>& signs() const { return signs_; }

  int basis_sign(std::size_t index) const { return signs_[index]; }
  int basis_sign(LabelSet basis) const { return signs_[indexer_.rank(basis)]; }

  // Alternating extension to arbitrary (d+1)-tuples; 0 for repeated labels.
  int sign(std::span<const int> tuple) const;

  Chirotope negated() const;

  std::string to_text() const;
  static Chirotope from_text(std::istream& in);

  bool operator==(const Chirotope& other) const {
    return d_ == other.d_ && indexer_.n() == other.indexer_.n() && signs_ == other.signs_;
  }

 private:
  int d_;
  BasisIndexer indexer_;
  std::vector<std::int8_t> signs_;
};

// One three-term Grassmann-Plucker sign condition: for X a (d-1)-set and
// Y = {y1<y2<y3<y4} disjoint from it,
//   s1 =  chi(X,y1,y2) chi(X,y3,y4)
//   s2 = -chi(X,y1,y3) chi(X,y2,y4)
//   s3 =  chi(X,y1,y4) chi(X,y2,y3)
// must take both values -1 and +1. Each term is factor * (stored sign of
// basis_a) * (stored sign of basis_b).
struct GPTerm {
  LabelSet basis_a = 0;
  LabelSet basis_b = 0;
  int factor = 1;
};

struct GPTriple {
  LabelSet x = 0;
  LabelSet y = 0;
  GPTerm terms[3];
};

std::uint64_t gp_triple_count(int d, int n);
std::vector<GPTriple> gp_triples(int d, int n);

template <typename Fn>
void for_each_gp_triple(int d, int n, Fn&& fn);

// Values (s1, s2, s3) of one triple under a chirotope.
std::array<int, 3> gp_values(const Chirotope& chi, const GPTriple& triple);
bool check_gp(const Chirotope& chi);

// Integer point configuration; rows are homogeneous coordinates.
using PointMatrix = std::vector<std::vector<std::int64_t>>;

// Exact sign of a square integer determinant.
int determinant_sign(const PointMatrix& rows);

Chirotope chirotope_from_points(const PointMatrix& points);

// Orientation of the cofacet label w relative to the d-set s: the sign of
// chi(s_1..s_d, w) with s sorted.
int cofacet_sign(const Chirotope& chi, LabelSet s, int w);

std::vector<LabelSet> facets_of(const Chirotope& chi);

// Labels lying on no facet (reporting only).
LabelSet interior_labels(const Chirotope& chi);

// Facet graph: facets adjacent when they share d-1 labels.
std::optional<int> facet_distance(std::span<const LabelSet> facets, LabelSet from, LabelSet to);
std::optional<int> facet_distance(const Chirotope& chi, LabelSet from, LabelSet to);

// One shortest facet-path from `from` to `to` (inclusive), empty if none.
std::vector<LabelSet> shortest_facet_path(std::span<const LabelSet> facets, LabelSet from,
                                          LabelSet to);

// ---------------------------------------------------------------------------

template <typename Fn>
void for_each_gp_triple(int d, int n, Fn&& fn) {
  if (d < 1 || n < d + 3) return;
  for (LabelSet z : lex_subsets(n, d + 3)) {
    const std::vector<int> zl = to_labels(z);
    for (LabelSet ysel : lex_subsets(d + 3, 4)) {
      LabelSet y = 0;
      for (int p : to_labels(ysel)) y |= label_bit(zl[static_cast<std::size_t>(p - 1)]);
      const LabelSet x = z & ~y;
      const std::vector<int> yl = to_labels(y);
      auto term = [&](int i, int j, int k, int l, int sign) {
        const int yi = yl[static_cast<std::size_t>(i)], yj = yl[static_cast<std::size_t>(j)];
        const int yk = yl[static_cast<std::size_t>(k)], ym = yl[static_cast<std::size_t>(l)];
        const int parity = count_above(x, yi) + count_above(x, yj) + count_above(x, yk) +
                           count_above(x, ym);
        return GPTerm{x | label_bit(yi) | label_bit(yj), x | label_bit(yk) | label_bit(ym),
                      (parity % 2 == 0 ? 1 : -1) * sign};
      };
      GPTriple t{x, y, {term(0, 1, 2, 3, 1), term(0, 2, 1, 3, -1), term(0, 3, 1, 2, 1)}};
      fn(t);
    }
  }
}

}  // namespace chiropath
