#include "chiropath/chirotope.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "chiropath/error.hpp"

namespace chiropath {

namespace {

struct Overflow {};

// Fraction-free Gaussian elimination; every intermediate is a minor of the
// input, so the division is exact.
template <typename Int, typename Ops>
int bareiss_sign(std::vector<std::vector<Int>> m, Ops ops) {
  const std::size_t size = m.size();
  int sign = 1;
  Int prev = 1;
  for (std::size_t k = 0; k + 1 < size; ++k) {
    if (m[k][k] == 0) {
      std::size_t pivot = k + 1;
      while (pivot < size && m[pivot][k] == 0) ++pivot;
      if (pivot == size) return 0;
      std::swap(m[k], m[pivot]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < size; ++i) {
      for (std::size_t j = k + 1; j < size; ++j) {
        m[i][j] = ops.sub(ops.mul(m[i][j], m[k][k]), ops.mul(m[i][k], m[k][j])) / prev;
      }
    }
    prev = m[k][k];
  }
  const Int& last = m[size - 1][size - 1];
  if (last == 0) return 0;
  return last > 0 ? sign : -sign;
}

struct CheckedOps {
  static __int128 mul(__int128 a, __int128 b) {
    __int128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw Overflow{};
    return r;
  }
  static __int128 sub(__int128 a, __int128 b) {
    __int128 r;
    if (__builtin_sub_overflow(a, b, &r)) throw Overflow{};
    return r;
  }
};

struct BigOps {
  using Big = boost::multiprecision::cpp_int;
  static Big mul(const Big& a, const Big& b) { return a * b; }
  static Big sub(const Big& a, const Big& b) { return a - b; }
};

}  // namespace

std::uint64_t binomial(int n, int r) {
  if (r < 0 || n < 0 || r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t out = 1;
  for (int i = 1; i <= r; ++i) out = out * static_cast<std::uint64_t>(n - r + i) / static_cast<std::uint64_t>(i);
  return out;
}

std::vector<LabelSet> lex_subsets(int n, int r) {
  std::vector<LabelSet> out;
  if (r < 0 || r > n) return out;
  out.reserve(binomial(n, r));
  std::vector<int> cur(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) cur[static_cast<std::size_t>(i)] = i + 1;
  while (true) {
    LabelSet s = 0;
    for (int v : cur) s |= label_bit(v);
    out.push_back(s);
    int i = r - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - r + i + 1) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < r; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

BasisIndexer::BasisIndexer(int n, int r) : n_(n), r_(r) {
  if (n < 0 || n > kMaxLabels || r < 0 || r > n) {
    throw DomainError("basis indexer needs 0 <= r <= n <= 32 (n=" + std::to_string(n) +
                      ", r=" + std::to_string(r) + ")");
  }
  subsets_ = lex_subsets(n, r);
  binom_.assign(static_cast<std::size_t>(n) + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(r) + 1));
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= r; ++b) binom_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = binomial(a, b);
  }
}

std::size_t BasisIndexer::rank(LabelSet subset) const {
  if (label_count(subset) != r_ || (subset & ~first_labels(n_)) != 0) {
    throw DomainError("not an " + std::to_string(r_) + "-subset of {1.." + std::to_string(n_) +
                      "}: {" + format_labels(subset, ',') + "}");
  }
  std::uint64_t index = 0;
  int prev = 0;
  int i = 1;
  for (int s : to_labels(subset)) {
    for (int j = prev + 1; j < s; ++j) {
      index += binom_[static_cast<std::size_t>(n_ - j)][static_cast<std::size_t>(r_ - i)];
    }
    prev = s;
    ++i;
  }
  return static_cast<std::size_t>(index);
}

int permutation_sign(std::span<const int> tuple) {
  int inversions = 0;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    for (std::size_t j = i + 1; j < tuple.size(); ++j) {
      if (tuple[i] == tuple[j]) return 0;
      if (tuple[i] > tuple[j]) ++inversions;
    }
  }
  return inversions % 2 == 0 ? 1 : -1;
}

Chirotope::Chirotope(int d, int n, std::vector<std::int8_t> signs)
    : d_(d), indexer_(n, d + 1), signs_(std::move(signs)) {
  if (signs_.size() != indexer_.size()) {
    throw DomainError("chirotope of rank " + std::to_string(d + 1) + " on " + std::to_string(n) +
                      " points needs " + std::to_string(indexer_.size()) + " signs, got " +
                      std::to_string(signs_.size()));
  }
  for (std::int8_t s : signs_) {
    if (s != 1 && s != -1) throw DomainError("uniform chirotope signs must be +1 or -1");
  }
}

Chirotope Chirotope::alternating(int d, int n) {
  return Chirotope(d, n, std::vector<std::int8_t>(binomial(n, d + 1), 1));
}

int Chirotope::sign(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != rank()) {
    throw DomainError("chirotope expects " + std::to_string(rank()) + "-tuples");
  }
  const int parity = permutation_sign(tuple);
  if (parity == 0) return 0;
  LabelSet basis = 0;
  for (int v : tuple) {
    if (v < 1 || v > ground_size()) throw DomainError("label out of range: " + std::to_string(v));
    basis |= label_bit(v);
  }
  return parity * basis_sign(basis);
}

Chirotope Chirotope::negated() const {
  std::vector<std::int8_t> flipped(signs_);
  for (auto& s : flipped) s = static_cast<std::int8_t>(-s);
  return Chirotope(d_, indexer_.n(), std::move(flipped));
}

std::string Chirotope::to_text() const {
  std::string out = "chirotope " + std::to_string(d_) + " " + std::to_string(indexer_.n()) + "\n";
  for (std::int8_t s : signs_) out += s > 0 ? '+' : '-';
  out += '\n';
  return out;
}

Chirotope Chirotope::from_text(std::istream& in) {
  std::string tag;
  int d = 0;
  int n = 0;
  if (!(in >> tag >> d >> n) || tag != "chirotope") {
    throw IntegrityError("chirotope text must start with 'chirotope d n'");
  }
  std::string body;
  in >> body;
  std::vector<std::int8_t> signs;
  signs.reserve(body.size());
  for (char c : body) {
    if (c == '+') signs.push_back(1);
    else if (c == '-') signs.push_back(-1);
    else throw IntegrityError(std::string("unexpected chirotope sign character '") + c + "'");
  }
  try {
    return Chirotope(d, n, std::move(signs));
  } catch (const DomainError& e) {
    throw IntegrityError(std::string("bad chirotope text: ") + e.what());
  }
}

std::uint64_t gp_triple_count(int d, int n) {
  if (n < d + 3) return 0;
  return binomial(n, d + 3) * binomial(d + 3, 4);
}

std::vector<GPTriple> gp_triples(int d, int n) {
  std::vector<GPTriple> out;
  out.reserve(gp_triple_count(d, n));
  for_each_gp_triple(d, n, [&](const GPTriple& t) { out.push_back(t); });
  return out;
}

std::array<int, 3> gp_values(const Chirotope& chi, const GPTriple& triple) {
  std::array<int, 3> v{};
  for (std::size_t i = 0; i < 3; ++i) {
    const GPTerm& t = triple.terms[i];
    v[i] = t.factor * chi.basis_sign(t.basis_a) * chi.basis_sign(t.basis_b);
  }
  return v;
}

bool check_gp(const Chirotope& chi) {
  bool ok = true;
  for_each_gp_triple(chi.dimension(), chi.ground_size(), [&](const GPTriple& t) {
    if (!ok) return;
    const auto v = gp_values(chi, t);
    ok = !(v[0] == v[1] && v[1] == v[2]);
  });
  return ok;
}

int determinant_sign(const PointMatrix& rows) {
  const std::size_t size = rows.size();
  for (const auto& row : rows) {
    if (row.size() != size) throw DomainError("determinant needs a square matrix");
  }
  if (size == 0) return 1;
  try {
    std::vector<std::vector<__int128>> m(size, std::vector<__int128>(size));
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) m[i][j] = rows[i][j];
    }
    return bareiss_sign(std::move(m), CheckedOps{});
  } catch (const Overflow&) {
    std::vector<std::vector<BigOps::Big>> m(size, std::vector<BigOps::Big>(size));
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) m[i][j] = rows[i][j];
    }
    return bareiss_sign(std::move(m), BigOps{});
  }
}

Chirotope chirotope_from_points(const PointMatrix& points) {
  if (points.empty()) throw DomainError("point configuration is empty");
  const std::size_t cols = points.front().size();
  for (const auto& p : points) {
    if (p.size() != cols) throw DomainError("points must all have the same number of coordinates");
  }
  if (cols < 2) throw DomainError("homogeneous coordinates need at least two entries");
  const int d = static_cast<int>(cols) - 1;
  const int n = static_cast<int>(points.size());
  BasisIndexer indexer(n, d + 1);
  std::vector<std::int8_t> signs;
  signs.reserve(indexer.size());
  PointMatrix minor(cols);
  for (LabelSet basis : indexer.subsets()) {
    std::size_t row = 0;
    for (int v : to_labels(basis)) minor[row++] = points[static_cast<std::size_t>(v - 1)];
    const int s = determinant_sign(minor);
    if (s == 0) throw DegeneracyError("flat simplex on labels (" + format_labels(basis, ',') + ")");
    signs.push_back(static_cast<std::int8_t>(s));
  }
  return Chirotope(d, n, std::move(signs));
}

int cofacet_sign(const Chirotope& chi, LabelSet s, int w) {
  const int stored = chi.basis_sign(s | label_bit(w));
  return count_above(s, w) % 2 == 0 ? stored : -stored;
}

std::vector<LabelSet> facets_of(const Chirotope& chi) {
  const int n = chi.ground_size();
  const LabelSet ground = first_labels(n);
  std::vector<LabelSet> out;
  for (LabelSet s : lex_subsets(n, chi.dimension())) {
    int side = 0;
    bool facet = true;
    for (LabelSet rest = ground & ~s; rest != 0 && facet; rest &= rest - 1) {
      const int sign = cofacet_sign(chi, s, lowest_label(rest));
      if (side == 0) side = sign;
      facet = sign == side;
    }
    if (facet) out.push_back(s);
  }
  return out;
}

LabelSet interior_labels(const Chirotope& chi) {
  LabelSet on_boundary = 0;
  for (LabelSet f : facets_of(chi)) on_boundary |= f;
  return first_labels(chi.ground_size()) & ~on_boundary;
}

std::vector<LabelSet> shortest_facet_path(std::span<const LabelSet> facets, LabelSet from,
                                          LabelSet to) {
  const auto find = [&](LabelSet f) -> std::size_t {
    const auto it = std::find(facets.begin(), facets.end(), f);
    if (it == facets.end()) throw DomainError("{" + format_labels(f, ',') + "} is not a facet");
    return static_cast<std::size_t>(it - facets.begin());
  };
  const std::size_t source = find(from);
  const std::size_t target = find(to);
  const int ridge = label_count(from) - 1;
  std::vector<std::ptrdiff_t> parent(facets.size(), -1);
  std::vector<bool> seen(facets.size(), false);
  std::deque<std::size_t> queue{source};
  seen[source] = true;
  while (!queue.empty() && !seen[target]) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    for (std::size_t next = 0; next < facets.size(); ++next) {
      if (seen[next] || label_count(facets[cur] & facets[next]) != ridge) continue;
      seen[next] = true;
      parent[next] = static_cast<std::ptrdiff_t>(cur);
      queue.push_back(next);
    }
  }
  if (!seen[target]) return {};
  std::vector<LabelSet> path;
  for (std::ptrdiff_t at = static_cast<std::ptrdiff_t>(target); at != -1;
       at = at == static_cast<std::ptrdiff_t>(source) ? -1 : parent[static_cast<std::size_t>(at)]) {
    path.push_back(facets[static_cast<std::size_t>(at)]);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<int> facet_distance(std::span<const LabelSet> facets, LabelSet from, LabelSet to) {
  const auto path = shortest_facet_path(facets, from, to);
  if (path.empty()) return std::nullopt;
  return static_cast<int>(path.size()) - 1;
}

std::optional<int> facet_distance(const Chirotope& chi, LabelSet from, LabelSet to) {
  const auto facets = facets_of(chi);
  return facet_distance(facets, from, to);
}

}  // namespace chiropath
