#pragma once

// CNF encoding of "a uniform chirotope of rank d+1 on {1..n} has the given
// facet-path on its boundary as a shortest path between its end facets".

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chiropath/chirotope.hpp"
#include "chiropath/combinat.hpp"

namespace chiropath {

enum class ClauseGroup : std::uint8_t { Axiom, FacetDef, Path, Symmetry, Distance, Extra };

const char* group_name(ClauseGroup group);

// Variable layout: sign variables in basis order, then one facet variable per
// d-subset, then layer variables (step-major), then auxiliaries.
class VarMap {
 public:
  VarMap() = default;
  VarMap(int d, int n, int layers);

  int dimension() const { return d_; }
  int ground_size() const { return n_; }
  int layers() const { return layers_; }

  int sign_count() const { return static_cast<int>(bases_.size()); }
  int facet_count() const { return static_cast<int>(subsets_.size()); }
  int layer_count() const { return facet_count() * layers_; }
  int first_aux() const { return 1 + sign_count() + facet_count() + layer_count(); }

  int sign_var(LabelSet basis) const { return 1 + static_cast<int>(bases_.rank(basis)); }
  int facet_var(LabelSet subset) const {
    return 1 + sign_count() + static_cast<int>(subsets_.rank(subset));
  }
  int layer_var(LabelSet subset, int t) const;

  bool is_sign_var(int var) const { return var >= 1 && var <= sign_count(); }
  bool is_facet_var(int var) const { return var > sign_count() && var <= sign_count() + facet_count(); }
  bool is_layer_var(int var) const { return var > sign_count() + facet_count() && var < first_aux(); }

  LabelSet basis_of(int sign_variable) const { return bases_.unrank(static_cast<std::size_t>(sign_variable - 1)); }
  LabelSet subset_of(int facet_variable) const {
    return subsets_.unrank(static_cast<std::size_t>(facet_variable - 1 - sign_count()));
  }

  const BasisIndexer& bases() const { return bases_; }
  const BasisIndexer& subsets() const { return subsets_; }

 private:
  int d_ = 0;
  int n_ = 0;
  int layers_ = 0;
  BasisIndexer bases_{0, 0};
  BasisIndexer subsets_{0, 0};
};

class CnfFormula {
 public:
  CnfFormula() = default;
  CnfFormula(VarMap varmap, PathType path, int distance_bound);

  const VarMap& varmap() const { return varmap_; }
  const PathType& path() const { return path_; }
  int distance_bound() const { return distance_bound_; }
  int num_vars() const { return num_vars_; }
  std::size_t num_clauses() const { return groups_.size(); }

  std::span<const int> clause(std::size_t i) const {
    return {literals_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  ClauseGroup group(std::size_t i) const { return groups_[i]; }
  std::size_t group_size(ClauseGroup group) const;

  int new_aux() { return ++num_vars_; }
  void add_clause(ClauseGroup group, std::span<const int> lits);
  void add_clause(ClauseGroup group, std::initializer_list<int> lits) {
    add_clause(group, std::span<const int>(lits.begin(), lits.size()));
  }
  // Used by the DIMACS reader when the header declares unused variables.
  void reserve_vars(int count);

 private:
  VarMap varmap_;
  PathType path_;
  int distance_bound_ = 0;
  int num_vars_ = 0;
  std::vector<int> literals_;
  std::vector<std::size_t> offsets_{0};
  std::vector<ClauseGroup> groups_;
};

void encode_gp_axioms(CnfFormula& cnf);
void encode_facet_definitions(CnfFormula& cnf);
void encode_path(CnfFormula& cnf);
void encode_min_distance(CnfFormula& cnf);

struct EncodeOptions {
  // Facet distance forced between the end facets; defaults to the path length.
  std::optional<int> distance_bound;
};

CnfFormula encode_instance(const PathType& path, int n, const EncodeOptions& options = {});

// The basis whose sign the symmetry clause fixes to +1.
LabelSet symmetry_basis(const PathType& path, int n);

// One literal per sign variable, fixing it to chi's stored sign.
std::vector<int> assume_chirotope(const CnfFormula& cnf, const Chirotope& chi);

// chi or its negation, whichever agrees with the symmetry clause.
Chirotope orient_for(const CnfFormula& cnf, const Chirotope& chi);

// Extra unit clauses (cube literals, assumptions) are appended after the
// formula's own clauses and counted in the header.
void write_dimacs(const CnfFormula& cnf, std::ostream& out, std::span<const int> units = {});
std::string to_dimacs(const CnfFormula& cnf, std::span<const int> units = {});
CnfFormula read_dimacs(std::istream& in);

// sha256 of the serialized formula (no extra units).
std::string instance_digest(const CnfFormula& cnf);

// Model decoding: model[v] is the value of variable v (index 0 unused).
using Model = std::vector<bool>;

Chirotope decode_chirotope(const CnfFormula& cnf, const Model& model);
std::vector<LabelSet> decode_facets(const CnfFormula& cnf, const Model& model);

}  // namespace chiropath
