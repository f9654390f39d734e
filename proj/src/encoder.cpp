#include "chiropath/encoder.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "chiropath/digest.hpp"
#include "chiropath/error.hpp"

namespace chiropath {

namespace {

constexpr ClauseGroup kGroups[] = {ClauseGroup::Axiom, ClauseGroup::FacetDef, ClauseGroup::Path,
                                   ClauseGroup::Symmetry, ClauseGroup::Distance, ClauseGroup::Extra};

ClauseGroup group_from_name(const std::string& name) {
  for (ClauseGroup g : kGroups) {
    if (name == group_name(g)) return g;
  }
  throw IntegrityError("unknown clause group '" + name + "'");
}

int cofacet_literal(const VarMap& vm, LabelSet s, int w) {
  const int var = vm.sign_var(s | label_bit(w));
  return count_above(s, w) % 2 == 0 ? var : -var;
}

void append_int(std::string& out, long long value) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, res.ptr);
}

void append_labels(std::string& out, LabelSet s, char sep) {
  bool first = true;
  for (int v : to_labels(s)) {
    if (!first) out += sep;
    first = false;
    append_int(out, v);
  }
}

std::vector<int> parse_ints(std::istringstream& in) {
  std::vector<int> out;
  int v = 0;
  while (in >> v) out.push_back(v);
  return out;
}

LabelSet parse_facet(const std::string& token) {
  LabelSet s = 0;
  std::size_t pos = 0;
  while (pos < token.size()) {
    std::size_t next = token.find(',', pos);
    if (next == std::string::npos) next = token.size();
    int v = 0;
    const auto res = std::from_chars(token.data() + pos, token.data() + next, v);
    if (res.ec != std::errc{} || res.ptr != token.data() + next || v < 1 || v > kMaxLabels) {
      throw IntegrityError("bad facet token in DIMACS path comment: " + token);
    }
    s |= label_bit(v);
    pos = next + 1;
  }
  return s;
}

}  // namespace

const char* group_name(ClauseGroup group) {
  switch (group) {
    case ClauseGroup::Axiom: return "axiom";
    case ClauseGroup::FacetDef: return "facet-def";
    case ClauseGroup::Path: return "path";
    case ClauseGroup::Symmetry: return "symmetry";
    case ClauseGroup::Distance: return "distance";
    case ClauseGroup::Extra: return "extra";
  }
  return "?";
}

VarMap::VarMap(int d, int n, int layers)
    : d_(d), n_(n), layers_(layers), bases_(n, d + 1), subsets_(n, d) {
  if (layers < 0) throw DomainError("negative layer count");
}

int VarMap::layer_var(LabelSet subset, int t) const {
  if (t < 0 || t >= layers_) {
    throw DomainError("layer " + std::to_string(t) + " outside [0," + std::to_string(layers_) + ")");
  }
  return 1 + sign_count() + facet_count() + t * facet_count() + static_cast<int>(subsets_.rank(subset));
}

CnfFormula::CnfFormula(VarMap varmap, PathType path, int distance_bound)
    : varmap_(std::move(varmap)),
      path_(std::move(path)),
      distance_bound_(distance_bound),
      num_vars_(varmap_.first_aux() - 1) {}

std::size_t CnfFormula::group_size(ClauseGroup group) const {
  return static_cast<std::size_t>(std::count(groups_.begin(), groups_.end(), group));
}

void CnfFormula::add_clause(ClauseGroup group, std::span<const int> lits) {
  if (lits.empty()) throw InvariantError("empty clause in group " + std::string(group_name(group)));
  for (int lit : lits) {
    if (lit == 0 || lit > num_vars_ || -lit > num_vars_) {
      throw InvariantError("literal " + std::to_string(lit) + " outside [1," +
                           std::to_string(num_vars_) + "]");
    }
  }
  literals_.insert(literals_.end(), lits.begin(), lits.end());
  offsets_.push_back(literals_.size());
  groups_.push_back(group);
}

void CnfFormula::reserve_vars(int count) { num_vars_ = std::max(num_vars_, count); }

void encode_gp_axioms(CnfFormula& cnf) {
  const VarMap& vm = cnf.varmap();
  for_each_gp_triple(vm.dimension(), vm.ground_size(), [&](const GPTriple& t) {
    int p[3];
    for (int i = 0; i < 3; ++i) {
      const GPTerm& term = t.terms[i];
      const int a = vm.sign_var(term.basis_a);
      const int b = vm.sign_var(term.basis_b);
      // q <-> (a <-> b); the product term is +1 iff q == (factor > 0).
      const int q = cnf.new_aux();
      cnf.add_clause(ClauseGroup::Axiom, {-q, -a, b});
      cnf.add_clause(ClauseGroup::Axiom, {-q, a, -b});
      cnf.add_clause(ClauseGroup::Axiom, {q, a, b});
      cnf.add_clause(ClauseGroup::Axiom, {q, -a, -b});
      p[i] = term.factor > 0 ? q : -q;
    }
    cnf.add_clause(ClauseGroup::Axiom, {p[0], p[1], p[2]});
    cnf.add_clause(ClauseGroup::Axiom, {-p[0], -p[1], -p[2]});
  });
}

void encode_facet_definitions(CnfFormula& cnf) {
  const VarMap& vm = cnf.varmap();
  const LabelSet ground = first_labels(vm.ground_size());
  std::vector<int> lits;
  std::vector<int> big;
  for (LabelSet s : vm.subsets().subsets()) {
    lits.clear();
    for (LabelSet rest = ground & ~s; rest != 0; rest &= rest - 1) {
      lits.push_back(cofacet_literal(vm, s, lowest_label(rest)));
    }
    const int f = vm.facet_var(s);
    const int pos = cnf.new_aux();
    const int neg = cnf.new_aux();
    for (int side : {1, -1}) {
      const int ind = side > 0 ? pos : neg;
      big.assign(1, ind);
      for (int lit : lits) {
        cnf.add_clause(ClauseGroup::FacetDef, {-ind, side * lit});
        big.push_back(-side * lit);
      }
      cnf.add_clause(ClauseGroup::FacetDef, big);
    }
    cnf.add_clause(ClauseGroup::FacetDef, {-f, pos, neg});
    cnf.add_clause(ClauseGroup::FacetDef, {f, -pos});
    cnf.add_clause(ClauseGroup::FacetDef, {f, -neg});
  }
}

LabelSet symmetry_basis(const PathType& path, int n) {
  const LabelSet f0 = path.facet(0);
  const LabelSet free = first_labels(n) & ~f0;
  if (free == 0) throw DomainError("no label outside the first facet");
  return f0 | label_bit(lowest_label(free));
}

void encode_path(CnfFormula& cnf) {
  const VarMap& vm = cnf.varmap();
  for (LabelSet f : cnf.path().facets()) cnf.add_clause(ClauseGroup::Path, {vm.facet_var(f)});
  cnf.add_clause(ClauseGroup::Symmetry, {vm.sign_var(symmetry_basis(cnf.path(), vm.ground_size()))});
}

void encode_min_distance(CnfFormula& cnf) {
  const VarMap& vm = cnf.varmap();
  const int layers = vm.layers();
  const LabelSet first = cnf.path().facet(0);
  const LabelSet last = cnf.path().facet(cnf.path().length());
  const LabelSet ground = first_labels(vm.ground_size());
  cnf.add_clause(ClauseGroup::Distance, {vm.layer_var(first, 0)});
  for (int t = 1; t < layers; ++t) {
    for (LabelSet s : vm.subsets().subsets()) {
      const int here = vm.layer_var(s, t);
      cnf.add_clause(ClauseGroup::Distance, {-vm.layer_var(s, t - 1), here});
      const int f = vm.facet_var(s);
      for (LabelSet out = s; out != 0; out &= out - 1) {
        const LabelSet ridge = s & ~(out & (~out + 1));
        for (LabelSet in = ground & ~s; in != 0; in &= in - 1) {
          const LabelSet neighbour = ridge | (in & (~in + 1));
          cnf.add_clause(ClauseGroup::Distance, {-f, -vm.layer_var(neighbour, t - 1), here});
        }
      }
    }
  }
  for (int t = 0; t < layers; ++t) cnf.add_clause(ClauseGroup::Distance, {-vm.layer_var(last, t)});
}

CnfFormula encode_instance(const PathType& path, int n, const EncodeOptions& options) {
  const PathClass cls = classify(path, n);
  if (!is_facet_sequence(path)) throw DomainError("not a facet sequence: " + path.to_string());
  if ((path.facet(0) & path.facet(path.length())) != 0) {
    throw DomainError("end facets intersect: " + path.to_string());
  }
  const int bound = options.distance_bound.value_or(cls.k);
  if (bound < 1) throw DomainError("distance bound must be positive");
  CnfFormula cnf(VarMap(path.dimension(), n, bound), path, bound);
  encode_gp_axioms(cnf);
  encode_facet_definitions(cnf);
  encode_path(cnf);
  encode_min_distance(cnf);
  return cnf;
}

std::vector<int> assume_chirotope(const CnfFormula& cnf, const Chirotope& chi) {
  const VarMap& vm = cnf.varmap();
  if (chi.dimension() != vm.dimension() || chi.ground_size() != vm.ground_size()) {
    throw DomainError("chirotope (" + std::to_string(chi.dimension()) + "," +
                      std::to_string(chi.ground_size()) + ") does not match instance (" +
                      std::to_string(vm.dimension()) + "," + std::to_string(vm.ground_size()) + ")");
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(vm.sign_count()));
  for (int v = 1; v <= vm.sign_count(); ++v) {
    out.push_back(chi.basis_sign(static_cast<std::size_t>(v - 1)) > 0 ? v : -v);
  }
  return out;
}

Chirotope orient_for(const CnfFormula& cnf, const Chirotope& chi) {
  const LabelSet basis = symmetry_basis(cnf.path(), cnf.varmap().ground_size());
  return chi.basis_sign(basis) > 0 ? chi : chi.negated();
}

void write_dimacs(const CnfFormula& cnf, std::ostream& out, std::span<const int> units) {
  std::string buf;
  buf.reserve(1 << 20);
  const auto flush = [&] {
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  };
  const VarMap& vm = cnf.varmap();
  if (vm.dimension() > 0) {
    const PathType& path = cnf.path();
    buf += "c chiropath ";
    append_int(buf, vm.dimension());
    buf += ' ';
    append_int(buf, vm.ground_size());
    buf += ' ';
    append_int(buf, path.length());
    buf += ' ';
    append_int(buf, cnf.distance_bound());
    buf += "\nc path";
    for (LabelSet f : path.facets()) {
      buf += ' ';
      append_labels(buf, f, ',');
    }
    buf += '\n';
    for (ClauseGroup g : kGroups) {
      if (g == ClauseGroup::Extra) continue;
      buf += "c group ";
      buf += group_name(g);
      buf += ' ';
      append_int(buf, static_cast<long long>(cnf.group_size(g)));
      buf += '\n';
    }
    for (int v = 1; v <= vm.sign_count(); ++v) {
      buf += "c s ";
      append_int(buf, v);
      buf += ' ';
      append_labels(buf, vm.basis_of(v), ' ');
      buf += '\n';
    }
    for (LabelSet s : vm.subsets().subsets()) {
      buf += "c f ";
      append_int(buf, vm.facet_var(s));
      buf += ' ';
      append_labels(buf, s, ' ');
      buf += '\n';
    }
    for (int t = 0; t < vm.layers(); ++t) {
      for (LabelSet s : vm.subsets().subsets()) {
        buf += "c l ";
        append_int(buf, vm.layer_var(s, t));
        buf += ' ';
        append_labels(buf, s, ' ');
        buf += ' ';
        append_int(buf, t);
        buf += '\n';
      }
      flush();
    }
  }
  buf += "p cnf ";
  append_int(buf, cnf.num_vars());
  buf += ' ';
  append_int(buf, static_cast<long long>(cnf.num_clauses() + units.size()));
  buf += '\n';
  for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
    for (int lit : cnf.clause(i)) {
      append_int(buf, lit);
      buf += ' ';
    }
    buf += "0\n";
    if (buf.size() > (1 << 20)) flush();
  }
  for (int lit : units) {
    if (lit == 0 || lit > cnf.num_vars() || -lit > cnf.num_vars()) {
      throw DomainError("unit literal " + std::to_string(lit) + " outside the instance");
    }
    append_int(buf, lit);
    buf += " 0\n";
  }
  flush();
  if (!out) throw std::ios_base::failure("writing DIMACS failed");
}

std::string to_dimacs(const CnfFormula& cnf, std::span<const int> units) {
  std::ostringstream out;
  write_dimacs(cnf, out, units);
  return std::move(out).str();
}

CnfFormula read_dimacs(std::istream& in) {
  std::string line;
  int d = 0;
  int n = 0;
  int k = 0;
  int bound = 0;
  std::vector<LabelSet> facets;
  std::vector<std::pair<ClauseGroup, std::size_t>> declared;
  std::vector<std::vector<int>> comments_s;
  std::vector<std::vector<int>> comments_f;
  std::vector<std::vector<int>> comments_l;
  long long header_vars = -1;
  long long header_clauses = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "c") {
      std::string kind;
      ls >> kind;
      if (kind == "chiropath") {
        ls >> d >> n >> k >> bound;
      } else if (kind == "path") {
        std::string token;
        while (ls >> token) facets.push_back(parse_facet(token));
      } else if (kind == "group") {
        std::string name;
        std::size_t count = 0;
        ls >> name >> count;
        declared.emplace_back(group_from_name(name), count);
      } else if (kind == "s") {
        comments_s.push_back(parse_ints(ls));
      } else if (kind == "f") {
        comments_f.push_back(parse_ints(ls));
      } else if (kind == "l") {
        comments_l.push_back(parse_ints(ls));
      }
      continue;
    }
    if (tag == "p") {
      std::string fmt;
      ls >> fmt >> header_vars >> header_clauses;
      if (fmt != "cnf" || header_vars < 0 || header_clauses < 0) {
        throw IntegrityError("bad DIMACS header: " + line);
      }
      break;
    }
    throw IntegrityError("unexpected line before DIMACS header: " + line);
  }
  if (header_vars < 0) throw IntegrityError("missing DIMACS header");

  CnfFormula cnf;
  if (d > 0) {
    PathType path(d, facets);
    if (path.length() != k) throw IntegrityError("path comment does not match declared length");
    cnf = CnfFormula(VarMap(d, n, bound), path, bound);
    const VarMap& vm = cnf.varmap();
    if (static_cast<int>(comments_s.size()) != vm.sign_count() ||
        static_cast<int>(comments_f.size()) != vm.facet_count() ||
        static_cast<int>(comments_l.size()) != vm.layer_count()) {
      throw IntegrityError("variable map comments are incomplete");
    }
    for (const auto& c : comments_s) {
      if (c.size() != static_cast<std::size_t>(d + 2) ||
          vm.sign_var(from_labels({c.begin() + 1, c.end()})) != c[0]) {
        throw IntegrityError("sign variable comment disagrees with the layout");
      }
    }
    for (const auto& c : comments_f) {
      if (c.size() != static_cast<std::size_t>(d + 1) ||
          vm.facet_var(from_labels({c.begin() + 1, c.end()})) != c[0]) {
        throw IntegrityError("facet variable comment disagrees with the layout");
      }
    }
    for (const auto& c : comments_l) {
      if (c.size() != static_cast<std::size_t>(d + 2) ||
          vm.layer_var(from_labels({c.begin() + 1, c.end() - 1}), c.back()) != c[0]) {
        throw IntegrityError("layer variable comment disagrees with the layout");
      }
    }
  }
  cnf.reserve_vars(static_cast<int>(header_vars));
  if (cnf.num_vars() != header_vars) throw IntegrityError("header variable count below the layout");

  std::size_t group_index = 0;
  std::size_t in_group = 0;
  const auto current_group = [&] {
    while (group_index < declared.size() && in_group == declared[group_index].second) {
      ++group_index;
      in_group = 0;
    }
    return group_index < declared.size() ? declared[group_index].first : ClauseGroup::Extra;
  };
  std::vector<int> clause;
  long long read = 0;
  int lit = 0;
  while (in >> lit) {
    if (lit != 0) {
      clause.push_back(lit);
      continue;
    }
    try {
      cnf.add_clause(current_group(), clause);
    } catch (const InvariantError& e) {
      throw IntegrityError(std::string("bad clause in DIMACS body: ") + e.what());
    }
    ++in_group;
    ++read;
    clause.clear();
  }
  if (!in.eof()) throw IntegrityError("non-numeric token in DIMACS body");
  if (!clause.empty()) throw IntegrityError("unterminated final clause");
  if (read != header_clauses) {
    throw IntegrityError("header declares " + std::to_string(header_clauses) + " clauses, found " +
                         std::to_string(read));
  }
  return cnf;
}

std::string instance_digest(const CnfFormula& cnf) { return sha256_hex(to_dimacs(cnf)); }

Chirotope decode_chirotope(const CnfFormula& cnf, const Model& model) {
  const VarMap& vm = cnf.varmap();
  if (static_cast<int>(model.size()) <= vm.sign_count()) throw DomainError("model too short");
  std::vector<std::int8_t> signs(static_cast<std::size_t>(vm.sign_count()));
  for (int v = 1; v <= vm.sign_count(); ++v) {
    signs[static_cast<std::size_t>(v - 1)] = model[static_cast<std::size_t>(v)] ? 1 : -1;
  }
  return Chirotope(vm.dimension(), vm.ground_size(), std::move(signs));
}

std::vector<LabelSet> decode_facets(const CnfFormula& cnf, const Model& model) {
  const VarMap& vm = cnf.varmap();
  std::vector<LabelSet> out;
  for (LabelSet s : vm.subsets().subsets()) {
    const auto v = static_cast<std::size_t>(vm.facet_var(s));
    if (v >= model.size()) throw DomainError("model too short");
    if (model[v]) out.push_back(s);
  }
  return out;
}

}  // namespace chiropath
