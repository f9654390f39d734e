#include <doctest.h>

#include <fstream>
#include <sstream>

#include "chiropath/combinat.hpp"
#include "chiropath/digest.hpp"
#include "chiropath/encoder.hpp"
#include "chiropath/error.hpp"
#include "chiropath/solver.hpp"
#include "testing.hpp"

using namespace chiropath;

namespace {

std::vector<PathType> all_paths(int d, int n, int k) {
  std::vector<PathType> out;
  for (const auto& [key, bucket] : enumerate_all(d, n, k)) out.insert(out.end(), bucket.paths.begin(), bucket.paths.end());
  return out;
}

bool satisfies(const CnfFormula& cnf, const Model& model, std::optional<ClauseGroup> only = std::nullopt) {
  for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
    if (only && cnf.group(i) != *only) continue;
    bool sat = false;
    for (int lit : cnf.clause(i)) sat = sat || model[static_cast<std::size_t>(std::abs(lit))] == (lit > 0);
    if (!sat) return false;
  }
  return true;
}

// Propagates the formula's units plus one literal per sign variable; false on conflict.
bool propagate_chirotope(Propagator& prop, const CnfFormula& cnf, const Chirotope& chi) {
  if (!prop.propagate_units()) return false;
  for (int lit : assume_chirotope(cnf, chi)) {
    if (prop.value(std::abs(lit)) == (lit > 0 ? -1 : 1)) return false;
    if (prop.value(std::abs(lit)) == 0 && !prop.assign(lit)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("variable layout") {
    const VarMap vm(4, 10, 6);
    CHECK(vm.sign_count() == 252);
    CHECK(vm.facet_count() == 210);
    CHECK(vm.layer_count() == 1260);
    CHECK(vm.first_aux() == 1 + 252 + 210 + 1260);
    CHECK(VarMap(4, 12, 8).layer_count() == 3960);

    // dense and injective
    std::set<int> seen;
    for (LabelSet b : vm.bases().subsets()) {
      CHECK(vm.is_sign_var(vm.sign_var(b)));
      CHECK(vm.basis_of(vm.sign_var(b)) == b);
      seen.insert(vm.sign_var(b));
    }
    for (LabelSet s : vm.subsets().subsets()) {
      CHECK(vm.is_facet_var(vm.facet_var(s)));
      CHECK(vm.subset_of(vm.facet_var(s)) == s);
      seen.insert(vm.facet_var(s));
      for (int t = 0; t < 6; ++t) {
        CHECK(vm.is_layer_var(vm.layer_var(s, t)));
        seen.insert(vm.layer_var(s, t));
      }
    }
    CHECK(seen.size() == static_cast<std::size_t>(vm.first_aux() - 1));
    CHECK(*seen.begin() == 1);
    CHECK(*seen.rbegin() == vm.first_aux() - 1);
    CHECK_THROWS_AS(vm.layer_var(vm.subsets().unrank(0), 6), DomainError);
  }

  TEST_CASE("instance shape") {
    const auto paths = all_paths(4, 10, 6);
    REQUIRE(paths.size() == 55);
    const CnfFormula cnf = encode_instance(paths[0], 10);
    CHECK(cnf.varmap().sign_count() == 252);
    CHECK(cnf.varmap().facet_count() == 210);
    CHECK(cnf.distance_bound() == 6);
    CHECK(cnf.group_size(ClauseGroup::Path) == 7);
    CHECK(cnf.group_size(ClauseGroup::Symmetry) == 1);
    // per triple: three XNOR definitions of four clauses and two blocking clauses
    CHECK(cnf.group_size(ClauseGroup::Axiom) == 4200 * 14);
    CHECK(cnf.group_size(ClauseGroup::Extra) == 0);

    // the axiom group mentions every sign variable
    std::set<int> signs;
    for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
      if (cnf.group(i) != ClauseGroup::Axiom) continue;
      for (int lit : cnf.clause(i)) {
        if (cnf.varmap().is_sign_var(std::abs(lit))) signs.insert(std::abs(lit));
      }
    }
    CHECK(signs.size() == 252);

    // unit clauses on the path facets and the symmetry basis
    std::set<int> units;
    for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
      if (cnf.clause(i).size() == 1) units.insert(cnf.clause(i)[0]);
    }
    for (LabelSet f : paths[0].facets()) CHECK(units.count(cnf.varmap().facet_var(f)) == 1);
    CHECK(units.count(cnf.varmap().sign_var(symmetry_basis(paths[0], 10))) == 1);
    CHECK(units.count(-cnf.varmap().layer_var(paths[0].facet(6), 5)) == 1);
    CHECK(units.count(cnf.varmap().layer_var(paths[0].facet(0), 0)) == 1);
  }

  TEST_CASE("bad inputs are rejected") {
    const PathType touching = PathType::from_labels(2, {{1, 2}, {2, 3}, {2, 4}});
    CHECK_THROWS_AS(encode_instance(touching, 5), DomainError);
    const PathType gap = PathType::from_labels(2, {{1, 2}, {3, 4}});
    CHECK_THROWS(encode_instance(gap, 5));
    const auto paths = all_paths(4, 10, 6);
    CHECK_THROWS_AS(encode_instance(paths[0], 9), DomainError);
    CnfFormula cnf(VarMap(2, 4, 1), PathType::from_labels(2, {{1, 2}}), 1);
    CHECK_THROWS_AS(cnf.add_clause(ClauseGroup::Extra, std::span<const int>{}), InvariantError);
    CHECK_THROWS_AS(cnf.add_clause(ClauseGroup::Extra, {cnf.num_vars() + 1}), InvariantError);
    CHECK_THROWS_AS(cnf.add_clause(ClauseGroup::Extra, {0}), InvariantError);
    CHECK_THROWS_AS(assume_chirotope(encode_instance(paths[0], 10), Chirotope::alternating(4, 11)), DomainError);
  }

  TEST_CASE("GP group accepts realized chirotopes and rejects violations") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 2 + trial % 3;
      const int n = d + 3 + trial % 3;
      Chirotope chi = Chirotope::alternating(d, n);
      for (;;) {
        try {
          chi = chirotope_from_points(testing::random_config(rng, d, n, 1000));
          break;
        } catch (const DegeneracyError&) {
        }
      }
      CnfFormula cnf(VarMap(d, n, 0), PathType(d, {first_labels(d)}), 1);
      encode_gp_axioms(cnf);
      Propagator prop(cnf);
      CHECK(propagate_chirotope(prop, cnf, chi));
      // the signs decide every GP auxiliary
      for (int v = cnf.varmap().first_aux(); v <= cnf.num_vars(); ++v) CHECK(prop.value(v) != 0);
    }

    const GPTriple t = gp_triples(4, 7).front();
    std::vector<std::int8_t> signs(binomial(7, 5), 1);
    signs[BasisIndexer(7, 5).rank(t.terms[1].basis_a)] = -1;
    const Chirotope broken(4, 7, signs);
    CnfFormula cnf(VarMap(4, 7, 0), PathType(4, {first_labels(4)}), 1);
    encode_gp_axioms(cnf);
    Propagator prop(cnf);
    CHECK_FALSE(propagate_chirotope(prop, cnf, broken));

    CnfFormula small(VarMap(4, 6, 0), PathType(4, {first_labels(4)}), 1);
    encode_gp_axioms(small);
    CHECK(small.num_clauses() == 0);
  }

  TEST_CASE("facet definitions match facets_of") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 2 + trial % 3;
      const int n = d + 2 + trial % 4;
      Chirotope chi = Chirotope::alternating(d, n);
      for (;;) {
        try {
          chi = chirotope_from_points(testing::random_config(rng, d, n, 1000));
          break;
        } catch (const DegeneracyError&) {
        }
      }
      CnfFormula cnf(VarMap(d, n, 0), PathType(d, {first_labels(d)}), 1);
      encode_facet_definitions(cnf);
      Propagator prop(cnf);
      REQUIRE(propagate_chirotope(prop, cnf, chi));
      const auto facets = facets_of(chi);
      const std::set<LabelSet> expected(facets.begin(), facets.end());
      for (LabelSet s : cnf.varmap().subsets().subsets()) {
        CHECK(prop.value(cnf.varmap().facet_var(s)) == (expected.count(s) ? 1 : -1));
      }
    }
  }

  TEST_CASE("facet definitions on the cyclic polytope") {
    const Chirotope cyc = Chirotope::alternating(4, 10);
    CnfFormula cnf(VarMap(4, 10, 0), PathType(4, {first_labels(4)}), 1);
    encode_gp_axioms(cnf);
    encode_facet_definitions(cnf);
    Propagator prop(cnf);
    REQUIRE(propagate_chirotope(prop, cnf, cyc));
    std::vector<LabelSet> forced;
    for (LabelSet s : cnf.varmap().subsets().subsets()) {
      if (prop.value(cnf.varmap().facet_var(s)) == 1) forced.push_back(s);
    }
    CHECK(forced == testing::gale_facets(4, 10));
  }

  TEST_CASE("every d-subset is a facet when n = d + 1") {
    CnfFormula cnf(VarMap(3, 4, 0), PathType(3, {first_labels(3)}), 1);
    encode_facet_definitions(cnf);
    for (const Chirotope& chi : {Chirotope::alternating(3, 4), Chirotope::alternating(3, 4).negated()}) {
      Propagator prop(cnf);
      REQUIRE(propagate_chirotope(prop, cnf, chi));
      for (LabelSet s : cnf.varmap().subsets().subsets()) CHECK(prop.value(cnf.varmap().facet_var(s)) == 1);
    }
  }

  TEST_CASE("realized paths: witness and blocking") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const int d = seed % 2 == 0 ? 3 : 4;
      const int n = d == 3 ? 8 : 10;
      const testing::RealizedPath rp = testing::find_realized_path(seed, d, n, 2);
      CAPTURE(seed);
      CHECK(rp.path.length() == rp.distance);

      const CnfFormula cnf = encode_instance(rp.path, n);
      const Chirotope chi = orient_for(cnf, rp.chi);
      CHECK(chi.basis_sign(symmetry_basis(rp.path, n)) == 1);
      const Model model = testing::build_model(cnf, chi);
      CHECK(satisfies(cnf, model));
      for (ClauseGroup g : {ClauseGroup::Axiom, ClauseGroup::FacetDef, ClauseGroup::Path, ClauseGroup::Symmetry,
                            ClauseGroup::Distance}) {
        CHECK(satisfies(cnf, model, g));
      }
      CHECK(decode_chirotope(cnf, model) == chi);
      CHECK(decode_facets(cnf, model) == rp.facets);
      CHECK(verify_model(cnf, model));

      Propagator ok(cnf);
      CHECK(propagate_chirotope(ok, cnf, chi));

      const CnfFormula longer = encode_instance(rp.path, n, EncodeOptions{rp.distance + 1});
      Propagator blocked(longer);
      CHECK_FALSE(propagate_chirotope(blocked, longer, orient_for(longer, rp.chi)));
    }
  }

  TEST_CASE("DIMACS round trip") {
    const auto paths = all_paths(4, 10, 6);
    const CnfFormula cnf = encode_instance(paths[17], 10);
    const std::string text = to_dimacs(cnf);
    CHECK(text.rfind("c chiropath 4 10 6 6\n", 0) == 0);
    CHECK(text.find("\nc s 1 1 2 3 4 5\n") != std::string::npos);
    CHECK(text.find("\nc f 253 1 2 3 4\n") != std::string::npos);

    std::istringstream in(text);
    const CnfFormula back = read_dimacs(in);
    CHECK(back.num_vars() == cnf.num_vars());
    REQUIRE(back.num_clauses() == cnf.num_clauses());
    CHECK(back.path() == cnf.path());
    CHECK(back.distance_bound() == cnf.distance_bound());
    std::multiset<std::vector<int>> a, b;
    for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
      CHECK(back.group(i) == cnf.group(i));
      a.insert({cnf.clause(i).begin(), cnf.clause(i).end()});
      b.insert({back.clause(i).begin(), back.clause(i).end()});
    }
    CHECK(a == b);
    CHECK(to_dimacs(back) == text);

    // header variable count is the largest variable referenced
    int top = 0;
    for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
      for (int lit : cnf.clause(i)) top = std::max(top, std::abs(lit));
    }
    CHECK(text.find("\np cnf " + std::to_string(top) + " " + std::to_string(cnf.num_clauses()) + "\n") !=
          std::string::npos);

    const std::vector<int> units{1, -2};
    std::istringstream with_units(to_dimacs(cnf, units));
    const CnfFormula extended = read_dimacs(with_units);
    CHECK(extended.num_clauses() == cnf.num_clauses() + 2);
    CHECK(extended.group_size(ClauseGroup::Extra) == 2);
  }

  TEST_CASE("generic DIMACS input") {
    std::istringstream in("c plain\np cnf 3 2\n1 -2 0\n2 3\n0\n");
    const CnfFormula cnf = read_dimacs(in);
    CHECK(cnf.num_vars() == 3);
    CHECK(cnf.num_clauses() == 2);
    CHECK(cnf.clause(1).size() == 2);
    std::istringstream wrong("p cnf 3 3\n1 0\n");
    CHECK_THROWS_AS(read_dimacs(wrong), IntegrityError);
    std::istringstream junk("p cnf 3 1\n1 x 0\n");
    CHECK_THROWS_AS(read_dimacs(junk), IntegrityError);
    std::istringstream high("p cnf 2 1\n1 3 0\n");
    CHECK_THROWS_AS(read_dimacs(high), IntegrityError);
  }

  TEST_CASE("encoding is deterministic") {
    const auto paths = all_paths(4, 10, 6);
    for (std::size_t i = 0; i < paths.size(); i += 9) {
      const std::string a = to_dimacs(encode_instance(paths[i], 10));
      const std::string b = to_dimacs(encode_instance(paths[i], 10));
      CHECK(a == b);
      CHECK(instance_digest(encode_instance(paths[i], 10)) == sha256_hex(a));
    }
  }

  TEST_CASE("golden instance digest") {
    const auto paths = all_paths(4, 10, 6);
    std::ifstream golden(std::string(CHIROPATH_GOLDEN_DIR) + "/encode-4-10-6-0.sha256");
    REQUIRE(golden.good());
    std::string expected;
    golden >> expected;
    CHECK(instance_digest(encode_instance(paths[0], 10)) == expected);
  }

  TEST_CASE("each clause group is satisfiable on its own") {
    const std::string solver = testing::backend();
    if (solver.empty()) return;
    const auto paths = all_paths(4, 10, 6);
    for (std::size_t idx : {std::size_t{0}, std::size_t{20}, std::size_t{54}}) {
      const CnfFormula cnf = encode_instance(paths[idx], 10);
      for (ClauseGroup g : {ClauseGroup::Axiom, ClauseGroup::FacetDef, ClauseGroup::Path, ClauseGroup::Symmetry,
                            ClauseGroup::Distance}) {
        std::ostringstream body;
        std::size_t count = 0;
        for (std::size_t i = 0; i < cnf.num_clauses(); ++i) {
          if (cnf.group(i) != g) continue;
          for (int lit : cnf.clause(i)) body << lit << ' ';
          body << "0\n";
          ++count;
        }
        std::istringstream in("p cnf " + std::to_string(cnf.num_vars()) + " " + std::to_string(count) + "\n" +
                              body.str());
        const CnfFormula part = read_dimacs(in);
        SolverConfig config;
        config.backend = solver;
        const SolveResult r = solve(part, config);
        CAPTURE(group_name(g));
        CHECK(r.verdict == Verdict::Sat);
      }
    }
  }
}
