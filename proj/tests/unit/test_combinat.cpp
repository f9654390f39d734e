#include <doctest.h>

#include <set>
#include <sstream>

#include "chiropath/combinat.hpp"
#include "chiropath/error.hpp"
#include "testing.hpp"

using namespace chiropath;

namespace {

// Non-revisiting end-disjoint paths from F_0 = {1..d}: every step drops one
// label and enters a fresh one. Classes counted with the brute-force canonical form.
std::size_t brute_nonrevisiting_count(int d, int k) {
  std::set<std::vector<std::vector<int>>> classes;
  std::vector<LabelSet> facets{first_labels(d)};
  auto extend = [&](auto& self) -> void {
    const int t = static_cast<int>(facets.size()) - 1;
    if (t == k) {
      PathType p(d, facets);
      if ((p.facet(0) & p.facet(k)) == 0 && !testing::bfs_shortcut(p)) classes.insert(testing::brute_canonical(p));
      return;
    }
    for (int v : to_labels(facets.back())) {
      facets.push_back((facets.back() & ~label_bit(v)) | label_bit(d + t + 1));
      self(self);
      facets.pop_back();
    }
  };
  extend(extend);
  return classes.size();
}

std::size_t total(const std::map<ClassKey, ClassBucket>& buckets) {
  std::size_t sum = 0;
  for (const auto& [key, b] : buckets) sum += b.count;
  return sum;
}

}  // namespace

TEST_SUITE("combinat") {
  TEST_CASE("non-revisiting counts") {
    CHECK(enumerate_nonrevisiting(4, 6).size() == 15);
    CHECK(enumerate_nonrevisiting(4, 7).size() == 50);
    CHECK(enumerate_nonrevisiting(2, 2).size() == 1);
  }

  TEST_CASE("non-revisiting counts agree with brute force") {
    for (auto [d, k] : std::vector<std::pair<int, int>>{{2, 2}, {2, 3}, {2, 4}, {3, 3}, {3, 4}, {3, 5}, {4, 4}}) {
      CAPTURE(d);
      CAPTURE(k);
      CHECK(enumerate_nonrevisiting(d, k).size() == brute_nonrevisiting_count(d, k));
    }
  }

  TEST_CASE("k < d is rejected") {
    CHECK_THROWS_AS(enumerate_nonrevisiting(4, 3), DomainError);
    CHECK_THROWS_AS(enumerate_all(4, 8, 3), DomainError);
    CHECK_THROWS_AS(enumerate_all(4, 7, 6), DomainError);
  }

  TEST_CASE("revisit generation") {
    const auto base10 = enumerate_nonrevisiting(4, 6);
    CHECK(generate_revisits(base10, 1).size() == 24);
    const auto base11 = enumerate_nonrevisiting(4, 7);
    CHECK(generate_revisits(base11, 1).size() == 200);
    CHECK_THROWS_AS(generate_revisits(base11, 2), DomainError);
  }

  TEST_CASE("grouped enumeration") {
    const auto a = enumerate_all(4, 10, 6);
    REQUIRE(a.size() == 3);
    CHECK(a.at({0, 0}).count == 15);
    CHECK(a.at({1, 1}).count == 24);
    CHECK(a.at({2, 2}).count == 16);

    const auto b = enumerate_all(4, 11, 7);
    CHECK(b.at({0, 0}).count == 50);
    CHECK(b.at({1, 1}).count == 200);
    CHECK(b.at({2, 2}).count == 354);
    CHECK(b.at({3, 3}).count == 96);

    const auto c = enumerate_all(5, 11, 7);
    CHECK(c.size() == 2);
    CHECK(c.at({1, 0}).count == 98);
    CHECK(c.at({2, 1}).count == 98);

    const auto e = enumerate_all(6, 12, 7);
    REQUIRE(e.size() == 1);
    CHECK(e.at({1, 0}).count == 11);
  }

  TEST_CASE("larger grouped enumerations" * doctest::timeout(600)) {
    const auto f = enumerate_all(5, 12, 8);
    CHECK(total(f) == 7167);
    CHECK(f.at({1, 0}).count == 1079);
    const auto g = enumerate_all(6, 13, 8);
    CHECK(g.at({1, 0}).count == 293);
    CHECK(g.at({2, 1}).count == 452);
  }

  TEST_CASE("reference counts match the enumeration") {
    for (auto [d, n, k] : std::vector<std::array<int, 3>>{{4, 10, 6}, {4, 11, 7}, {5, 11, 7}, {6, 12, 7}}) {
      const auto ref = reference_counts(d, n, k);
      const auto got = enumerate_all(d, n, k);
      REQUIRE(ref.size() == got.size());
      for (const auto& [key, count] : ref) CHECK(got.at(key).count == count);
    }
    CHECK(reference_counts(4, 9, 5).empty());
  }

  TEST_CASE("every emitted path satisfies the class invariants") {
    for (auto [d, n, k] : std::vector<std::array<int, 3>>{{4, 10, 6}, {4, 11, 7}, {5, 11, 7}, {6, 12, 7}}) {
      for (const auto& [key, bucket] : enumerate_all(d, n, k)) {
        CHECK(bucket.paths.size() == bucket.count);
        for (const PathType& p : bucket.paths) {
          CHECK(p.dimension() == d);
          CHECK(p.length() == k);
          CHECK(is_facet_sequence(p));
          CHECK(is_admissible(p));
          CHECK_FALSE(testing::bfs_shortcut(p));
          for (LabelSet f : p.facets()) CHECK(label_count(f) == d);
          const PathClass c = classify(p, n);
          CHECK(c.m == key.first);
          CHECK(c.l == key.second);
          CHECK(c.m - c.l == k + d - n);
          CHECK(c.m <= k - d);
          CHECK(c.l <= n - 2 * d);
        }
      }
    }
  }

  TEST_CASE("non-revisiting paths use d+k distinct labels") {
    for (const PathType& p : enumerate_nonrevisiting(4, 7)) {
      CHECK(p.labels_used() == 11);
      CHECK(p.revisits() == 0);
    }
  }

  TEST_CASE("classify") {
    // all 10 labels used once
    const PathType plain = PathType::from_labels(
        4, {{1, 2, 3, 4}, {2, 3, 4, 5}, {3, 4, 5, 6}, {4, 5, 6, 7}, {5, 6, 7, 8}, {6, 7, 8, 9}, {7, 8, 9, 10}});
    const PathClass c = classify(plain, 10);
    CHECK(c == PathClass{4, 10, 6, 0, 0});

    // vertex 2 revisited, vertex 8 unused
    const PathType fig = PathType::from_labels(
        3, {{1, 2, 3}, {2, 3, 4}, {3, 4, 5}, {4, 5, 6}, {2, 5, 6}, {2, 6, 7}, {6, 7, 9}});
    const PathClass f = classify(fig, 9);
    CHECK(f.m == 1);
    CHECK(f.l == 1);

    CHECK_THROWS_AS(classify(plain, 9), DomainError);
    // a triangle walk returns to label 1 before k - d allows it
    const PathType loop = PathType::from_labels(2, {{1, 2}, {2, 3}, {1, 3}});
    CHECK_THROWS_AS(classify(loop, 3), InvariantError);
    try {
      classify(loop, 3);
    } catch (const InvariantError& e) {
      CHECK(std::string(e.what()).find("m <= k - d") != std::string::npos);
    }
  }

  TEST_CASE("every (5,12,8) path has m - l = 1" * doctest::timeout(600)) {
    for (const auto& [key, bucket] : enumerate_all(5, 12, 8)) {
      CHECK(key.first - key.second == 1);
      for (const PathType& p : bucket.paths) {
        const PathClass c = classify(p, 12);
        CHECK(c.m - c.l == 1);
      }
    }
  }

  TEST_CASE("canonical form") {
    std::mt19937_64 rng(7);
    const auto all = enumerate_all(4, 11, 7);
    for (const auto& [key, bucket] : all) {
      for (std::size_t i = 0; i < bucket.paths.size(); i += 7) {
        const PathType& p = bucket.paths[i];
        const PathType c = canonicalize(p);
        CHECK(canonicalize(c) == c);
        CHECK(canonicalize(p.reversed()) == c);
        const PathType moved = testing::relabel(p, testing::random_permutation(rng, 11));
        CHECK(canonicalize(moved) == c);
        CHECK(canonicalize(moved.reversed()) == c);
      }
    }
  }

  TEST_CASE("canonical form is constant on brute-force classes") {
    // Two paths share a canonical form iff their brute-force forms agree.
    std::mt19937_64 rng(11);
    const auto paths = enumerate_nonrevisiting(3, 5);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (std::size_t j = 0; j < paths.size(); ++j) {
        const PathType a = testing::relabel(paths[i], testing::random_permutation(rng, 8));
        const PathType b = testing::relabel(paths[j], testing::random_permutation(rng, 8));
        CHECK((canonicalize(a) == canonicalize(b)) == (testing::brute_canonical(a) == testing::brute_canonical(b)));
      }
    }
  }

  TEST_CASE("structural shortcuts") {
    // F_0 and F_2 share d-1 labels
    const PathType bad = PathType::from_labels(3, {{1, 2, 3}, {1, 2, 4}, {1, 2, 5}, {2, 5, 6}});
    CHECK(has_structural_shortcut(bad));
    CHECK(testing::bfs_shortcut(bad));
    for (const PathType& p : enumerate_nonrevisiting(4, 6)) CHECK_FALSE(has_structural_shortcut(p));

    std::mt19937_64 rng(3);
    int agreements = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      const int d = 2 + static_cast<int>(rng() % 3);
      const int k = 2 + static_cast<int>(rng() % 5);
      const int n = d + 3;
      std::vector<LabelSet> facets{first_labels(d)};
      for (int t = 0; t < k; ++t) {
        const auto cur = to_labels(facets.back());
        const int out = cur[rng() % cur.size()];
        std::vector<int> free;
        for (int v = 1; v <= n; ++v) {
          if (!contains(facets.back(), v)) free.push_back(v);
        }
        facets.push_back((facets.back() & ~label_bit(out)) | label_bit(free[rng() % free.size()]));
      }
      const PathType p(d, facets);
      CHECK(has_structural_shortcut(p) == testing::bfs_shortcut(p));
      ++agreements;
    }
    CHECK(agreements == 2000);
  }

  TEST_CASE("enumeration is deterministic") {
    const auto a = enumerate_all(4, 11, 7);
    const auto b = enumerate_all(4, 11, 7);
    REQUIRE(a.size() == b.size());
    for (const auto& [key, bucket] : a) CHECK(bucket.paths == b.at(key).paths);
  }

  TEST_CASE("path file round trip") {
    const auto all = enumerate_all(4, 10, 6);
    std::vector<PathType> paths;
    for (const auto& [key, bucket] : all) paths.insert(paths.end(), bucket.paths.begin(), bucket.paths.end());
    std::stringstream buf;
    write_path_file(buf, paths, 10);
    const auto records = read_path_file(buf);
    REQUIRE(records.size() == 55);
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(records[i].path == paths[i]);
      CHECK(records[i].cls == classify(paths[i], 10));
    }
    CHECK_THROWS_AS(path_from_json_line("{\"d\":4"), IntegrityError);
    CHECK_THROWS_AS(path_from_json_line(R"({"d":2,"n":4,"k":2,"m":1,"l":0,"facets":[[1,2],[2,3],[3,4]]})"),
                    IntegrityError);
  }
}
