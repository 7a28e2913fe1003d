#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dentmrf/dentition.hpp"
#include "oracles.hpp"

using namespace dentmrf;

namespace {

std::vector<int> ids(const std::vector<ToothId>& v) {
  std::vector<int> out;
  for (auto t : v) out.push_back(t.value());
  return out;
}

std::set<std::tuple<int, int, int, int>> as_set(const std::vector<SurfacePair>& pairs) {
  std::set<std::tuple<int, int, int, int>> out;
  for (const auto& [a, b] : pairs) {
    out.insert({a.tooth.value(), static_cast<int>(a.surface), b.tooth.value(), static_cast<int>(b.surface)});
  }
  return out;
}

std::set<std::tuple<int, int, int, int>> oracle_set(const std::vector<int>& teeth, int kind) {
  std::set<std::tuple<int, int, int, int>> out;
  for (const auto& [a, b] : oracle::pairs_of_kind(teeth, kind)) out.insert({a.tooth, a.surface, b.tooth, b.surface});
  return out;
}

std::vector<int> all_teeth() {
  std::vector<int> v(28);
  for (int i = 0; i < 28; ++i) v[i] = i + 1;
  return v;
}

}  // namespace

TEST_CASE("tooth ids are validated") {
  CHECK_THROWS_AS(ToothId(0), std::domain_error);
  CHECK_THROWS_AS(ToothId(29), std::domain_error);
  CHECK_NOTHROW(ToothId(28));
}

TEST_CASE("anterior classification") {
  const std::set<int> non_anterior{1, 2, 3, 4, 11, 12, 13, 14, 15, 16, 17, 18, 25, 26, 27, 28};
  int count = 0;
  for (int t = 1; t <= 28; ++t) {
    CHECK(is_anterior(t) == !non_anterior.count(t));
    count += !is_anterior(t);
  }
  CHECK(count == 16);
}

TEST_CASE("tooth neighbors") {
  CHECK(ids(tooth_neighbors(ToothId(1))) == std::vector<int>{2});
  CHECK(ids(tooth_neighbors(ToothId(6))) == std::vector<int>{5, 7});
  CHECK(ids(tooth_neighbors(ToothId(14))) == std::vector<int>{13});
  CHECK(ids(tooth_neighbors(ToothId(15))) == std::vector<int>{16});
  for (int a = 1; a <= 28; ++a) {
    for (auto b : tooth_neighbors(ToothId(a))) {
      const auto back = ids(tooth_neighbors(b));
      CHECK(std::find(back.begin(), back.end(), a) != back.end());
      CHECK(oracle::adjacent(a, b.value()));
    }
  }
  CHECK_THROWS_AS(is_anterior(0), std::domain_error);
}

TEST_CASE("surface counts") {
  CHECK(surface_count(ToothId(1)) == 5);
  CHECK(surface_count(ToothId(7)) == 4);
  int total = 0;
  for (int t = 1; t <= 28; ++t) total += surface_count(ToothId(t));
  CHECK(total == 128);
  CHECK(DentitionGraph::full().num_surfaces() == 128);
  CHECK_FALSE(has_surface(ToothId(7), Surface::Occlusal));
  CHECK(has_surface(ToothId(7), Surface::Lingual));
}

TEST_CASE("pair counts match first-principles enumeration") {
  CHECK(interaction_pairs(Interaction::A1).size() == 64);
  CHECK(interaction_pairs(Interaction::A2).size() == 112);
  CHECK(interaction_pairs(Interaction::C).size() == 8);
  CHECK(DentitionGraph::full().tooth_edges().size() == 26);

  const auto teeth = all_teeth();
  for (auto kind : kAllInteractions) {
    INFO("kind " << to_string(kind));
    const auto pairs = interaction_pairs(kind);
    CHECK(as_set(pairs) == oracle_set(teeth, static_cast<int>(kind)));
    CHECK(as_set(pairs).size() == pairs.size());
  }
  int edges = 0;
  for (int a = 1; a <= 28; ++a)
    for (int b = a + 1; b <= 28; ++b) edges += oracle::adjacent(a, b);
  CHECK(edges == 26);
}

TEST_CASE("pair lists are canonical, disjoint and free of self pairs") {
  std::set<std::tuple<int, int, int, int>> seen;
  std::size_t total = 0;
  for (auto kind : kAllInteractions) {
    for (const auto& [a, b] : interaction_pairs(kind)) {
      CHECK(a < b);
      CHECK_FALSE(a == b);
    }
    const auto s = as_set(interaction_pairs(kind));
    total += s.size();
    seen.insert(s.begin(), s.end());
  }
  CHECK(seen.size() == total);
  CHECK(interaction_pairs(Interaction::B1) == interaction_pairs(Interaction::B1));
}

TEST_CASE("midline contact is not a B1 pair") {
  for (const auto& [a, b] : interaction_pairs(Interaction::B1)) {
    const std::set<int> pair{a.tooth.value(), b.tooth.value()};
    CHECK(pair != std::set<int>{7, 8});
    CHECK(pair != std::set<int>{21, 22});
  }
}

TEST_CASE("subgraphs") {
  const auto one = DentitionGraph::subgraph({1});
  CHECK(one.tooth_edges().empty());
  CHECK(one.surface_pairs(Interaction::A1).size() == 4);
  CHECK(one.surface_pairs(Interaction::B1).empty());
  CHECK(one.surface_pairs(Interaction::B2).empty());
  CHECK(one.surface_pairs(Interaction::C).empty());

  const auto two = DentitionGraph::subgraph({1, 2});
  REQUIRE(two.tooth_edges().size() == 1);
  CHECK(two.tooth_edges()[0].first.value() == 1);
  CHECK(two.tooth_edges()[0].second.value() == 2);

  const auto cross = DentitionGraph::subgraph({1, 15});
  CHECK(cross.tooth_edges().empty());
  CHECK(cross.surface_pairs(Interaction::B1).empty());
  CHECK(cross.surface_pairs(Interaction::B2).empty());
  const auto c = cross.surface_pairs(Interaction::C);
  REQUIRE(c.size() == 1);
  CHECK(c[0].first == SurfaceId{ToothId(1), Surface::Occlusal});
  CHECK(c[0].second == SurfaceId{ToothId(15), Surface::Occlusal});

  CHECK_THROWS_AS(DentitionGraph::subgraph(std::span<const int>{}), std::domain_error);
  CHECK(DentitionGraph::subgraph(all_teeth()) == DentitionGraph::full());
}

TEST_CASE("induced subgraphs agree with the oracle on random subsets") {
  std::uint64_t s = 12345;
  auto next = [&] {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return s >> 33;
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> teeth;
    for (int t = 1; t <= 28; ++t)
      if (next() % 3 == 0) teeth.push_back(t);
    if (teeth.empty()) teeth.push_back(1 + static_cast<int>(next() % 28));
    const auto g = DentitionGraph::subgraph(teeth);
    for (auto kind : kAllInteractions) CHECK(as_set(g.surface_pairs(kind)) == oracle_set(teeth, static_cast<int>(kind)));
    std::size_t edges = 0;
    for (std::size_t i = 0; i < teeth.size(); ++i)
      for (std::size_t j = i + 1; j < teeth.size(); ++j) edges += oracle::adjacent(teeth[i], teeth[j]);
    CHECK(g.tooth_edges().size() == edges);
  }
}

TEST_CASE("slot bookkeeping") {
  const auto g = DentitionGraph::subgraph({3, 7, 20});
  CHECK(g.num_teeth() == 3);
  CHECK(g.num_surfaces() == 13);
  CHECK(g.tooth_slot(ToothId(7)) == 1);
  CHECK(g.tooth_slot(ToothId(8)) == -1);
  const auto r = g.tooth_surfaces(1);
  CHECK(r.last - r.first == 4);
  for (int s = r.first; s < r.last; ++s) CHECK(g.surface_owner(s) == 1);
  CHECK(g.surface_slot({ToothId(7), Surface::Occlusal}) == -1);
  CHECK(interaction_from_string("B2") == Interaction::B2);
  CHECK_THROWS(interaction_from_string("D"));
}
