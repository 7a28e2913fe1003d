#pragma once

// Small hand-rolled datasets for unit tests. Deliberately independent of the
// synthetic generator so that generator bugs cannot hide model bugs.

#include <cstdint>
#include <vector>

#include "dentmrf/dataset.hpp"
#include "dentmrf/rng.hpp"

namespace fixture {

struct Shape {
  std::vector<int> teeth{1, 2};
  std::vector<int> psu_sizes{24};
  double norp = 0.0;  // fraction of income nonresponders
  double nord = 0.0;  // fraction of exam nonresponders
  std::uint64_t seed = 1;
};

inline dentmrf::SurveyDataset dataset(const Shape& shape) {
  using namespace dentmrf;
  SurveyDataset d;
  d.teeth = shape.teeth;
  const auto g = d.graph();
  Rng rng(shape.seed);
  std::int64_t pid = 1;
  for (std::size_t i = 0; i < shape.psu_sizes.size(); ++i) {
    Psu psu;
    psu.id = static_cast<std::int64_t>(100 + 7 * i);
    for (int k = 0; k < shape.psu_sizes[i]; ++k) {
      Person p = make_person(g);
      p.person_id = pid++;
      // Cycle the demographics so every binary column is non-constant.
      p.gender = k % 2;
      p.race = 1 + (k % 3);
      p.weight = 500.0 + 1000.0 * rng.uniform() + 37.0 * k;
      const bool income = rng.uniform() >= shape.norp || k < 2;
      const bool exam = rng.uniform() >= shape.nord || k < 4;
      p.r1 = income ? 1 : 0;
      if (income) p.poverty = (k / 2) % 2;
      p.r2 = exam ? 1 : 0;
      if (exam) {
        for (std::size_t t = 0; t < g.num_teeth(); ++t) {
          const int status = 1 + static_cast<int>(rng() % 3);
          p.teeth[t].status = status;
          if (status == 1) {
            p.teeth[t].sealant = (k / 4) % 2;
            p.teeth[t].fluorosis = static_cast<int>(rng() % 5);
            auto [a, b] = g.tooth_surfaces(static_cast<int>(t));
            for (int s = a; s < b; ++s) p.surfaces[s] = 1 + static_cast<int>(rng() % 3);
          }
        }
        // Guarantee a sealant on some exam takers.
        if (k % 4 >= 2) {
          p.teeth[0].status = 1;
          p.teeth[0].sealant = 1;
          p.teeth[0].fluorosis = p.teeth[0].fluorosis.value_or(1);
          auto [a, b] = g.tooth_surfaces(0);
          for (int s = a; s < b; ++s)
            if (!p.surfaces[s]) p.surfaces[s] = 1;
        }
      }
      psu.people.push_back(p);
    }
    d.psus.push_back(psu);
  }
  return d;
}

}  // namespace fixture
