#include "dentmrf/dentition.hpp"

#include <algorithm>
#include <stdexcept>

namespace dentmrf {

namespace {

constexpr int kJawSize = 14;

bool same_jaw(int a, int b) { return (a - 1) / kJawSize == (b - 1) / kJawSize; }

// Arch adjacency: k ~ k+1 within a jaw.
bool arch_adjacent(int a, int b) { return std::abs(a - b) == 1 && same_jaw(a, b); }

SurfaceId sid(int tooth, Surface s) { return SurfaceId{ToothId(tooth), s}; }

SurfacePair canonical(SurfaceId a, SurfaceId b) {
  if (b < a) std::swap(a, b);
  return {a, b};
}

}  // namespace

ToothId::ToothId(int index) : index_(index) {
  if (index < 1 || index > kNumTeeth) {
    throw std::domain_error("tooth index " + std::to_string(index) + " outside 1..28");
  }
}

bool ToothId::anterior() const { return is_anterior(index_); }

bool is_anterior(int tooth) {
  if (tooth < 1 || tooth > kNumTeeth) {
    throw std::domain_error("tooth index " + std::to_string(tooth) + " outside 1..28");
  }
  const int pos = (tooth - 1) % kJawSize;  // 0..13 along the jaw
  return pos >= 4 && pos <= 9;
}

int surface_count(ToothId tooth) { return tooth.anterior() ? 4 : 5; }

bool has_surface(ToothId tooth, Surface surface) {
  return surface != Surface::Occlusal || !tooth.anterior();
}

std::vector<ToothId> tooth_neighbors(ToothId tooth) {
  std::vector<ToothId> out;
  const int k = tooth.value();
  if (k > 1 && arch_adjacent(k, k - 1)) out.emplace_back(k - 1);
  if (k < kNumTeeth && arch_adjacent(k, k + 1)) out.emplace_back(k + 1);
  return out;
}

std::string to_string(Interaction kind) {
  switch (kind) {
    case Interaction::A1: return "A1";
    case Interaction::A2: return "A2";
    case Interaction::B1: return "B1";
    case Interaction::B2: return "B2";
    case Interaction::C: return "C";
  }
  return "?";
}

Interaction interaction_from_string(const std::string& name) {
  for (auto kind : kAllInteractions) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown interaction type '" + name + "'");
}

std::vector<SurfacePair> interaction_pairs(Interaction kind) {
  std::vector<SurfacePair> out;
  switch (kind) {
    case Interaction::A1:
      for (int k = 1; k <= kNumTeeth; ++k) {
        if (is_anterior(k)) continue;
        for (auto s : {Surface::Mesial, Surface::Distal, Surface::Facial, Surface::Lingual}) {
          out.push_back(canonical(sid(k, Surface::Occlusal), sid(k, s)));
        }
      }
      break;
    case Interaction::A2:
      for (int k = 1; k <= kNumTeeth; ++k) {
        for (auto a : {Surface::Mesial, Surface::Distal}) {
          for (auto b : {Surface::Facial, Surface::Lingual}) out.push_back(canonical(sid(k, a), sid(k, b)));
        }
      }
      break;
    case Interaction::B1:
      // Mesial of k meets distal of k-1 on one half of each jaw and distal of
      // k+1 on the other; the midline contact (7,8) / (21,22) is not a pair.
      for (int jaw = 0; jaw < 2; ++jaw) {
        const int base = jaw * kJawSize;
        for (int k = base + 2; k <= base + 7; ++k) out.push_back(canonical(sid(k, Surface::Mesial), sid(k - 1, Surface::Distal)));
        for (int k = base + 8; k <= base + 13; ++k) out.push_back(canonical(sid(k, Surface::Mesial), sid(k + 1, Surface::Distal)));
      }
      break;
    case Interaction::B2:
      for (int k = 1; k < kNumTeeth; ++k) {
        if (!arch_adjacent(k, k + 1)) continue;
        if (!is_anterior(k) && !is_anterior(k + 1)) {
          out.push_back(canonical(sid(k, Surface::Occlusal), sid(k + 1, Surface::Occlusal)));
        }
        out.push_back(canonical(sid(k, Surface::Facial), sid(k + 1, Surface::Facial)));
        out.push_back(canonical(sid(k, Surface::Lingual), sid(k + 1, Surface::Lingual)));
      }
      break;
    case Interaction::C:
      for (int k = 1; k <= kJawSize; ++k) {
        if (is_anterior(k) || is_anterior(k + kJawSize)) continue;
        out.push_back(canonical(sid(k, Surface::Occlusal), sid(k + kJawSize, Surface::Occlusal)));
      }
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

DentitionGraph DentitionGraph::full() {
  std::vector<int> all(kNumTeeth);
  for (int k = 0; k < kNumTeeth; ++k) all[k] = k + 1;
  return subgraph(all);
}

DentitionGraph DentitionGraph::subgraph(std::span<const int> teeth) {
  if (teeth.empty()) throw std::domain_error("dentition subgraph needs at least one tooth");
  std::vector<int> ids(teeth.begin(), teeth.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  DentitionGraph g;
  g.tooth_slot_.fill(-1);
  g.tooth_surface_offset_.push_back(0);
  for (int k : ids) {
    ToothId t(k);
    g.tooth_slot_[k - 1] = static_cast<int>(g.teeth_.size());
    for (int s = 1; s <= kNumSurfaceCodes; ++s) {
      if (!has_surface(t, static_cast<Surface>(s))) continue;
      g.surfaces_.push_back(SurfaceId{t, static_cast<Surface>(s)});
      g.surface_owner_.push_back(static_cast<int>(g.teeth_.size()));
    }
    g.teeth_.push_back(t);
    g.tooth_surface_offset_.push_back(static_cast<int>(g.surfaces_.size()));
  }

  for (std::size_t a = 0; a < g.teeth_.size(); ++a) {
    for (std::size_t b = a + 1; b < g.teeth_.size(); ++b) {
      if (arch_adjacent(g.teeth_[a].value(), g.teeth_[b].value())) {
        g.tooth_edges_.emplace_back(static_cast<int>(a), static_cast<int>(b));
      }
    }
  }
  for (auto kind : kAllInteractions) {
    for (const auto& [p, q] : interaction_pairs(kind)) {
      const int sp = g.surface_slot(p);
      const int sq = g.surface_slot(q);
      if (sp >= 0 && sq >= 0) g.pairs_[static_cast<int>(kind)].emplace_back(sp, sq);
    }
  }
  g.build_adjacency();
  return g;
}

void DentitionGraph::build_adjacency() {
  const int nt = static_cast<int>(teeth_.size());
  std::vector<std::vector<int>> tadj(nt);
  for (auto [a, b] : tooth_edges_) {
    tadj[a].push_back(b);
    tadj[b].push_back(a);
  }
  tooth_adj_offset_.assign(1, 0);
  for (auto& list : tadj) {
    std::sort(list.begin(), list.end());
    tooth_adj_.insert(tooth_adj_.end(), list.begin(), list.end());
    tooth_adj_offset_.push_back(static_cast<int>(tooth_adj_.size()));
    max_tooth_degree_ = std::max(max_tooth_degree_, static_cast<int>(list.size()));
  }

  const int ns = static_cast<int>(surfaces_.size());
  std::vector<std::vector<SurfaceNeighbor>> sadj(ns);
  for (auto kind : kAllInteractions) {
    for (auto [a, b] : pairs_[static_cast<int>(kind)]) {
      sadj[a].push_back({b, kind});
      sadj[b].push_back({a, kind});
    }
  }
  surface_adj_offset_.assign(1, 0);
  for (auto& list : sadj) {
    std::sort(list.begin(), list.end(), [](const SurfaceNeighbor& x, const SurfaceNeighbor& y) { return x.slot < y.slot; });
    surface_adj_.insert(surface_adj_.end(), list.begin(), list.end());
    surface_adj_offset_.push_back(static_cast<int>(surface_adj_.size()));
  }
}

std::vector<int> DentitionGraph::tooth_ids() const {
  std::vector<int> out;
  out.reserve(teeth_.size());
  for (auto t : teeth_) out.push_back(t.value());
  return out;
}

int DentitionGraph::surface_slot(SurfaceId id) const {
  const int t = tooth_slot(id.tooth);
  if (t < 0) return -1;
  for (int s = tooth_surface_offset_[t]; s < tooth_surface_offset_[t + 1]; ++s) {
    if (surfaces_[s].surface == id.surface) return s;
  }
  return -1;
}

std::vector<ToothPair> DentitionGraph::tooth_edges() const {
  std::vector<ToothPair> out;
  for (auto [a, b] : tooth_edges_) out.emplace_back(teeth_[a], teeth_[b]);
  return out;
}

std::vector<SurfacePair> DentitionGraph::surface_pairs(Interaction kind) const {
  std::vector<SurfacePair> out;
  for (auto [a, b] : pairs_[static_cast<int>(kind)]) out.emplace_back(surfaces_[a], surfaces_[b]);
  return out;
}

bool DentitionGraph::operator==(const DentitionGraph& other) const {
  return teeth_ == other.teeth_ && surfaces_ == other.surfaces_ && tooth_edges_ == other.tooth_edges_ &&
         pairs_ == other.pairs_;
}

}  // namespace dentmrf
