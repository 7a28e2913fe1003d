#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dentmrf {

inline constexpr int kNumTeeth = 28;
inline constexpr int kNumSurfaceCodes = 5;
inline constexpr int kNumInteractions = 5;

// Teeth are numbered along the arch: lower jaw 1..14, upper jaw 15..28.
class ToothId {
 public:
  explicit ToothId(int index);
  int value() const { return index_; }
  bool anterior() const;
  auto operator<=>(const ToothId&) const = default;

 private:
  int index_;
};

enum class Surface : std::uint8_t { Occlusal = 1, Mesial = 2, Distal = 3, Facial = 4, Lingual = 5 };

// Surface interaction types, in the order of the five surface-level
// association parameters.
enum class Interaction : std::uint8_t { A1 = 0, A2 = 1, B1 = 2, B2 = 3, C = 4 };

inline constexpr std::array<Interaction, kNumInteractions> kAllInteractions{
    Interaction::A1, Interaction::A2, Interaction::B1, Interaction::B2, Interaction::C};

std::string to_string(Interaction kind);
Interaction interaction_from_string(const std::string& name);

struct SurfaceId {
  ToothId tooth;
  Surface surface;
  auto operator<=>(const SurfaceId&) const = default;
};

using ToothPair = std::pair<ToothId, ToothId>;
using SurfacePair = std::pair<SurfaceId, SurfaceId>;

bool is_anterior(int tooth);
// 5 for molars and premolars, 4 for incisors and canines (no occlusal surface).
int surface_count(ToothId tooth);
bool has_surface(ToothId tooth, Surface surface);
std::vector<ToothId> tooth_neighbors(ToothId tooth);
// Full-lattice pair list for one interaction type, canonical (first < second).
std::vector<SurfacePair> interaction_pairs(Interaction kind);

struct SurfaceNeighbor {
  int slot;
  Interaction kind;
};

// Dental lattice over a subset of the 28 teeth. Teeth and surfaces are
// addressed by dense local slots: teeth in ascending id, surfaces in
// (tooth, surface code) order.
class DentitionGraph {
 public:
  static DentitionGraph full();
  static DentitionGraph subgraph(std::span<const int> teeth);
  static DentitionGraph subgraph(std::initializer_list<int> teeth) {
    return subgraph(std::span<const int>(teeth.begin(), teeth.size()));
  }

  std::size_t num_teeth() const { return teeth_.size(); }
  std::size_t num_surfaces() const { return surfaces_.size(); }

  const std::vector<ToothId>& teeth() const { return teeth_; }
  const std::vector<SurfaceId>& surfaces() const { return surfaces_; }
  std::vector<int> tooth_ids() const;

  // Local slot of a tooth or surface, -1 if not part of this graph.
  int tooth_slot(ToothId tooth) const { return tooth_slot_[tooth.value() - 1]; }
  int surface_slot(SurfaceId id) const;
  int surface_owner(int surface_slot) const { return surface_owner_[surface_slot]; }
  // Surfaces of a tooth occupy the contiguous slot range [first, last).
  struct SlotRange {
    int first, last;
  };
  SlotRange tooth_surfaces(int tooth_slot) const {
    return {tooth_surface_offset_[tooth_slot], tooth_surface_offset_[tooth_slot + 1]};
  }

  const std::vector<std::pair<int, int>>& tooth_edge_slots() const { return tooth_edges_; }
  const std::vector<std::pair<int, int>>& pair_slots(Interaction kind) const {
    return pairs_[static_cast<int>(kind)];
  }
  std::span<const int> tooth_adjacent(int tooth_slot) const {
    return {tooth_adj_.data() + tooth_adj_offset_[tooth_slot],
            static_cast<std::size_t>(tooth_adj_offset_[tooth_slot + 1] - tooth_adj_offset_[tooth_slot])};
  }
  std::span<const SurfaceNeighbor> surface_adjacent(int surface_slot) const {
    return {surface_adj_.data() + surface_adj_offset_[surface_slot],
            static_cast<std::size_t>(surface_adj_offset_[surface_slot + 1] - surface_adj_offset_[surface_slot])};
  }
  int max_tooth_degree() const { return max_tooth_degree_; }

  std::vector<ToothPair> tooth_edges() const;
  std::vector<SurfacePair> surface_pairs(Interaction kind) const;

  bool operator==(const DentitionGraph& other) const;

 private:
  DentitionGraph() = default;
  void build_adjacency();

  std::vector<ToothId> teeth_;
  std::array<int, kNumTeeth> tooth_slot_{};
  std::vector<SurfaceId> surfaces_;
  std::vector<int> surface_owner_;
  std::vector<int> tooth_surface_offset_;  // size num_teeth + 1
  std::vector<std::pair<int, int>> tooth_edges_;
  std::array<std::vector<std::pair<int, int>>, kNumInteractions> pairs_;
  std::vector<int> tooth_adj_offset_, tooth_adj_;
  std::vector<int> surface_adj_offset_;
  std::vector<SurfaceNeighbor> surface_adj_;
  int max_tooth_degree_ = 0;
};

}  // namespace dentmrf
