#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace taskgraph {

using Point = Eigen::Vector3d;

/// Bit positions of the relation vocabulary. On edge v->w a label reads
/// "w is <label> v": right_of means x_w - x_v > theta_axis. Axis convention:
/// +x right, +y away from the demonstrator, +z up.
enum class Relation : std::uint8_t {
  Contact = 0,
  LeftOf,
  RightOf,
  Above,
  Below,
  InFrontOf,
  Behind,
  GettingClose,
  MovingApart,
  StableDistance,
  MovingTogether,
};

inline constexpr int kNumRelations = 11;

inline constexpr std::array<std::string_view, kNumRelations> kRelationNames = {
    "contact",     "left_of",     "right_of",     "above",           "below",          "in_front_of",
    "behind",      "getting_close", "moving_apart", "stable_distance", "moving_together",
};

/// Multi-hot relation set of one directed edge.
using RelationBits = std::uint16_t;

constexpr RelationBits bit(Relation r) {
  return static_cast<RelationBits>(1u << static_cast<unsigned>(r));
}
constexpr bool has(RelationBits bits, Relation r) { return (bits & bit(r)) != 0; }

struct RelationThresholds {
  double axis = 0.03;           // signed axis difference, meters
  double contact = 0.05;        // center distance, meters
  double velocity = 0.005;      // |delta distance| per sampled step, meters
  double motion = 0.01;         // per-object displacement for moving_together, meters
  double direction_cosine = 0.8;

  void validate() const;
};

/// Directed edges of a fully connected graph without self loops, enumerated
/// source-major: (0,1), (0,2), ..., (1,0), (1,2), ...
[[nodiscard]] inline int num_edges(int nodes) { return nodes * (nodes - 1); }
[[nodiscard]] int edge_index(int source, int target, int nodes);
[[nodiscard]] std::pair<int, int> edge_endpoints(int edge, int nodes);

/// Relations for every directed edge between `now` positions; `previous`
/// holds the same objects one sampled step earlier.
[[nodiscard]] std::vector<RelationBits> extract_relations(
    std::span<const Point> now, std::optional<std::span<const Point>> previous,
    const RelationThresholds& thresholds);

/// Swaps left_of/right_of (the effect of negating x).
[[nodiscard]] RelationBits mirror_bits(RelationBits bits);

/// Relation set seen from the opposite edge direction.
[[nodiscard]] RelationBits reverse_bits(RelationBits bits);

}  // namespace taskgraph
