#include "taskgraph/relations.hpp"

#include "taskgraph/errors.hpp"

#include <cmath>
#include <string>

namespace taskgraph {

void RelationThresholds::validate() const {
  for (double v : {axis, contact, velocity, motion}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("relation thresholds must be positive");
  }
  if (!(direction_cosine > -1.0 && direction_cosine < 1.0)) {
    throw ConfigError("direction cosine threshold must lie in (-1, 1)");
  }
}

int edge_index(int source, int target, int nodes) {
  if (source == target || source < 0 || target < 0 || source >= nodes || target >= nodes) {
    throw DimensionError("invalid edge endpoints");
  }
  return source * (nodes - 1) + (target < source ? target : target - 1);
}

std::pair<int, int> edge_endpoints(int edge, int nodes) {
  const int source = edge / (nodes - 1);
  const int rest = edge % (nodes - 1);
  return {source, rest < source ? rest : rest + 1};
}

std::vector<RelationBits> extract_relations(std::span<const Point> now,
                                            std::optional<std::span<const Point>> previous,
                                            const RelationThresholds& th) {
  const int n = static_cast<int>(now.size());
  if (previous && previous->size() != now.size()) {
    throw InputError("extract_relations: previous positions have " +
                     std::to_string(previous->size()) + " objects, expected " +
                     std::to_string(now.size()));
  }
  for (const Point& p : now) {
    if (!p.allFinite()) throw InputError("extract_relations: non-finite position");
  }
  std::vector<RelationBits> out(static_cast<std::size_t>(num_edges(n)), 0);
  for (int v = 0; v < n; ++v) {
    for (int w = 0; w < n; ++w) {
      if (v == w) continue;
      const Point delta = now[static_cast<std::size_t>(w)] - now[static_cast<std::size_t>(v)];
      RelationBits bits = 0;
      if (delta.norm() < th.contact) bits |= bit(Relation::Contact);
      if (delta.x() > th.axis) bits |= bit(Relation::RightOf);
      if (delta.x() < -th.axis) bits |= bit(Relation::LeftOf);
      if (delta.z() > th.axis) bits |= bit(Relation::Above);
      if (delta.z() < -th.axis) bits |= bit(Relation::Below);
      if (delta.y() < -th.axis) bits |= bit(Relation::InFrontOf);
      if (delta.y() > th.axis) bits |= bit(Relation::Behind);

      if (!previous) {
        bits |= bit(Relation::StableDistance);
      } else {
        const auto& prev = *previous;
        const Point pv = prev[static_cast<std::size_t>(v)];
        const Point pw = prev[static_cast<std::size_t>(w)];
        const double change = delta.norm() - (pw - pv).norm();
        if (change < -th.velocity) {
          bits |= bit(Relation::GettingClose);
        } else if (change > th.velocity) {
          bits |= bit(Relation::MovingApart);
        } else {
          bits |= bit(Relation::StableDistance);
        }
        const Point dv = now[static_cast<std::size_t>(v)] - pv;
        const Point dw = now[static_cast<std::size_t>(w)] - pw;
        if (dv.norm() > th.motion && dw.norm() > th.motion &&
            dv.dot(dw) / (dv.norm() * dw.norm()) > th.direction_cosine) {
          bits |= bit(Relation::MovingTogether);
        }
      }
      out[static_cast<std::size_t>(edge_index(v, w, n))] = bits;
    }
  }
  return out;
}

namespace {

RelationBits swap_pair(RelationBits bits, Relation a, Relation b) {
  const bool ha = has(bits, a);
  const bool hb = has(bits, b);
  bits = static_cast<RelationBits>(bits & ~(bit(a) | bit(b)));
  if (ha) bits |= bit(b);
  if (hb) bits |= bit(a);
  return bits;
}

}  // namespace

RelationBits mirror_bits(RelationBits bits) {
  return swap_pair(bits, Relation::LeftOf, Relation::RightOf);
}

RelationBits reverse_bits(RelationBits bits) {
  bits = swap_pair(bits, Relation::LeftOf, Relation::RightOf);
  bits = swap_pair(bits, Relation::Above, Relation::Below);
  return swap_pair(bits, Relation::InFrontOf, Relation::Behind);
}

}  // namespace taskgraph
