#include "lcd/matching.hpp"

#include <cmath>
#include <limits>

#include "lcd/error.hpp"
#include "lcd/parallel.hpp"

namespace lcd {

void DescriptorDatabase::add(Descriptor d) {
  if (!entries_.empty() && d.dim() != dim_) {
    throw Error(ErrorCode::kDimMismatch, "database dim " + std::to_string(dim_) + ", entry '" +
                                             d.image_id + "' has " + std::to_string(d.dim()));
  }
  for (double v : d.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "entry '" + d.image_id + "' is not finite");
  }
  if (!ids_.insert(d.image_id).second) {
    throw Error(ErrorCode::kDuplicateId, "image id '" + d.image_id + "' already in database");
  }
  dim_ = d.dim();
  entries_.push_back(std::move(d));
}

Match nearest_neighbor(const Descriptor& query, const DescriptorDatabase& db,
                       const ExclusionWindow& window) {
  if (db.empty()) throw Error(ErrorCode::kEmptyDatabase, "nearest-neighbor query on empty database");
  if (query.dim() != db.dim()) {
    throw Error(ErrorCode::kDimMismatch, "query dim " + std::to_string(query.dim()) +
                                             ", database dim " + std::to_string(db.dim()));
  }
  std::size_t best = db.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < db.size(); ++i) {
    if (window.radius > 0) {
      const std::size_t gap = i > window.query_index ? i - window.query_index : window.query_index - i;
      if (gap < window.radius) continue;
    }
    const auto& v = db.entry(i).values;
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double diff = query.values[j] - v[j];
      s += diff * diff;
    }
    if (s < best_d) {
      best_d = s;
      best = i;
    }
  }
  if (best == db.size()) {
    throw Error(ErrorCode::kEmptyDatabase, "exclusion window removes every database entry for '" +
                                               query.image_id + "'");
  }
  return Match{query.image_id, db.entry(best).image_id, best, std::sqrt(best_d)};
}

std::vector<LoopDecision> detect_loops(const std::vector<Descriptor>& queries,
                                       const DescriptorDatabase& db, double threshold,
                                       std::size_t exclusion_radius, std::size_t jobs) {
  std::vector<LoopDecision> out(queries.size());
  parallel_for(queries.size(), jobs, [&](std::size_t q) {
    Match m = nearest_neighbor(queries[q], db, ExclusionWindow{q, exclusion_radius});
    const bool accepted = m.distance <= threshold;
    out[q] = LoopDecision{std::move(m), accepted};
  });
  return out;
}

}  // namespace lcd
