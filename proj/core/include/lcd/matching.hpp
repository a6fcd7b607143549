#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "lcd/descriptor.hpp"

namespace lcd {

/// The map: descriptors in insertion order. Built once, then queried;
/// concurrent queries are safe, concurrent add() is not.
class DescriptorDatabase {
 public:
  /// Throws DimMismatch, DuplicateId, or NonFiniteInput.
  void add(Descriptor d);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const Descriptor& entry(std::size_t i) const { return entries_.at(i); }

 private:
  std::size_t dim_ = 0;
  std::vector<Descriptor> entries_;
  std::unordered_set<std::string> ids_;
};

struct Match {
  std::string query_id;
  std::string matched_id;
  std::size_t matched_index = 0;
  double distance = 0.0;
};

/// Entries with |index - query_index| < radius are skipped. radius 0 disables.
struct ExclusionWindow {
  std::size_t query_index = 0;
  std::size_t radius = 0;
};

/// Exact Euclidean nearest neighbor; ties go to the earliest entry.
/// Throws EmptyDatabase (also when the window excludes everything) or DimMismatch.
Match nearest_neighbor(const Descriptor& query, const DescriptorDatabase& db,
                       const ExclusionWindow& window = {});

struct LoopDecision {
  Match match;
  bool accepted = false;  // match.distance <= threshold
};

/// One decision per query, in query order. With exclusion_radius > 0 the
/// query's position in `queries` is its position in the database sequence.
std::vector<LoopDecision> detect_loops(const std::vector<Descriptor>& queries,
                                       const DescriptorDatabase& db, double threshold,
                                       std::size_t exclusion_radius = 0, std::size_t jobs = 1);

}  // namespace lcd
