#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lcd/matching.hpp"

namespace lcd {

using IdPair = std::pair<std::string, std::string>;  // (query_id, reference_id)

/// True loop closures for one query set against one reference set.
class GroundTruth {
 public:
  GroundTruth() = default;
  /// Throws ConfigError when a pair names an id missing from the lists.
  GroundTruth(std::vector<std::string> query_ids, std::vector<std::string> reference_ids,
              const std::vector<IdPair>& pairs);

  const std::vector<std::string>& query_ids() const noexcept { return query_ids_; }
  const std::vector<std::string>& reference_ids() const noexcept { return reference_ids_; }
  const std::set<IdPair>& pairs() const noexcept { return pairs_; }

  bool is_true(const std::string& query, const std::string& reference) const;
  bool knows_query(const std::string& query) const;
  /// Queries with at least one true pair: the recall denominator.
  std::size_t positive_queries() const noexcept { return positive_queries_.size(); }

 private:
  std::vector<std::string> query_ids_;
  std::vector<std::string> reference_ids_;
  std::set<IdPair> pairs_;
  std::set<std::string> known_queries_;
  std::set<std::string> positive_queries_;
};

/// CSV with header "query_id,reference_id", one pair per row. Blank lines are
/// skipped; duplicate rows collapse. Throws IoError or FormatError.
std::vector<IdPair> read_ground_truth_csv(const std::filesystem::path& path);
void write_ground_truth_csv(const std::filesystem::path& path, const std::vector<IdPair>& pairs);

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // ascending threshold
  double ap = 0.0;
  std::size_t positives = 0;    // recall denominator
};

/// Sweeps the acceptance threshold over the sorted distinct match distances.
/// A match counts as a true positive when (query, matched) is a ground-truth
/// pair; precision with no acceptances is 1. Throws UnknownQuery or
/// EmptyGroundTruth.
PrCurve pr_curve(const std::vector<Match>& matches, const GroundTruth& gt);

/// Mean over the distinct positive recall levels of the best precision
/// reached at that level; 0 when recall never leaves 0. Throws EmptyCurve.
double average_precision(const PrCurve& curve);

/// Shortest decimal that round-trips the double.
std::string format_number(double v);

void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve);
void write_pr_svg(const std::filesystem::path& path, const PrCurve& curve, const std::string& title);

}  // namespace lcd
