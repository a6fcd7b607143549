#include "lcd/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "lcd/error.hpp"
#include "lcd/file_util.hpp"

namespace lcd {

namespace fs = std::filesystem;

GroundTruth::GroundTruth(std::vector<std::string> query_ids, std::vector<std::string> reference_ids,
                         const std::vector<IdPair>& pairs)
    : query_ids_(std::move(query_ids)), reference_ids_(std::move(reference_ids)) {
  known_queries_.insert(query_ids_.begin(), query_ids_.end());
  const std::set<std::string> refs(reference_ids_.begin(), reference_ids_.end());
  for (const auto& p : pairs) {
    if (!known_queries_.contains(p.first)) {
      throw Error(ErrorCode::kConfig, "ground-truth query '" + p.first + "' is not in the query set");
    }
    if (!refs.contains(p.second)) {
      throw Error(ErrorCode::kConfig, "ground-truth reference '" + p.second +
                                          "' is not in the reference set");
    }
    pairs_.insert(p);
    positive_queries_.insert(p.first);
  }
}

bool GroundTruth::is_true(const std::string& query, const std::string& reference) const {
  return pairs_.contains({query, reference});
}

bool GroundTruth::knows_query(const std::string& query) const { return known_queries_.contains(query); }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<IdPair> read_ground_truth_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  std::set<IdPair> seen;
  std::vector<IdPair> out;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      if (t != "query_id,reference_id") {
        throw Error(ErrorCode::kFormat, path.string() + ": expected header 'query_id,reference_id'");
      }
      header = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": expected two comma-separated ids");
    }
    IdPair p{trim(std::string_view(t).substr(0, comma)), trim(std::string_view(t).substr(comma + 1))};
    if (p.first.empty() || p.second.empty()) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) + ": empty id");
    }
    if (seen.insert(p).second) out.push_back(std::move(p));
  }
  if (!header) throw Error(ErrorCode::kFormat, path.string() + ": missing header");
  return out;
}

void write_ground_truth_csv(const fs::path& path, const std::vector<IdPair>& pairs) {
  std::string s = "query_id,reference_id\n";
  for (const auto& [q, r] : pairs) s += q + "," + r + "\n";
  write_file(path, s);
}

PrCurve pr_curve(const std::vector<Match>& matches, const GroundTruth& gt) {
  for (const auto& m : matches) {
    if (!gt.knows_query(m.query_id)) {
      throw Error(ErrorCode::kUnknownQuery, "query '" + m.query_id + "' is not in the ground truth");
    }
  }
  PrCurve curve;
  curve.positives = gt.positive_queries();
  if (curve.positives == 0) {
    throw Error(ErrorCode::kEmptyGroundTruth, "no query has a true loop closure");
  }

  std::vector<std::pair<double, bool>> scored;
  scored.reserve(matches.size());
  for (const auto& m : matches) scored.emplace_back(m.distance, gt.is_true(m.query_id, m.matched_id));
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::size_t tp = 0;
  std::size_t fp = 0;
  const auto denom = static_cast<double>(curve.positives);
  for (std::size_t i = 0; i < scored.size();) {
    const double t = scored[i].first;
    for (; i < scored.size() && scored[i].first == t; ++i) {
      if (scored[i].second) {
        ++tp;
      } else {
        ++fp;
      }
    }
    PrPoint p;
    p.threshold = t;
    p.true_positives = tp;
    p.false_positives = fp;
    p.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / denom;
    curve.points.push_back(p);
  }
  curve.ap = curve.points.empty() ? 0.0 : average_precision(curve);
  return curve;
}

double average_precision(const PrCurve& curve) {
  if (curve.points.empty()) throw Error(ErrorCode::kEmptyCurve, "precision-recall curve has no points");
  // Recall levels are exact ratios tp / positives, so keying on tp is exact.
  std::map<std::size_t, double> best;
  for (const auto& p : curve.points) {
    if (p.true_positives == 0) continue;
    auto [it, inserted] = best.try_emplace(p.true_positives, p.precision);
    if (!inserted) it->second = std::max(it->second, p.precision);
  }
  if (best.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [level, precision] : best) sum += precision;
  return sum / static_cast<double>(best.size());
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_pr_csv(const fs::path& path, const PrCurve& curve) {
  std::string s = "threshold,precision,recall\n";
  for (const auto& p : curve.points) {
    s += format_number(p.threshold) + "," + format_number(p.precision) + "," + format_number(p.recall) + "\n";
  }
  write_file(path, s);
}

namespace {

std::string xml_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_pr_svg(const fs::path& path, const PrCurve& curve, const std::string& title) {
  constexpr double kLeft = 60, kTop = 40, kSize = 320;
  auto px = [&](double recall) { return fixed2(kLeft + recall * kSize); };
  auto py = [&](double precision) { return fixed2(kTop + (1.0 - precision) * kSize); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"420\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"420\" height=\"420\" fill=\"white\"/>\n";
  s << "<text x=\"210\" y=\"22\" text-anchor=\"middle\">" << xml_escape(title)
    << " (AP " << fixed2(curve.ap) << ")</text>\n";
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kSize << "\" height=\"" << kSize
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double f = i / 10.0;
    s << "<text x=\"" << px(f) << "\" y=\"" << fixed2(kTop + kSize + 16)
      << "\" text-anchor=\"middle\">" << fixed2(f) << "</text>\n";
    s << "<text x=\"" << fixed2(kLeft - 6) << "\" y=\"" << fixed2(kTop + (1.0 - f) * kSize + 4)
      << "\" text-anchor=\"end\">" << fixed2(f) << "</text>\n";
  }
  s << "<text x=\"210\" y=\"405\" text-anchor=\"middle\">recall</text>\n";
  s << "<text x=\"16\" y=\"200\" text-anchor=\"middle\" transform=\"rotate(-90 16 200)\">precision</text>\n";
  s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i) s << ' ';
    s << px(curve.points[i].recall) << ',' << py(curve.points[i].precision);
  }
  s << "\"/>\n</svg>\n";
  write_file(path, s.str());
}

}  // namespace lcd
