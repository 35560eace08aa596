#pragma once

#include <optional>
#include <string>
#include <vector>

namespace micrometric::cli {

// Doubles are serialized with 17 significant digits so every value
// round-trips exactly; reports must be byte-stable across runs and thread
// counts.
std::string fmt_double(double v);
std::string json_escape(const std::string& s);

struct ScoreRecord {
  std::string pair_id;
  std::string metric;
  double value = 0.0;
  std::optional<double> luminance;
  std::optional<double> contrast;
  std::optional<double> structure;
  std::optional<double> background_ssim;
  std::optional<double> foreground_ssim;
};

struct MetricSummary {
  std::string metric;
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;
};

struct ScoreReport {
  std::string calibration_digest;  // empty when no calibration in play
  std::vector<std::string> metrics;
  std::vector<ScoreRecord> records;
  std::vector<MetricSummary> summary;
};

std::string render_score_json(const ScoreReport& report);
std::string render_score_csv(const ScoreReport& report);

}  // namespace micrometric::cli
