#include "reporting.hpp"

#include <cstdio>
#include <sstream>

#include "micrometric/version.hpp"

namespace micrometric::cli {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

namespace {

void append_optional(std::ostringstream& out, const char* key, const std::optional<double>& v) {
  out << ",\"" << key << "\":";
  if (v.has_value()) {
    out << fmt_double(*v);
  } else {
    out << "null";
  }
}

}  // namespace

std::string render_score_json(const ScoreReport& report) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"schema\": \"micrometric-score-report/1\",\n";
  out << "  \"tool_version\": \"" << kToolVersion << "\",\n";
  out << "  \"calibration_digest\": ";
  if (report.calibration_digest.empty()) {
    out << "null,\n";
  } else {
    out << "\"" << json_escape(report.calibration_digest) << "\",\n";
  }
  out << "  \"metrics\": [";
  for (std::size_t i = 0; i < report.metrics.size(); ++i) {
    if (i) out << ",";
    out << "\"" << json_escape(report.metrics[i]) << "\"";
  }
  out << "],\n";
  out << "  \"records\": [\n";
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const ScoreRecord& r = report.records[i];
    out << "    {\"pair_id\":\"" << json_escape(r.pair_id) << "\",\"metric\":\"" << json_escape(r.metric)
        << "\",\"value\":" << fmt_double(r.value);
    append_optional(out, "luminance", r.luminance);
    append_optional(out, "contrast", r.contrast);
    append_optional(out, "structure", r.structure);
    append_optional(out, "background_ssim", r.background_ssim);
    append_optional(out, "foreground_ssim", r.foreground_ssim);
    out << "}" << (i + 1 < report.records.size() ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"summary\": [\n";
  for (std::size_t i = 0; i < report.summary.size(); ++i) {
    const MetricSummary& s = report.summary[i];
    out << "    {\"metric\":\"" << json_escape(s.metric) << "\",\"mean\":" << fmt_double(s.mean)
        << ",\"std\":" << fmt_double(s.std_dev) << ",\"count\":" << s.count << "}"
        << (i + 1 < report.summary.size() ? "," : "") << "\n";
  }
  out << "  ]\n";
  out << "}\n";
  return out.str();
}

std::string render_score_csv(const ScoreReport& report) {
  std::ostringstream out;
  out << "pair_id,metric,value,luminance,contrast,structure,background_ssim,foreground_ssim\n";
  auto cell = [](const std::optional<double>& v) { return v.has_value() ? fmt_double(*v) : std::string(); };
  for (const ScoreRecord& r : report.records) {
    out << r.pair_id << "," << r.metric << "," << fmt_double(r.value) << "," << cell(r.luminance) << ","
        << cell(r.contrast) << "," << cell(r.structure) << "," << cell(r.background_ssim) << ","
        << cell(r.foreground_ssim) << "\n";
  }
  return out.str();
}

}  // namespace micrometric::cli
