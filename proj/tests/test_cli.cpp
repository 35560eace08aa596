#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "micrometric/calibration.hpp"
#include "micrometric/dataset_io.hpp"
#include "micrometric/synthetic.hpp"
#include "test_support.hpp"

using namespace micrometric;
namespace fs = std::filesystem;

#ifndef MICROMETRIC_CLI_PATH
#error "MICROMETRIC_CLI_PATH must point at the CLI binary"
#endif

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(MICROMETRIC_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                          err.string();
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WEXITSTATUS(status);
  result.out = slurp(out);
  result.err = slurp(err);
  return result;
}

struct CliDir {
  fs::path path;
  explicit CliDir(const std::string& name) {
    path = fs::temp_directory_path() / ("micrometric_cli_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~CliDir() { fs::remove_all(path); }
};

bool identical_files(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

}  // namespace

TEST_CASE("synth writes the promised layout and is seed-deterministic") {
  CliDir dir("synth");
  const std::string synth_flags =
      " --pairs 3 --height 64 --width 64 --scale 5 --seed 11 --poisson-gain 0 --read-noise 0";
  CliResult r = run_cli("synth --out " + (dir.path / "a").string() + synth_flags, dir.path);
  REQUIRE(r.exit_code == 0);

  std::size_t image_files = 0;
  for (const auto& entry : fs::directory_iterator(dir.path / "a")) {
    if (entry.path().extension() == ".mfr") ++image_files;
  }
  CHECK(image_files == 6);
  CHECK(fs::exists(dir.path / "a" / "manifest.jsonl"));
  CHECK(fs::exists(dir.path / "a" / "metadata.json"));
  {
    std::ifstream in(dir.path / "a" / "manifest.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++lines;
    CHECK(lines == 3);
  }

  r = run_cli("synth --out " + (dir.path / "b").string() + synth_flags, dir.path);
  REQUIRE(r.exit_code == 0);
  for (const auto& entry : fs::directory_iterator(dir.path / "a")) {
    CHECK(identical_files(entry.path(), dir.path / "b" / entry.path().filename()));
  }
}

TEST_CASE("calibrate end-to-end recovers the synth scale and is deterministic") {
  CliDir dir("calibrate");
  REQUIRE(run_cli("synth --out " + (dir.path / "data").string() +
                      " --pairs 4 --height 96 --width 96 --scale 5 --seed 21 --poisson-gain 0 --read-noise 0",
                  dir.path)
              .exit_code == 0);
  const std::string manifest = (dir.path / "data" / "manifest.jsonl").string();

  CliResult r = run_cli("calibrate --manifest " + manifest + " --out " + (dir.path / "cal.txt").string(), dir.path);
  REQUIRE(r.exit_code == 0);
  const DatasetCalibration cal = load_calibration(dir.path / "cal.txt");
  CHECK(cal.alpha == doctest::Approx(5.0).epsilon(0.01));
  CHECK(r.out.find("alpha") != std::string::npos);
  CHECK(r.out.find("iterations") != std::string::npos);

  // Rerun on identical inputs: byte-identical calibration file.
  REQUIRE(run_cli("calibrate --manifest " + manifest + " --out " + (dir.path / "cal2.txt").string(), dir.path)
              .exit_code == 0);
  CHECK(identical_files(dir.path / "cal.txt", dir.path / "cal2.txt"));
}

TEST_CASE("calibrate rejects an empty manifest with exit 2") {
  CliDir dir("empty");
  std::ofstream(dir.path / "empty.jsonl").close();
  const CliResult r = run_cli(
      "calibrate --manifest " + (dir.path / "empty.jsonl").string() + " --out " + (dir.path / "cal.txt").string(),
      dir.path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("empty manifest") != std::string::npos);
}

TEST_CASE("degenerate constant dataset fails numerically with exit 3") {
  CliDir dir("exit3");
  const Image flat = testutil::constant_image(32, 32, 7.0);
  save_image(flat, dir.path / "flat_gt.mfr", ImageFormat::raw_float);
  save_image(flat, dir.path / "flat_pred.mfr", ImageFormat::raw_float);
  {
    std::ofstream out(dir.path / "m.jsonl");
    out << R"({"id":"flat","gt":"flat_gt.mfr","pred":"flat_pred.mfr"})" << "\n";
  }
  const CliResult r = run_cli(
      "calibrate --manifest " + (dir.path / "m.jsonl").string() + " --out " + (dir.path / "cal.txt").string(),
      dir.path);
  CHECK(r.exit_code == 3);
}

TEST_CASE("score requires a calibration for microssim (exit 4)") {
  CliDir dir("exit4");
  REQUIRE(run_cli("synth --out " + (dir.path / "data").string() + " --pairs 1 --height 48 --width 48 --seed 3",
                  dir.path)
              .exit_code == 0);
  const CliResult r = run_cli("score --manifest " + (dir.path / "data" / "manifest.jsonl").string() +
                                  " --metric microssim --out " + (dir.path / "r.json").string(),
                              dir.path);
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("calibration required") != std::string::npos);
}

TEST_CASE("unknown metric exits 2") {
  CliDir dir("badmetric");
  REQUIRE(run_cli("synth --out " + (dir.path / "data").string() + " --pairs 1 --height 48 --width 48 --seed 4",
                  dir.path)
              .exit_code == 0);
  const CliResult r = run_cli("score --manifest " + (dir.path / "data" / "manifest.jsonl").string() +
                                  " --metric psnr --out " + (dir.path / "r.json").string(),
                              dir.path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("unknown metric") != std::string::npos);
}

TEST_CASE("scoring an identical-pair manifest gives ones and consistent summaries") {
  CliDir dir("ones");
  // Build a manifest whose prediction is the ground truth itself.
  REQUIRE(run_cli("synth --out " + (dir.path / "data").string() +
                      " --pairs 2 --height 96 --width 96 --seed 31 --poisson-gain 0 --read-noise 0 --scale 1 "
                      "--beta-gt 100 --beta-pred 100",
                  dir.path)
              .exit_code == 0);
  const fs::path data = dir.path / "data";
  {
    std::ofstream manifest(data / "self.jsonl");
    manifest << R"({"id":"p0","gt":"pair0000_gt.mfr","pred":"pair0000_gt.mfr"})" << "\n";
    manifest << R"({"id":"p1","gt":"pair0001_gt.mfr","pred":"pair0001_gt.mfr"})" << "\n";
  }
  REQUIRE(run_cli("calibrate --manifest " + (data / "self.jsonl").string() + " --out " +
                      (dir.path / "cal.txt").string(),
                  dir.path)
              .exit_code == 0);
  const CliResult r = run_cli("score --manifest " + (data / "self.jsonl").string() + " --calibration " +
                                  (dir.path / "cal.txt").string() +
                                  " --metric microssim,ssim,zscore-ssim,care-ssim,ms-ssim,microms3im --levels 3 "
                                  "--out " +
                                  (dir.path / "report.json").string(),
                              dir.path);
  REQUIRE(r.exit_code == 0);

  const nlohmann::json report = nlohmann::json::parse(slurp(dir.path / "report.json"));
  CHECK(report.at("schema") == "micrometric-score-report/1");
  for (const auto& record : report.at("records")) {
    CHECK(std::fabs(record.at("value").get<double>() - 1.0) <= 1e-9);
  }
  // Summary mean/std recompute from the records.
  for (const auto& summary : report.at("summary")) {
    const std::string metric = summary.at("metric");
    std::vector<double> values;
    for (const auto& record : report.at("records")) {
      if (record.at("metric") == metric) values.push_back(record.at("value").get<double>());
    }
    REQUIRE(values.size() == summary.at("count").get<std::size_t>());
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    CHECK(summary.at("mean").get<double>() == doctest::Approx(mean).epsilon(1e-15));
    CHECK(summary.at("std").get<double>() == doctest::Approx(std::sqrt(var / values.size())).epsilon(1e-12));
  }
}

TEST_CASE("microssim beats care-ssim on background sub-scores for blurred predictions") {
  CliDir dir("bgsub");
  // Predictions keep blob positions/amplitudes but double the widths, the
  // blurred-output failure mode an MSE fit cannot undo.
  {
    PairManifest manifest;
    SynthParams params;
    params.height = 192;
    params.width = 192;
    params.n_blobs = 9;
    params.sigma_range = {3.0, 6.0};
    params.amplitude_range = {1500.0, 4000.0};
    params.scale = 5.0;
    params.beta_gt = 100.0;
    params.beta_pred = 110.0;
    params.poisson_gain = 0.0;
    params.read_noise_sigma = 1.5;
    for (int i = 0; i < 3; ++i) {
      params.seed = 7300 + static_cast<std::uint64_t>(i);
      SynthPair sharp = generate_pair(params);
      SynthParams widened = params;
      widened.sigma_range = {6.0, 12.0};
      SynthPair smeared = generate_pair(widened);
      const std::string id = "p" + std::to_string(i);
      save_image(sharp.gt, dir.path / (id + "_gt.mfr"), ImageFormat::raw_float);
      save_image(smeared.low, dir.path / (id + "_pred.mfr"), ImageFormat::raw_float);
      manifest.entries.push_back({id, id + "_gt.mfr", id + "_pred.mfr"});
    }
    save_manifest(manifest, dir.path / "manifest.jsonl");
  }
  const std::string manifest = (dir.path / "manifest.jsonl").string();
  REQUIRE(
      run_cli("calibrate --manifest " + manifest + " --out " + (dir.path / "cal.txt").string(), dir.path).exit_code ==
      0);
  REQUIRE(run_cli("score --manifest " + manifest + " --calibration " + (dir.path / "cal.txt").string() +
                      " --metric microssim,care-ssim --out " + (dir.path / "report.json").string(),
                  dir.path)
              .exit_code == 0);

  const nlohmann::json report = nlohmann::json::parse(slurp(dir.path / "report.json"));
  std::map<std::string, double> micro_bg, care_bg;
  for (const auto& record : report.at("records")) {
    if (record.at("background_ssim").is_null()) continue;
    const std::string id = record.at("pair_id");
    if (record.at("metric") == "microssim") micro_bg[id] = record.at("background_ssim").get<double>();
    if (record.at("metric") == "care-ssim") care_bg[id] = record.at("background_ssim").get<double>();
  }
  REQUIRE(micro_bg.size() == 3);
  REQUIRE(care_bg.size() == 3);
  for (const auto& [id, value] : micro_bg) {
    CHECK(value > care_bg.at(id));
  }
}

TEST_CASE("diagnose artifacts: zero-offset row matches, alpha sweep is unimodal at the fit") {
  CliDir dir("diag");
  REQUIRE(run_cli("synth --out " + (dir.path / "data").string() +
                      " --pairs 3 --height 128 --width 128 --scale 4 --seed 41 --poisson-gain 1 --read-noise 4 "
                      "--amp-low 800 --amp-high 3500 --blobs 20 --beta-gt 20 --beta-pred 24 --format pgm16",
                  dir.path)
              .exit_code == 0);
  const std::string manifest = (dir.path / "data" / "manifest.jsonl").string();
  REQUIRE(
      run_cli("calibrate --manifest " + manifest + " --out " + (dir.path / "cal.txt").string(), dir.path).exit_code ==
      0);
  const DatasetCalibration cal = load_calibration(dir.path / "cal.txt");

  const CliResult r = run_cli("diagnose --manifest " + manifest + " --calibration " + (dir.path / "cal.txt").string() +
                                  " --out " + (dir.path / "diag").string(),
                              dir.path);
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir.path / "diag" / "saturation.json"));

  // Saturation table: the raw pipeline saturates at least as hard as the full
  // calibrated pipeline, per component.
  {
    std::ifstream in(dir.path / "diag" / "saturation.csv");
    std::string line;
    std::getline(in, line);
    std::map<std::string, double> mean_delta;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string variant, component, mean;
      std::getline(ss, variant, ',');
      std::getline(ss, component, ',');
      std::getline(ss, mean, ',');
      mean_delta[variant + "/" + component] = std::stod(mean);
    }
    for (const char* component : {"luminance", "contrast", "structure"}) {
      CHECK(mean_delta.at(std::string("raw/") + component) >= mean_delta.at(std::string("full/") + component));
    }
  }

  // Offset sweep: the d = 0 row must reproduce the unswept vanilla mssim.
  {
    std::ifstream in(dir.path / "diag" / "offset_sweep.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "offset,mean_luminance,mean_ssim,microssim_mean");
    CHECK(first.rfind("0,", 0) == 0);
  }

  // Alpha sweep: exactly one strict interior maximum, at the calibrated
  // alpha within one grid step.
  {
    std::ifstream in(dir.path / "diag" / "alpha_sweep.csv");
    std::string line;
    std::getline(in, line);
    std::vector<double> alphas, values;
    std::vector<int> argmax_flags;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string a, v, m;
      std::getline(ss, a, ',');
      std::getline(ss, v, ',');
      std::getline(ss, m, ',');
      alphas.push_back(std::stod(a));
      values.push_back(std::stod(v));
      argmax_flags.push_back(std::stoi(m));
    }
    REQUIRE(values.size() >= 3);
    int maxima = 0;
    std::size_t max_at = 0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
      if (values[i] > values[i - 1] && values[i] > values[i + 1]) {
        ++maxima;
        max_at = i;
      }
    }
    CHECK(maxima == 1);
    CHECK(argmax_flags[max_at] == 1);
    const double step = std::log(alphas[1] / alphas[0]);
    CHECK(std::fabs(std::log(alphas[max_at] / cal.alpha)) <= step * 1.0001);
  }
}
