#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvbridge/scene.hpp"
#include "mvbridge/train.hpp"

namespace mvbridge {

// File-level experiment description. JSON round-trips losslessly; unknown
// keys are rejected so config typos fail loudly.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int scenes = 4;
  int resolution = 64;
  std::vector<int> severities{3};
  int splits = 1;
  int views_per_set = 2;
  int refs_per_set = 1;
  double jitter_radians = kDefaultJitterRadians;
  double jitter_units = kDefaultJitterUnits;
  ModelConfig model;
  double lambda_lpips = kDefaultLambdaLpips;
  double lambda_gram = kDefaultLambdaGram;
  double sigma = kDefaultSigma;
  AdamConfig optimizer;
  int steps = 2000;
  std::uint64_t extractor_seed = 99;
  int checkpoint_every = 500;
  bool use_reference = true;

  TrainConfig train_config() const;
};

std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Applies a dotted-path override such as "optimizer.learning_rate=3e-4" or
// "severities=[1,3]" on top of the config's JSON form.
ExperimentConfig apply_override(const ExperimentConfig& config, const std::string& key_value);

// --- dataset files ----------------------------------------------------

// Writes scenes x severities x splits ViewSets as PPM images plus
// manifest.json; returns the manifest path. Deterministic and idempotent.
std::string generate_dataset(const ExperimentConfig& config, const std::string& out_dir);

std::vector<ViewSet> load_dataset(const std::string& manifest_path);

// --- commands ----------------------------------------------------------

struct TrainSummary {
  std::string checkpoint_dir;
  std::string log_csv;
  std::int64_t steps_run = 0;
};

TrainSummary run_train(const ExperimentConfig& config, const std::string& manifest_path, const std::string& out_dir,
                       bool resume);

// Refines every PPM in input_dir (lexicographic order) and writes results
// under out_dir with the same file names.
std::vector<std::string> run_infer(const std::string& checkpoint_dir, const std::string& input_dir,
                                   const std::string& reference_dir, int steps, const std::string& out_dir);

struct EvalSummary {
  std::string csv_path;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_l1 = 0.0;
  std::optional<double> cvsc;
};

EvalSummary run_eval(const std::string& refined_dir, const std::string& clean_dir, const std::string& out_csv);

struct SweepCell {
  int degraded = 0;
  int references = 0;
  bool failed = false;
  std::string reason;
  std::optional<double> cvsc;
  double psnr_db = 0.0;
  double pixel_l1 = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // row-major over (degraded 1..D, refs 0..R)
  std::string csv_path;
  std::vector<std::string> heatmaps;
};

SweepResult run_sweep(const std::string& checkpoint_dir, const std::string& manifest_path, int max_degraded,
                      int max_references, const std::string& out_dir);

}  // namespace mvbridge
