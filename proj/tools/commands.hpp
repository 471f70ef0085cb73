#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artifacts.hpp"

namespace fseg3d::cli {

struct SimulateOptions {
  std::optional<std::filesystem::path> scene;  ///< default street canyon when absent
  std::optional<std::uint64_t> seed;           ///< overrides the spec's noise seed
  std::optional<int> num_steps;                ///< overrides the spec's step count
};

struct PredictOptions {
  std::filesystem::path input;
  int frame = 0;
  int steps = 1;
  std::string ego = "file";  ///< file | copy | lstm:<checkpoint>
  std::optional<std::filesystem::path> ego_file;
  int history = 4;
  bool inpaint = true;
  int max_passes = 64;
  int num_classes = 19;
};

struct TrainOptions {
  std::vector<std::filesystem::path> trajectories;
  std::string synthetic;  ///< "" or constant_velocity | constant_acceleration
  int synthetic_count = 2000;
  int synthetic_length = 10;
  std::string preset = "desk";  ///< desk | long
  std::optional<double> lr_start, lr_end, momentum;
  std::optional<bool> normalize;
  std::int64_t total_steps = 50'000;
  int batch_size = 32;
  std::int64_t log_interval = 1'000;
  int history = 4;
  std::uint64_t seed = 0;
};

struct EvalOptions {
  std::vector<std::filesystem::path> pred;
  std::vector<std::filesystem::path> gt;
  int num_classes = 19;
  bool ignore_missing = false;
  std::string method = "prediction";
  int transforms = 1;
  bool error_maps = false;
};

struct ReportOptions {
  std::vector<std::filesystem::path> inputs;
};

Artifacts run_simulate(const SimulateOptions& opt);
Artifacts run_predict(const PredictOptions& opt);
Artifacts run_train(const TrainOptions& opt);
Artifacts run_eval(const EvalOptions& opt);
Artifacts run_report(const ReportOptions& opt);

}  // namespace fseg3d::cli
