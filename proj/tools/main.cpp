// fseg3d: simulate, predict, train-ego, eval, report.
//
// Failures print exactly one line to stderr,
//   fseg3d: error: kind=<usage|invalid_argument|format_error|io_error|internal> message=<text>
// and exit with 2 (usage) or 1 (everything else). No output file is left behind.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "fseg3d/errors.hpp"
#include "fseg3d/parallel.hpp"

namespace {

int fail(std::string_view kind, std::string message, int status) {
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "fseg3d: error: kind=" << kind << " message=" << message << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fseg3d::cli;
  CLI::App app{"Future semantic segmentation by 3D warping of the current frame"};
  app.require_subcommand(1);
  std::filesystem::path out_dir;

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Render a frame bundle from a scene spec");
  simulate->add_option("--scene", sim.scene, "Scene spec JSON (default: street canyon)")->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "Override the trajectory noise seed");
  simulate->add_option("--num-steps", sim.num_steps, "Override the number of motions");
  simulate->add_option("--out", out_dir, "Output directory")->required();

  PredictOptions pred;
  auto* predict = app.add_subcommand("predict", "Predict future segmentations from one bundle frame");
  predict->add_option("--input", pred.input, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--frame", pred.frame, "Source frame index")->capture_default_str();
  predict->add_option("--steps", pred.steps, "Number of motion transforms")->capture_default_str();
  predict->add_option("--ego", pred.ego, "Ego-motion source: file, copy or lstm:<checkpoint>")->capture_default_str();
  predict->add_option("--ego-file", pred.ego_file, "Trajectory CSV of future motions for --ego file")
      ->check(CLI::ExistingFile);
  predict->add_option("--history", pred.history, "Observed motions fed to the LSTM")->capture_default_str();
  predict->add_flag("--inpaint,!--no-inpaint", pred.inpaint, "Fill holes after each step (default on)");
  predict->add_option("--max-passes", pred.max_passes, "Inpainting pass limit")->capture_default_str();
  predict->add_option("--num-classes", pred.num_classes, "Label count of the bundle")->capture_default_str();
  predict->add_option("--out", out_dir, "Output directory")->required();

  TrainOptions train;
  auto* train_ego = app.add_subcommand("train-ego", "Train the ego-motion LSTM");
  train_ego->add_option("--trajectories", train.trajectories, "Trajectory CSV files")->check(CLI::ExistingFile);
  train_ego->add_option("--synthetic", train.synthetic,
                        "Also sample trajectories: constant_velocity or constant_acceleration");
  train_ego->add_option("--synthetic-count", train.synthetic_count)->capture_default_str();
  train_ego->add_option("--synthetic-length", train.synthetic_length)->capture_default_str();
  train_ego->add_option("--preset", train.preset, "desk (1e-1 -> 1e-3, scaled inputs) or long (1e-4 -> 1e-6, for ~1M steps)")
      ->capture_default_str();
  train_ego->add_option("--lr-start", train.lr_start);
  train_ego->add_option("--lr-end", train.lr_end);
  train_ego->add_option("--momentum", train.momentum);
  train_ego->add_flag("--normalize,!--no-normalize", train.normalize, "Override the preset's input scaling");
  train_ego->add_option("--steps", train.total_steps, "Optimiser steps")->capture_default_str();
  train_ego->add_option("--batch-size", train.batch_size)->capture_default_str();
  train_ego->add_option("--log-interval", train.log_interval)->capture_default_str();
  train_ego->add_option("--history", train.history)->capture_default_str();
  train_ego->add_option("--seed", train.seed)->capture_default_str();
  train_ego->add_option("--out", out_dir, "Output directory")->required();

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", ev.pred, "Predicted segmentation PGMs")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", ev.gt, "Ground-truth PGMs, paired in order")->required()->check(CLI::ExistingFile);
  eval->add_option("--num-classes", ev.num_classes)->capture_default_str();
  eval->add_flag("--ignore-missing", ev.ignore_missing, "Do not count unpredicted pixels as wrong");
  eval->add_option("--method", ev.method, "Method name for the CSV row")->capture_default_str();
  eval->add_option("--transforms", ev.transforms, "Motion transform count for the CSV row")->capture_default_str();
  eval->add_flag("--error-map", ev.error_maps, "Also write error map PPMs");
  eval->add_option("--out", out_dir, "Output directory")->required();

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "Tabulate eval CSVs by transform count");
  report->add_option("--inputs", rep.inputs, "eval.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    fseg3d::set_num_threads(fseg3d::threads_from_env());
    Artifacts artifacts;
    if (*simulate) artifacts = run_simulate(sim);
    if (*predict) artifacts = run_predict(pred);
    if (*train_ego) artifacts = run_train(train);
    if (*eval) artifacts = run_eval(ev);
    if (*report) artifacts = run_report(rep);
    artifacts.commit(out_dir);
  } catch (const fseg3d::InvalidArgument& e) {
    return fail("invalid_argument", e.what(), 1);
  } catch (const fseg3d::FormatError& e) {
    return fail("format_error", e.what(), 1);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io_error", e.what(), 1);
  } catch (const std::runtime_error& e) {
    return fail("io_error", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
