#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string_view>

#include "fseg3d/errors.hpp"
#include "fseg3d/eval.hpp"
#include "fseg3d/forecast.hpp"
#include "fseg3d/format.hpp"
#include "fseg3d/io.hpp"
#include "fseg3d/scene_spec.hpp"
#include "fseg3d/simulator.hpp"
#include "fseg3d/warp.hpp"

namespace fseg3d::cli {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string pred_name(int step, bool raw) {
  return "pred_step" + std::to_string(step) + (raw ? "_raw" : "") + ".pgm";
}

std::vector<EgoMotion> motions_for(const PredictOptions& opt, const BundleSet& bundle) {
  const auto& traj = bundle.trajectory;
  const auto n = static_cast<std::size_t>(opt.steps);
  const auto frame = static_cast<std::size_t>(opt.frame);

  if (opt.ego == "file") {
    if (opt.ego_file) {
      auto motions = read_trajectory(*opt.ego_file);
      if (motions.size() < n) {
        throw InvalidArgument("--ego-file has " + std::to_string(motions.size()) + " rows, need " +
                              std::to_string(n));
      }
      motions.resize(n);
      return motions;
    }
    if (frame + n > traj.size()) {
      throw InvalidArgument("bundle trajectory ends before frame " + std::to_string(frame + n));
    }
    return {traj.begin() + frame, traj.begin() + frame + n};
  }
  if (opt.ego_file) throw InvalidArgument("--ego-file is only used with --ego file");
  if (opt.ego == "copy") {
    if (frame < 1) throw InvalidArgument("--ego copy needs an observed motion: use --frame >= 1");
    return std::vector<EgoMotion>(n, traj[frame - 1]);
  }
  if (opt.ego.starts_with("lstm:")) {
    const std::filesystem::path ckpt = opt.ego.substr(5);
    if (ckpt.empty()) throw InvalidArgument("--ego lstm:<checkpoint> needs a path");
    if (opt.history < 1) throw InvalidArgument("--history must be >= 1");
    if (frame < static_cast<std::size_t>(opt.history)) {
      throw InvalidArgument("--ego lstm needs " + std::to_string(opt.history) +
                            " observed motions: use --frame >= " + std::to_string(opt.history));
    }
    const LstmModel model = load_checkpoint(ckpt);
    TrajectoryHistory history(traj.begin() + (frame - opt.history), traj.begin() + frame);
    return lstm_rollout(model, std::move(history), opt.steps, opt.history);
  }
  throw InvalidArgument("--ego must be file, copy or lstm:<checkpoint>, got '" + opt.ego + "'");
}

}  // namespace

Artifacts run_simulate(const SimulateOptions& opt) {
  SceneSpec spec = opt.scene ? load_scene_spec(*opt.scene) : default_scene_spec();
  if (opt.seed) spec.trajectory.seed = *opt.seed;
  if (opt.num_steps) spec.trajectory.num_steps = *opt.num_steps;
  spec.trajectory.validate();

  const auto frames = generate_sequence(spec.scene, spec.trajectory, spec.intrinsics);
  std::vector<EgoMotion> motions;
  for (const auto& f : frames) {
    if (f.motion_to_next) motions.push_back(*f.motion_to_next);
  }

  Artifacts out;
  out.add("scene.json", dump_scene_spec(spec));
  out.add("intrinsics.txt", encode_intrinsics(spec.intrinsics));
  out.add("trajectory.csv", encode_trajectory(motions));
  out.add("frames.csv", encode_frames_manifest(static_cast<int>(frames.size())));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.add(frame_segmentation_name(static_cast<int>(i)), encode_segmentation(frames[i].segmentation));
    out.add(frame_depth_name(static_cast<int>(i)), encode_depth(frames[i].depth));
  }
  return out;
}

Artifacts run_predict(const PredictOptions& opt) {
  if (opt.steps < 1) throw InvalidArgument("--steps must be >= 1");
  if (opt.max_passes < 1) throw InvalidArgument("--max-passes must be >= 1");
  const BundleSet bundle = load_bundle_set(opt.input, opt.num_classes);
  if (opt.frame < 0 || opt.frame >= static_cast<int>(bundle.frames.size())) {
    throw InvalidArgument("--frame " + std::to_string(opt.frame) + " outside bundle of " +
                          std::to_string(bundle.frames.size()) + " frames");
  }
  const FrameBundle& src = bundle.frames[opt.frame];
  const SegmentationMap seg = read_segmentation(src.segmentation_path, opt.num_classes);
  const DepthMap depth = read_depth(src.depth_path);
  const std::vector<EgoMotion> motions = motions_for(opt, bundle);

  const PredictionSequence seq =
      predict_future(depth, seg, bundle.intrinsics, motions, {opt.inpaint, opt.max_passes});

  Artifacts out;
  std::ostringstream info;
  info << "format = fseg3d-predict\nversion = 1\n";
  info << "source_frame = " << opt.frame << "\nsteps = " << opt.steps << "\nego = " << opt.ego << "\n";
  info << "inpaint = " << (opt.inpaint ? "true" : "false") << "\n";
  for (const auto& step : seq.steps) {
    out.add(pred_name(step.step_index, false), encode_segmentation(step.segmentation));
    if (opt.inpaint) out.add(pred_name(step.step_index, true), encode_segmentation(step.raw.segmentation));
    info << "step." << step.step_index << ".raw_missing = " << step.raw.missing_count << "\n";
    info << "step." << step.step_index << ".missing = " << step.segmentation.missing_count() << "\n";
    info << "step." << step.step_index << ".inpaint_passes = " << step.inpaint_passes << "\n";
  }
  out.add("trajectory_used.csv", encode_trajectory(motions));
  out.add("predict_info.txt", info.str());
  return out;
}

Artifacts run_train(const TrainOptions& opt) {
  if (opt.history < 1) throw InvalidArgument("--history must be >= 1");
  TrainConfig cfg;
  if (opt.preset == "desk") {
    cfg = TrainConfig::desk_scale();
  } else if (opt.preset == "long") {
    cfg = TrainConfig::long_schedule();
  } else {
    throw InvalidArgument("--preset must be desk or long, got '" + opt.preset + "'");
  }
  if (opt.lr_start) cfg.lr_start = *opt.lr_start;
  if (opt.lr_end) cfg.lr_end = *opt.lr_end;
  if (opt.momentum) cfg.momentum = *opt.momentum;
  if (opt.normalize) cfg.normalize = *opt.normalize;
  cfg.total_steps = opt.total_steps;
  cfg.batch_size = opt.batch_size;
  cfg.log_interval = opt.log_interval;
  cfg.seed = opt.seed;
  cfg.validate();

  std::vector<std::vector<EgoMotion>> trajectories;
  for (const auto& path : opt.trajectories) trajectories.push_back(read_trajectory(path));
  if (!opt.synthetic.empty()) {
    const TrajectoryKind kind = trajectory_kind_from_string(opt.synthetic);
    auto generated = sample_trajectories(kind, TrajectorySampling::urban_driving(), opt.synthetic_count,
                                         opt.synthetic_length, opt.seed);
    trajectories.insert(trajectories.end(), generated.begin(), generated.end());
  }
  std::vector<TrainingSample> dataset;
  for (const auto& t : trajectories) {
    auto s = make_samples(t, opt.history);
    dataset.insert(dataset.end(), s.begin(), s.end());
  }
  if (dataset.empty()) {
    throw InvalidArgument("no training samples: trajectories need more than --history rows");
  }

  const TrainResult result = lstm_train(dataset, cfg);

  std::string curve = "step,learning_rate,loss\n";
  for (const auto& p : result.loss_curve) {
    curve += std::to_string(p.step) + "," + format_double(p.learning_rate) + "," + format_double(p.loss) + "\n";
  }
  std::ostringstream summary;
  summary << "format = fseg3d-train\nversion = 1\n";
  summary << "samples = " << dataset.size() << "\nhistory = " << opt.history << "\n";
  summary << "steps = " << cfg.total_steps << "\nlr_start = " << format_double(cfg.lr_start)
          << "\nlr_end = " << format_double(cfg.lr_end) << "\nmomentum = " << format_double(cfg.momentum)
          << "\nnormalize = " << (cfg.normalize ? "true" : "false") << "\n";
  summary << "final_loss = " << format_double(result.loss_curve.back().loss) << "\n";
  summary << "copy_loss = " << format_double(copy_mean_loss(dataset)) << "\n";

  Artifacts out;
  out.add("model.ckpt", encode_checkpoint(result.model));
  out.add("loss_curve.csv", curve);
  out.add("train_summary.txt", summary.str());
  return out;
}

Artifacts run_eval(const EvalOptions& opt) {
  if (opt.pred.empty() || opt.pred.size() != opt.gt.size()) {
    throw InvalidArgument("eval needs the same non-zero number of --pred and --gt files");
  }
  if (opt.transforms < 0) throw InvalidArgument("--transforms must be >= 0");
  EvalAccumulator acc(opt.num_classes, opt.ignore_missing);
  Artifacts out;
  for (std::size_t i = 0; i < opt.pred.size(); ++i) {
    const SegmentationMap pred = read_segmentation(opt.pred[i], opt.num_classes);
    const SegmentationMap gt = read_segmentation(opt.gt[i], opt.num_classes);
    acc.add(pred, gt);
    if (opt.error_maps) {
      const std::string name =
          opt.pred.size() == 1 ? "error_map.ppm" : "error_map_" + std::to_string(i) + ".ppm";
      out.add(name, encode_error_map(error_map(pred, gt)));
    }
  }
  const EvalReport report = acc.report();
  const std::string row = format_csv_row({opt.method, opt.transforms, report.mean_iou, report.pixel_accuracy});
  out.add("eval_report.txt", format_report(report));
  out.add("eval.csv", eval_csv_header() + "\n" + row + "\n");
  return out;
}

Artifacts run_report(const ReportOptions& opt) {
  if (opt.inputs.empty()) throw InvalidArgument("report needs at least one eval CSV");
  std::vector<std::string> methods;
  std::map<int, std::map<std::string, double>, std::greater<>> table;

  for (const auto& path : opt.inputs) {
    const std::string text = read_file(path);
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) throw FormatError(path.string() + ": missing final newline", FormatError::Unit::kLine, line_no + 1);
      const std::string_view line(text.data() + pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (line_no == 1) {
        if (line != eval_csv_header()) throw FormatError(path.string() + ": unexpected header", FormatError::Unit::kLine, 1);
        continue;
      }
      const auto f = split(line, ',');
      const auto transforms = f.size() == 4 ? parse_int(f[1]) : std::nullopt;
      const auto iou = f.size() == 4 ? parse_double(f[2]) : std::nullopt;
      if (!transforms || !iou || f[0].empty()) {
        throw FormatError(path.string() + ": expected method,transforms,mean_iou,pixel_accuracy", FormatError::Unit::kLine, line_no);
      }
      const std::string method(f[0]);
      if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
      if (!table[static_cast<int>(*transforms)].emplace(method, *iou).second) {
        throw FormatError(path.string() + ": duplicate entry for " + method + " at " +
                              std::to_string(*transforms) + " transforms",
                          FormatError::Unit::kLine, line_no);
      }
    }
    if (line_no == 0) throw FormatError(path.string() + ": empty file", FormatError::Unit::kLine, 1);
  }

  std::string csv = "transforms";
  std::string md = "| # Motion Transforms |";
  std::string rule = "|---:|";
  for (const auto& m : methods) {
    csv += "," + m;
    md += " " + m + " |";
    rule += "---:|";
  }
  csv += "\n";
  md += "\n" + rule + "\n";
  for (const auto& [transforms, cells] : table) {
    csv += std::to_string(transforms);
    md += "| " + std::to_string(transforms) + " |";
    for (const auto& m : methods) {
      const auto it = cells.find(m);
      csv += ",";
      md += " ";
      if (it != cells.end()) {
        csv += format_double(it->second);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", it->second);
        md += buf;
      }
      md += " |";
    }
    csv += "\n";
    md += "\n";
  }
  Artifacts out;
  out.add("report.csv", csv);
  out.add("report.md", md);
  return out;
}

}  // namespace fseg3d::cli
