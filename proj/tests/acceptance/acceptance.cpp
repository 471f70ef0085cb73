// One line per acceptance criterion: "criterion N [PASS|FAIL] <summary>".
// Exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "../common/lstm_oracle.hpp"
#include "fseg3d/eval.hpp"
#include "fseg3d/horizon.hpp"
#include "fseg3d/inpaint.hpp"
#include "fseg3d/io.hpp"
#include "fseg3d/scene_spec.hpp"
#include "fseg3d/simulator.hpp"
#include "fseg3d/warp.hpp"

using namespace fseg3d;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& summary) {
  std::printf("criterion %d [%s] %s\n", id, ok ? "PASS" : "FAIL", summary.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- 1 ---------------------------------------------------------------------

void identity_pipeline() {
  const Scene scene = street_canyon_scene();
  const CameraIntrinsics k = street_canyon_intrinsics();
  std::size_t checked = 0, mismatches = 0;
  double worst = 0.0;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> z(0.0, 30.0), x(-2.0, 2.0), yaw(-0.3, 0.3);
  for (int n = 0; n < 8; ++n) {
    CameraPose pose;
    pose.world_from_camera = egomotion_to_se3({x(rng), 0.0, z(rng), 0.0, yaw(rng), 0.0});
    const RenderResult frame = render(scene, pose, k);
    for (bool inpaint : {false, true}) {
      const Stopwatch t;
      const PredictionSequence seq =
          predict_future(frame.depth, frame.segmentation, k, {EgoMotion{}}, {.inpaint = inpaint});
      worst = std::max(worst, t.seconds());
      const SegmentationMap& out = seq.steps[0].segmentation;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (!frame.depth.is_valid(i)) continue;
        ++checked;
        mismatches += out.classes[i] != frame.segmentation.classes[i];
      }
    }
  }
  report(1, mismatches == 0 && worst < 1.0,
         fmt("identity pipeline: %zu mismatches over %zu valid-depth pixels (16 runs, 256x128); "
             "slowest run %.4f s (limit 1 s)",
             mismatches, checked, worst));
}

// --- 2 ---------------------------------------------------------------------

void oracle_warp() {
  const Stopwatch t;
  const SceneSpec spec = default_scene_spec();
  const auto frames = generate_sequence(spec.scene, spec.trajectory, spec.intrinsics);
  const auto motions = spec.trajectory.exact_motions();

  double depth_sum = 0.0;
  std::size_t depth_n = 0;
  for (std::size_t i = 0; i < frames[0].depth.size(); ++i) {
    if (frames[0].depth.is_valid(i)) {
      depth_sum += frames[0].depth.values[i];
      ++depth_n;
    }
  }
  const double mean_depth = depth_sum / static_cast<double>(depth_n);
  double max_translation = 0.0;
  for (const auto& m : motions) max_translation = std::max(max_translation, egomotion_to_se3(m).translation.norm());

  // Gated on the scene's start frame; later start frames are reported for
  // information only.
  struct Scores {
    double one_raw, one, three, five;
  };
  auto score = [&](std::size_t s) {
    const std::vector<EgoMotion> future(motions.begin() + s, motions.begin() + s + 5);
    const PredictionSequence seq = predict_future(frames[s].depth, frames[s].segmentation, spec.intrinsics, future);
    auto iou = [&](int h, const SegmentationMap& pred, bool ignore) {
      return evaluate(pred, frames[s + h].segmentation, ignore).mean_iou;
    };
    return Scores{iou(1, seq.steps[0].raw.segmentation, true), iou(1, seq.steps[0].segmentation, false),
                  iou(3, seq.steps[2].segmentation, false), iou(5, seq.steps[4].segmentation, false)};
  };
  const Scores start = score(0);
  Scores worst{1.0, 1.0, 1.0, 1.0};
  for (std::size_t s = 1; s + 5 < frames.size(); ++s) {
    const Scores c = score(s);
    worst = {std::min(worst.one_raw, c.one_raw), std::min(worst.one, c.one), std::min(worst.three, c.three),
             std::min(worst.five, c.five)};
  }
  const double secs = t.seconds();
  const bool ok = max_translation <= 0.05 * mean_depth && start.one_raw >= 0.95 && start.one >= 0.95 &&
                  start.three >= 0.85 && start.five >= 0.75 && secs < 10.0;
  report(2, ok,
         fmt("oracle warp equivalence: translation %.3f = %.1f%% of mean depth %.2f; mean IoU from the start "
             "frame: 1 step %.4f (raw, unpredicted ignored) / %.4f (inpainted) >= 0.95, 3 steps %.4f >= 0.85, "
             "5 steps %.4f >= 0.75 [later start frames, not gated: worst %.4f / %.4f, %.4f, %.4f]; %.2f s "
             "(limit 10 s)",
             max_translation, 100.0 * max_translation / mean_depth, mean_depth, start.one_raw, start.one,
             start.three, start.five, worst.one_raw, worst.one, worst.three, worst.five, secs));
}

// --- 3 ---------------------------------------------------------------------

std::string table(const std::vector<HorizonRow>& rows) {
  std::string s;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    s += fmt("%sT=%d copy %.4f / warp %.4f / warp+inpaint %.4f", s.empty() ? "" : "; ", it->transforms,
             it->segmentation_copy, it->transform, it->transform_inpaint);
  }
  return s;
}

void horizon_trend(const HorizonBenchmark& bench) {
  const Stopwatch t;
  const auto rows = run_horizon_benchmark(bench, [](std::size_t) { return copy_forecaster(); });
  bool monotone = true, inpaint_wins = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    monotone = monotone && rows[i].transform <= rows[i - 1].transform &&
               rows[i].transform_inpaint <= rows[i - 1].transform_inpaint;
  }
  for (const auto& r : rows) inpaint_wins = inpaint_wins && r.transform_inpaint >= r.transform;
  report(3, monotone && inpaint_wins,
         fmt("horizon trend (%zu accelerating street-canyon runs, copied ego-motion): non-increasing in "
             "transform count: %s; inpainting >= plain warp at every horizon: %s; %s; %.2f s",
             bench.sequences.size(), monotone ? "yes" : "no", inpaint_wins ? "yes" : "no", table(rows).c_str(),
             t.seconds()));
}

// --- 4 ---------------------------------------------------------------------

void inpainting_suite() {
  constexpr std::uint8_t M = SegmentationMap::kMissing;
  std::mt19937_64 rng(4);
  std::size_t changed_labels = 0, not_filled = 0, over_budget = 0, maps = 0;
  bool idempotent = true;

  std::uniform_int_distribution<int> dim(1, 64), cls(0, 18);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const double missing = trial % 4 == 0 ? 0.0 : u(rng);
    SegmentationMap seg(w, h, 19);
    for (auto& px : seg.classes.pixels()) px = u(rng) < missing ? M : static_cast<std::uint8_t>(cls(rng));
    if (seg.missing_count() == seg.size()) seg.classes[0] = 3;
    const InpaintResult r = inpaint(seg, 64);
    ++maps;
    for (std::size_t n = 0; n < seg.size(); ++n) {
      if (!seg.is_missing(n)) changed_labels += r.segmentation.classes[n] != seg.classes[n];
    }
    not_filled += r.segmentation.missing_count() != 0;
    over_budget += r.passes > std::max(w, h);
    if (missing == 0.0) idempotent = idempotent && r.segmentation == seg && r.passes == 1;
    idempotent = idempotent && inpaint(r.segmentation, 64).segmentation == r.segmentation;
  }

  // Single labelled pixel in a corner: the worst case for the pass bound.
  for (int size : {1, 7, 40, 64}) {
    SegmentationMap seg(size, size / 2 + 1, 19);
    seg.classes(0, 0) = 5;
    const InpaintResult r = inpaint(seg, 64);
    ++maps;
    not_filled += r.segmentation.missing_count() != 0;
    over_budget += r.passes > std::max(seg.width(), seg.height());
  }

  // Module examples.
  bool examples = true;
  {
    const NeighborCount n = neighbor_count(SegmentationMap(5, 5, 4, 3));
    examples = examples && n.at(2, 2, 3) == 9 && n.at(2, 2, 0) == 0;
    const NeighborCount corner = neighbor_count(SegmentationMap(4, 4, 2, 1));
    examples = examples && corner.at(0, 0, 1) == 4;
    const NeighborCount empty = neighbor_count(SegmentationMap(4, 4, 2));
    examples = examples && std::all_of(empty.counts.begin(), empty.counts.end(), [](auto c) { return c == 0; });

    NeighborCount counts(3, 1, 6);
    counts.at(0, 0, 3) = 9;
    counts.at(1, 0, 1) = 4;
    counts.at(1, 0, 5) = 4;
    const SegmentationMap f = compute_filler(counts);
    examples = examples && f.classes(0, 0) == 3 && f.classes(1, 0) == 1 && f.classes(2, 0) == M;

    SegmentationMap hole(3, 3, 4, 3);
    hole.classes(1, 1) = M;
    examples = examples && inpaint(hole).segmentation == SegmentationMap(3, 3, 4, 3);

    SegmentationMap half(32, 32, 2, 0);
    for (int j = 0; j < 32; ++j) {
      for (int i = 16; i < 32; ++i) half.classes(i, j) = M;
    }
    const InpaintResult hr = inpaint(half);
    examples = examples && hr.passes == 16 && hr.segmentation == SegmentationMap(32, 32, 2, 0);
  }

  const bool ok = changed_labels == 0 && not_filled == 0 && over_budget == 0 && idempotent && examples;
  report(4, ok,
         fmt("inpainting: %zu maps, labelled pixels changed %zu, maps left with holes %zu, maps over "
             "max(H,W) passes %zu, idempotent on complete maps %s, module examples exact %s",
             maps, changed_labels, not_filled, over_budget, idempotent ? "yes" : "no", examples ? "yes" : "no"));
}

// --- 5 ---------------------------------------------------------------------

void gradient_check() {
  const Stopwatch t;
  double worst = 0.0;
  double worst_small = 0.0;
  std::size_t checked = 0, skipped = 0, small = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const oracle::GradCheck r = oracle::check_gradient(oracle::random_instance(1000 + seed), 1e-5);
    worst = std::max(worst, r.max_relative_error);
    worst_small = std::max(worst_small, r.max_abs_error_below_floor);
    checked += r.checked;
    skipped += r.skipped_near_kink;
    small += r.below_floor;
  }
  const double secs = t.seconds();
  report(5, worst < 1e-4 && secs < 30.0 && checked > 0,
         fmt("LSTM gradient check: 20 instances, %zu parameters compared (%zu skipped near an l1 kink), "
             "max relative error %.3e < 1e-4 at eps 1e-5 (denominator floor %.0e; %zu gradients below it, "
             "max abs error %.1e); %.2f s (limit 30 s)",
             checked, skipped, worst, oracle::kRelativeFloor, small, worst_small, secs));
}

// --- 6 ---------------------------------------------------------------------

void forecaster_quality(const HorizonBenchmark& bench) {
  const TrajectorySampling sampling = TrajectorySampling::urban_driving();
  auto samples = [](const std::vector<std::vector<EgoMotion>>& trajectories) {
    std::vector<TrainingSample> out;
    for (const auto& tr : trajectories) {
      auto s = make_samples(tr, 4);
      out.insert(out.end(), s.begin(), s.end());
    }
    return out;
  };
  const auto train = samples(sample_trajectories(TrajectoryKind::kConstantAcceleration, sampling, 2000, 10, 1));
  const auto test = samples(sample_trajectories(TrajectoryKind::kConstantAcceleration, sampling, 300, 10, 2));

  TrainConfig cfg = TrainConfig::desk_scale();  // 50k steps, batch 32
  const Stopwatch t;
  const TrainResult trained = lstm_train(train, cfg);
  const double train_secs = t.seconds();
  const double lstm_l1 = mean_loss(trained.model, test), copy_l1 = copy_mean_loss(test);

  const auto copy_rows = run_horizon_benchmark(bench, [](std::size_t) { return copy_forecaster(); });
  const auto lstm_rows =
      run_horizon_benchmark(bench, [&](std::size_t) { return lstm_forecaster(trained.model, 4); });
  bool downstream = true;
  double copy_mean = 0.0, lstm_mean = 0.0;
  std::string per_horizon;
  for (std::size_t i = 0; i < copy_rows.size(); ++i) {
    downstream = downstream && lstm_rows[i].transform_inpaint >= copy_rows[i].transform_inpaint;
    copy_mean += copy_rows[i].transform_inpaint / copy_rows.size();
    lstm_mean += lstm_rows[i].transform_inpaint / lstm_rows.size();
    per_horizon += fmt("%sT=%d %.4f vs %.4f", per_horizon.empty() ? "" : ", ", copy_rows[i].transforms,
                       lstm_rows[i].transform_inpaint, copy_rows[i].transform_inpaint);
  }
  const bool ok = lstm_l1 < copy_l1 && downstream && lstm_mean >= copy_mean && train_secs <= 300.0;
  report(6, ok,
         fmt("forecaster: held-out constant-acceleration l1 LSTM %.4f < copy %.4f; warp+inpaint mean IoU "
             "LSTM %.4f >= copy %.4f (%s); training %lld steps in %.1f s (limit 300 s)",
             lstm_l1, copy_l1, lstm_mean, copy_mean, per_horizon.c_str(),
             static_cast<long long>(cfg.total_steps), train_secs));
}

// --- 7 ---------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

// Runs from inside `cwd` so every path the CLI records is relative and the
// runs' artifacts can be compared byte for byte.
bool run(const fs::path& cwd, const std::string& env, const std::string& args) {
  const std::string cmd = "cd \"" + cwd.string() + "\" && " + env + " \"" FSEG3D_CLI_PATH "\" " + args + " 2>&1";
  return std::system(cmd.c_str()) == 0;
}

void determinism(const fs::path& work) {
  const Stopwatch t;
  // A scene spec with measurement noise so the seed matters.
  SceneSpec spec = default_scene_spec();
  spec.trajectory.kind = TrajectoryKind::kConstantAcceleration;
  spec.trajectory.acceleration = {0.0, 0.0, -0.05, 0.0, 0.003, 0.0};
  spec.trajectory.noise_sigma = {0.01, 0.002, 0.01, 0.001, 0.001, 0.001};
  spec.trajectory.num_steps = 7;
  write_file(work / "scene.json", dump_scene_spec(spec));

  auto pipeline = [&](const std::string& env_vars, const fs::path& out) {
    fs::create_directories(out);
    auto run = [&](const std::string& env, const std::string& args) { return ::run(out, env, args); };
    const std::string env = env_vars;
    const std::string o = ".";
    const std::string sim = o + "/sim";
    bool ok = run(env, "simulate --scene \"" + (work / "scene.json").string() + "\" --seed 11 --out " + sim);
    ok = ok && run(env, "train-ego --trajectories " + sim + "/trajectory.csv --synthetic constant_acceleration "
                        "--synthetic-count 200 --steps 300 --log-interval 100 --seed 5 --out " + o + "/train");
    ok = ok && run(env, "predict --input " + sim + " --frame 4 --steps 3 --ego lstm:" + o +
                            "/train/model.ckpt --out " + o + "/lstm");
    ok = ok && run(env, "predict --input " + sim + " --frame 4 --steps 3 --ego copy --out " + o + "/copy");
    ok = ok && run(env, "predict --input " + sim + " --frame 2 --steps 5 --ego file --no-inpaint --out " + o + "/file");
    for (int s = 1; s <= 3; ++s) {
      ok = ok && run(env, "eval --pred " + o + "/copy/pred_step" + std::to_string(s) + ".pgm --gt " + sim +
                              "/" + frame_segmentation_name(4 + s) + " --method copy --transforms " +
                              std::to_string(s) + " --error-map --out " + o + "/eval" + std::to_string(s));
    }
    ok = ok && run(env, "report --inputs " + o + "/eval1/eval.csv " + o + "/eval2/eval.csv " + o +
                            "/eval3/eval.csv --out " + o + "/report");
    return ok;
  };

  const char* n_env = std::getenv("FSEG3D_ACCEPTANCE_THREADS");
  const std::string n = n_env ? n_env : "4";
  const bool ran = pipeline("FUTURESEG3D_THREADS=1", work / "a") && pipeline("FUTURESEG3D_THREADS=1", work / "b") &&
                   pipeline("FUTURESEG3D_THREADS=" + n, work / "c");
  bool identical = false;
  std::size_t files = 0;
  std::string differing;
  if (ran) {
    const auto a = snapshot(work / "a"), b = snapshot(work / "b"), c = snapshot(work / "c");
    identical = a == b && a == c;
    files = a.size();
    for (const auto& [name, bytes] : a) {
      const auto ib = b.find(name), ic = c.find(name);
      if (ib == b.end() || ic == c.end() || ib->second != bytes || ic->second != bytes) differing += " " + name;
    }
  }
  report(7, ran && identical && files > 0,
         fmt("determinism: full CLI pipeline (simulate, train-ego, predict x3, eval x3, report) run twice with "
             "FUTURESEG3D_THREADS=1 and once with %s: %s, %zu artifacts byte-identical: %s%s; %.2f s",
             n.c_str(), ran ? "all runs succeeded" : "a run FAILED", files, identical ? "yes" : "no",
             differing.empty() ? "" : (" (differ:" + differing + ")").c_str(), t.seconds()));
}

// --- 8 ---------------------------------------------------------------------

void format_round_trips(const fs::path& work) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(1, 48), cls(0, 18), len(0, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0), wide(-50.0, 50.0);
  std::size_t mismatches = 0;
  const fs::path pgm = work / "rt.pgm", pfm = work / "rt.pfm", csv = work / "rt.csv";
  for (int trial = 0; trial < 100; ++trial) {
    const int w = dim(rng), h = dim(rng);
    SegmentationMap seg(w, h, 19);
    for (auto& px : seg.classes.pixels()) {
      px = u(rng) < 0.15 ? SegmentationMap::kMissing : static_cast<std::uint8_t>(cls(rng));
    }
    write_segmentation(pgm, seg);
    const std::string s1 = read_file(pgm);
    write_segmentation(pgm, read_segmentation(pgm, 19));
    mismatches += read_file(pgm) != s1;

    DepthMap depth(w, h);
    for (auto& d : depth.values.pixels()) d = u(rng) < 0.1 ? DepthMap::kInvalid : std::exp(u(rng) * 10.0 - 3.0);
    write_depth(pfm, depth);
    const std::string d1 = read_file(pfm);
    write_depth(pfm, read_depth(pfm));
    mismatches += read_file(pfm) != d1;

    std::vector<EgoMotion> traj(len(rng));
    for (auto& m : traj) m = {wide(rng), wide(rng) * 1e-3, wide(rng), u(rng) - 0.5, u(rng) - 0.5, 1e-9 * wide(rng)};
    write_trajectory(csv, traj);
    const std::string t1 = read_file(csv);
    const auto back = read_trajectory(csv);
    write_trajectory(csv, back);
    mismatches += read_file(csv) != t1 || back != traj;
  }
  report(8, mismatches == 0,
         fmt("format round-trips: 100 random instances each of PGM, PFM and trajectory CSV, write-read-write "
             "byte mismatches %zu",
             mismatches));
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("fseg3d-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(work);

  identity_pipeline();
  oracle_warp();
  const HorizonBenchmark bench = make_accelerating_benchmark();
  horizon_trend(bench);
  inpainting_suite();
  gradient_check();
  forecaster_quality(bench);
  determinism(work);
  format_round_trips(work);

  fs::remove_all(work);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
