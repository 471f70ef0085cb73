#include "fseg3d/forecast.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "json.hpp"

#include "fseg3d/errors.hpp"

namespace fseg3d {

namespace {

constexpr int kH = LstmModel::kHidden;
constexpr const char* kCheckpointMagic = "FSEG3D-LSTM";
constexpr int kCheckpointVersion = 1;

using Vec = Eigen::Matrix<double, kH, 1>;
using GateVec = LstmLayer::GateVector;

Vec to_vector(const EgoMotion& m) { return Vec(m.tx, m.ty, m.tz, m.pitch, m.yaw, m.roll); }

EgoMotion to_motion(const Vec& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CellCache {
  Vec x, h_prev, c_prev;
  Vec i, f, g, o, c, tanh_c, h;
};

// caches[layer][t]
using Unrolled = std::vector<std::vector<CellCache>>;

Unrolled unroll(const LstmParams& p, const LstmModel::ComponentScale& scale,
               const TrajectoryHistory& history) {
  const std::size_t steps = history.size();
  Unrolled caches(p.layers.size(), std::vector<CellCache>(steps));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LstmLayer& layer = p.layers[l];
    Vec h = Vec::Zero();
    Vec c = Vec::Zero();
    for (std::size_t t = 0; t < steps; ++t) {
      CellCache& cc = caches[l][t];
      cc.x = l == 0 ? Vec(to_vector(history[t]).cwiseQuotient(scale)) : caches[l - 1][t].h;
      cc.h_prev = h;
      cc.c_prev = c;
      const GateVec z = layer.w_in * cc.x + layer.w_rec * h + layer.bias;
      cc.i = z.segment<kH>(0).unaryExpr(&sigmoid);
      cc.f = z.segment<kH>(kH).unaryExpr(&sigmoid);
      cc.g = z.segment<kH>(2 * kH).array().tanh().matrix();
      cc.o = z.segment<kH>(3 * kH).unaryExpr(&sigmoid);
      cc.c = cc.f.cwiseProduct(c) + cc.i.cwiseProduct(cc.g);
      cc.tanh_c = cc.c.array().tanh().matrix();
      cc.h = cc.o.cwiseProduct(cc.tanh_c);
      h = cc.h;
      c = cc.c;
    }
  }
  return caches;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void append_le(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double read_le(std::string_view bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) {
    bits = (bits << 8) | static_cast<unsigned char>(bytes[offset + b]);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

EgoMotion copy_forecast(const TrajectoryHistory& history) {
  if (history.empty()) throw InvalidArgument("copy_forecast: empty history");
  return history.back();
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w_in.size() + l.w_rec.size() + l.bias.size();
  return n;
}

std::vector<double> LstmParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  auto push_matrix = [&](const LstmLayer::GateMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  };
  for (const auto& l : layers) {
    push_matrix(l.w_in);
    push_matrix(l.w_rec);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias[r]);
  }
  return out;
}

void LstmParams::unflatten(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw InvalidArgument("LstmParams::unflatten: expected " + std::to_string(parameter_count()) +
                          " values, got " + std::to_string(values.size()));
  }
  std::size_t k = 0;
  auto pull_matrix = [&](LstmLayer::GateMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = values[k++];
  };
  for (auto& l : layers) {
    pull_matrix(l.w_in);
    pull_matrix(l.w_rec);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = values[k++];
  }
}

LstmParams LstmParams::zeros_like() const {
  LstmParams out = *this;
  for (auto& l : out.layers) {
    l.w_in.setZero();
    l.w_rec.setZero();
    l.bias.setZero();
  }
  return out;
}

bool LstmParams::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const LstmLayer& l) {
    return l.w_in.allFinite() && l.w_rec.allFinite() && l.bias.allFinite();
  });
}

LstmModel LstmModel::zeros() {
  LstmModel m;
  m.params.layers.assign(kLayers, LstmLayer{});
  return m;
}

LstmModel LstmModel::initialize(std::uint64_t seed) {
  LstmModel m = zeros();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (auto& l : m.params.layers) {
    for (Eigen::Index r = 0; r < l.w_in.rows(); ++r)
      for (Eigen::Index c = 0; c < l.w_in.cols(); ++c) l.w_in(r, c) = dist(rng);
    for (Eigen::Index r = 0; r < l.w_rec.rows(); ++r)
      for (Eigen::Index c = 0; c < l.w_rec.cols(); ++c) l.w_rec(r, c) = dist(rng);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      l.bias[r] = (r >= kHidden && r < 2 * kHidden) ? 1.0 : dist(rng);
    }
  }
  return m;
}

EgoMotion lstm_forward(const LstmModel& model, const TrajectoryHistory& history) {
  if (history.empty()) throw InvalidArgument("lstm_forward: empty history");
  const Unrolled caches = unroll(model.params, model.component_scale, history);
  return to_motion(caches.back().back().h.cwiseProduct(model.component_scale));
}

double lstm_loss(const EgoMotion& pred, const EgoMotion& target) {
  const auto p = pred.as_array();
  const auto t = target.as_array();
  double sum = 0.0;
  for (std::size_t i = 0; i < EgoMotion::kDim; ++i) sum += std::abs(t[i] - p[i]);
  return sum;
}

std::pair<EgoMotion, LstmParams> lstm_forward_backward(const LstmModel& model,
                                                       const TrajectoryHistory& history,
                                                       const EgoMotion& target) {
  if (history.empty()) throw InvalidArgument("lstm_gradient: empty history");
  const LstmParams& p = model.params;
  const Vec& scale = model.component_scale;
  const Unrolled caches = unroll(p, scale, history);
  const std::size_t n_layers = p.layers.size();
  const std::size_t steps = history.size();

  const Vec pred = caches.back().back().h.cwiseProduct(scale);
  // d|s h - t| / dh = s * sign(s h - t)
  const Vec dloss_dh = (pred - to_vector(target)).unaryExpr(&sign).cwiseProduct(scale);

  LstmParams grad = p.zeros_like();
  std::vector<Vec> dh_rec(n_layers, Vec::Zero());
  std::vector<Vec> dc_rec(n_layers, Vec::Zero());
  // Gradient flowing into layer l's hidden output from layer l+1 at the same step.
  std::vector<Vec> dh_from_above(n_layers, Vec::Zero());

  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t l = n_layers; l-- > 0;) {
      const CellCache& cc = caches[l][t];
      const LstmLayer& layer = p.layers[l];
      LstmLayer& g = grad.layers[l];

      Vec dh = dh_rec[l];
      if (l + 1 == n_layers) {
        if (t + 1 == steps) dh += dloss_dh;
      } else {
        dh += dh_from_above[l];
      }

      const Eigen::Array<double, kH, 1> tc = cc.tanh_c.array();
      const Eigen::Array<double, kH, 1> dc = dc_rec[l].array() + dh.array() * cc.o.array() * (1.0 - tc * tc);

      GateVec dz;
      dz.segment<kH>(0) = (dc * cc.g.array() * cc.i.array() * (1.0 - cc.i.array())).matrix();
      dz.segment<kH>(kH) = (dc * cc.c_prev.array() * cc.f.array() * (1.0 - cc.f.array())).matrix();
      dz.segment<kH>(2 * kH) = (dc * cc.i.array() * (1.0 - cc.g.array().square())).matrix();
      dz.segment<kH>(3 * kH) = (dh.array() * tc * cc.o.array() * (1.0 - cc.o.array())).matrix();

      g.w_in.noalias() += dz * cc.x.transpose();
      g.w_rec.noalias() += dz * cc.h_prev.transpose();
      g.bias += dz;

      dc_rec[l] = (dc * cc.f.array()).matrix();
      dh_rec[l] = layer.w_rec.transpose() * dz;
      if (l > 0) dh_from_above[l - 1] = layer.w_in.transpose() * dz;
    }
  }
  return {to_motion(pred), std::move(grad)};
}

LstmParams lstm_gradient(const LstmModel& model, const TrajectoryHistory& history,
                         const EgoMotion& target) {
  return lstm_forward_backward(model, history, target).second;
}

void TrainConfig::validate() const {
  if (!(lr_start > 0.0) || !(lr_end > 0.0) || lr_end > lr_start) {
    throw InvalidArgument("TrainConfig: need 0 < lr_end <= lr_start");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw InvalidArgument("TrainConfig: momentum must be in [0, 1)");
  }
  if (total_steps < 1) throw InvalidArgument("TrainConfig: total_steps must be positive");
  if (batch_size < 1) throw InvalidArgument("TrainConfig: batch_size must be positive");
  if (log_interval < 1) throw InvalidArgument("TrainConfig: log_interval must be positive");
}

double learning_rate(const TrainConfig& cfg, std::int64_t step) {
  if (step <= 0) return cfg.lr_start;
  if (step >= cfg.total_steps) return cfg.lr_end;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.total_steps);
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, frac);
}

double mean_loss(const LstmModel& model, std::span<const TrainingSample> samples) {
  if (samples.empty()) return 0.0;
  std::vector<double> losses(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    losses[i] = lstm_loss(lstm_forward(model, samples[i].history), samples[i].target);
  }
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(samples.size());
}

double copy_mean_loss(std::span<const TrainingSample> samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += lstm_loss(copy_forecast(s.history), s.target);
  return sum / static_cast<double>(samples.size());
}

LstmModel::ComponentScale fit_component_scale(std::span<const TrainingSample> samples) {
  LstmModel::ComponentScale peak = LstmModel::ComponentScale::Zero();
  auto visit = [&](const EgoMotion& m) { peak = peak.cwiseMax(to_vector(m).cwiseAbs()); };
  for (const auto& s : samples) {
    for (const auto& m : s.history) visit(m);
    visit(s.target);
  }
  LstmModel::ComponentScale scale;
  for (int c = 0; c < kH; ++c) scale[c] = peak[c] > 0.0 && std::isfinite(peak[c]) ? 1.25 * peak[c] : 1.0;
  return scale;
}

TrainResult lstm_train(std::span<const TrainingSample> dataset, const TrainConfig& cfg) {
  LstmModel initial = LstmModel::initialize(cfg.seed);
  if (cfg.normalize) initial.component_scale = fit_component_scale(dataset);
  return lstm_train(dataset, cfg, std::move(initial));
}

TrainResult lstm_train(std::span<const TrainingSample> dataset, const TrainConfig& cfg,
                       LstmModel initial) {
  if (dataset.empty()) throw InvalidArgument("lstm_train: empty dataset");
  cfg.validate();
  for (const auto& s : dataset) {
    if (s.history.empty()) throw InvalidArgument("lstm_train: sample with empty history");
  }

  TrainResult result{std::move(initial), {}};
  LstmModel& model = result.model;
  std::vector<double> weights = model.params.flatten();
  std::vector<double> velocity(weights.size(), 0.0);
  std::vector<std::vector<double>> sample_grads(cfg.batch_size);
  std::vector<std::size_t> batch(cfg.batch_size);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);

  auto log_point = [&](std::int64_t step) {
    result.loss_curve.push_back({step, learning_rate(cfg, step), mean_loss(model, dataset)});
  };

  log_point(0);
  for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
    for (auto& b : batch) b = pick(rng);

    const int bs = cfg.batch_size;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < bs; ++b) {
      const TrainingSample& s = dataset[batch[b]];
      sample_grads[b] = lstm_gradient(model, s.history, s.target).flatten();
    }

    const double lr = learning_rate(cfg, step);
    const double inv_batch = 1.0 / static_cast<double>(bs);
    for (std::size_t w = 0; w < weights.size(); ++w) {
      double g = 0.0;
      for (int b = 0; b < bs; ++b) g += sample_grads[b][w];
      velocity[w] = cfg.momentum * velocity[w] + g * inv_batch;
      weights[w] -= lr * velocity[w];
    }
    model.params.unflatten(weights);
    ++model.step;

    if ((step + 1) % cfg.log_interval == 0 || step + 1 == cfg.total_steps) log_point(step + 1);
  }
  return result;
}

std::vector<TrainingSample> make_samples(const std::vector<EgoMotion>& trajectory,
                                         int history_length) {
  if (history_length < 1) throw InvalidArgument("make_samples: history_length must be >= 1");
  std::vector<TrainingSample> out;
  const auto len = static_cast<std::size_t>(history_length);
  for (std::size_t end = len; end < trajectory.size(); ++end) {
    TrainingSample s;
    s.history.assign(trajectory.begin() + static_cast<std::ptrdiff_t>(end - len),
                     trajectory.begin() + static_cast<std::ptrdiff_t>(end));
    s.target = trajectory[end];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<EgoMotion> lstm_rollout(const LstmModel& model, TrajectoryHistory history, int steps,
                                    int history_length) {
  if (history.empty()) throw InvalidArgument("lstm_rollout: empty history");
  if (history_length < 1) throw InvalidArgument("lstm_rollout: history_length must be >= 1");
  std::vector<EgoMotion> out;
  for (int s = 0; s < steps; ++s) {
    if (history.size() > static_cast<std::size_t>(history_length)) {
      history.erase(history.begin(),
                    history.end() - static_cast<std::ptrdiff_t>(history_length));
    }
    const EgoMotion next = lstm_forward(model, history);
    out.push_back(next);
    history.push_back(next);
  }
  return out;
}

std::string encode_checkpoint(const LstmModel& model) {
  if (model.params.layers.empty()) throw InvalidArgument("encode_checkpoint: model has no layers");
  nlohmann::json header = {
      {"format_version", kCheckpointVersion},
      {"layers", model.params.layers.size()},
      {"hidden_size", model.params.layers.front().w_rec.cols()},
      {"input_size", model.params.layers.front().w_in.cols()},
      {"step", model.step},
      {"gate_order", "ifgo"},
      {"blocks", "component_scale,{w_in,w_rec,bias}*layers"},
  };
  std::string out = std::string(kCheckpointMagic) + "\n" + header.dump() + "\n";
  for (int c = 0; c < kH; ++c) append_le(out, model.component_scale[c]);
  for (double w : model.params.flatten()) append_le(out, w);
  return out;
}

LstmModel decode_checkpoint(std::string_view bytes) {
  using Unit = FormatError::Unit;
  const std::string magic_line = std::string(kCheckpointMagic) + "\n";
  if (bytes.substr(0, magic_line.size()) != magic_line) {
    throw FormatError("checkpoint: bad magic", Unit::kByteOffset, 0);
  }
  const std::size_t header_start = magic_line.size();
  const std::size_t header_end = bytes.find('\n', header_start);
  if (header_end == std::string_view::npos) {
    throw FormatError("checkpoint: unterminated header", Unit::kByteOffset, header_start);
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(header_start, header_end - header_start));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what(), Unit::kByteOffset,
                      header_start);
  }

  int version = 0, layers = 0, hidden = 0, input = 0;
  std::int64_t step = 0;
  try {
    version = header.at("format_version").get<int>();
    layers = header.at("layers").get<int>();
    hidden = header.at("hidden_size").get<int>();
    input = header.at("input_size").get<int>();
    step = header.at("step").get<std::int64_t>();
    if (header.at("gate_order").get<std::string>() != "ifgo") {
      throw FormatError("checkpoint: unsupported gate order", Unit::kByteOffset, header_start);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header field: ") + e.what(), Unit::kByteOffset,
                      header_start);
  }
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format_version " + std::to_string(version),
                      Unit::kByteOffset, header_start);
  }
  if (layers != LstmModel::kLayers || hidden != LstmModel::kHidden ||
      input != LstmModel::kInput) {
    throw FormatError("checkpoint: architecture mismatch", Unit::kByteOffset, header_start);
  }

  LstmModel model = LstmModel::zeros();
  model.step = step;
  const std::size_t body = header_end + 1;
  const std::size_t expected = (kH + model.params.parameter_count()) * 8;
  if (bytes.size() != body + expected) {
    throw FormatError("checkpoint: expected " + std::to_string(expected) + " weight bytes, found " +
                          std::to_string(bytes.size() - std::min(bytes.size(), body)),
                      Unit::kByteOffset, body);
  }
  for (int c = 0; c < kH; ++c) {
    const std::size_t at = body + 8 * static_cast<std::size_t>(c);
    model.component_scale[c] = read_le(bytes, at);
    if (!(model.component_scale[c] > 0.0) || !std::isfinite(model.component_scale[c])) {
      throw FormatError("checkpoint: component scale must be finite and positive", Unit::kByteOffset, at);
    }
  }
  const std::size_t weights_at = body + 8 * kH;
  std::vector<double> weights(model.params.parameter_count());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = read_le(bytes, weights_at + 8 * i);
    if (!std::isfinite(weights[i])) {
      throw FormatError("checkpoint: non-finite weight", Unit::kByteOffset, weights_at + 8 * i);
    }
  }
  model.params.unflatten(weights);
  return model;
}

void save_checkpoint(const LstmModel& model, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

LstmModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace fseg3d
