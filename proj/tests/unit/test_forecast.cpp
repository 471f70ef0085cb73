#include <cmath>
#include <random>

#include "../common/lstm_oracle.hpp"
#include "doctest.h"
#include "fseg3d/errors.hpp"
#include "fseg3d/forecast.hpp"
#include "fseg3d/simulator.hpp"

using namespace fseg3d;

namespace {

std::vector<TrainingSample> samples_from(const std::vector<std::vector<EgoMotion>>& trajectories) {
  std::vector<TrainingSample> out;
  for (const auto& t : trajectories) {
    auto s = make_samples(t, 4);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

}  // namespace

TEST_SUITE("forecast") {

TEST_CASE("copy forecast repeats the latest motion") {
  const EgoMotion a{1, 0, 0, 0, 0, 0}, b{0, 2, 0, 0, 0, 0}, c{0, 0, 3, 0, 0, 0.1};
  CHECK(copy_forecast({a, a, a}) == a);
  CHECK(copy_forecast({b}) == b);
  CHECK(copy_forecast({a, b, c}) == c);
  CHECK_THROWS_AS(copy_forecast({}), InvalidArgument);
}

TEST_CASE("l1 loss") {
  const EgoMotion t{0.3, -0.2, 0.1, 0.01, 0.02, 0.03};
  CHECK(lstm_loss(t, t) == 0.0);
  CHECK(lstm_loss({1.3, -0.2, 0.1, 0.01, 0.02, 0.03}, t) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lstm_loss({1, 2, 3, 0, 0, 0}, {}) == 6.0);
}

TEST_CASE("zero weights predict zero") {
  const LstmModel m = LstmModel::zeros();
  CHECK(lstm_forward(m, {{1, 2, 3, 4, 5, 6}, {-1, 0.5, 0, 0, 0, 2}}) == EgoMotion{});
}

TEST_CASE("initialisation") {
  const LstmModel m = LstmModel::initialize(42);
  REQUIRE(m.params.layers.size() == 3);
  CHECK(m.params.parameter_count() == 3 * (24 * 6 * 2 + 24));
  for (const auto& layer : m.params.layers) {
    for (int r = 0; r < 24; ++r) {
      if (r >= 6 && r < 12) {
        CHECK(layer.bias(r) == 1.0);
      } else {
        CHECK(std::abs(layer.bias(r)) <= 0.1);
      }
      for (int k = 0; k < 6; ++k) {
        CHECK(std::abs(layer.w_in(r, k)) <= 0.1);
        CHECK(std::abs(layer.w_rec(r, k)) <= 0.1);
      }
    }
  }
  CHECK(LstmModel::initialize(42) == m);
  CHECK(!(LstmModel::initialize(43) == m));
  CHECK(m.component_scale == LstmModel::ComponentScale::Ones());
}

TEST_CASE("forward pass matches the plain-loop cell equations") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const oracle::Instance inst = oracle::random_instance(seed);
    const auto got = lstm_forward(inst.model, inst.history).as_array();
    const auto want = oracle::forward(inst.model, inst.history);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-12);
  }
  const LstmModel m = LstmModel::initialize(5);
  const TrajectoryHistory h{{0.1, 0, -0.4, 0, 0.01, 0}, {0.1, 0, -0.45, 0, 0.01, 0},
                            {0.1, 0, -0.5, 0, 0.01, 0}, {0.1, 0, -0.55, 0, 0.01, 0}};
  const auto out = lstm_forward(m, h);
  CHECK(out.is_finite());
  CHECK(lstm_forward(m, h) == out);
}

TEST_CASE("gradient") {
  SUBCASE("zero residual gives zero gradient") {
    oracle::Instance inst = oracle::random_instance(1);
    inst.target = lstm_forward(inst.model, inst.history);
    const auto g = lstm_gradient(inst.model, inst.history, inst.target).flatten();
    for (double v : g) CHECK(v == 0.0);
  }
  SUBCASE("matches central differences") {
    for (std::uint64_t seed = 100; seed < 105; ++seed) {
      const oracle::GradCheck r = oracle::check_gradient(oracle::random_instance(seed));
      CHECK(r.max_relative_error < 1e-4);
      CHECK(r.checked > 400);
    }
  }
  SUBCASE("first-order Taylor expansion") {
    const oracle::Instance inst = oracle::random_instance(7);
    const auto g = lstm_gradient(inst.model, inst.history, inst.target).flatten();
    const double l0 = lstm_loss(lstm_forward(inst.model, inst.history), inst.target);
    const std::vector<double> base = inst.model.params.flatten();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
    LstmModel probe = inst.model;
    for (int n = 0; n < 20; ++n) {
      const std::size_t p = pick(rng);
      std::vector<double> w = base;
      const double delta = 1e-4;
      w[p] += delta;
      probe.params.unflatten(w);
      const double l1 = lstm_loss(lstm_forward(probe, inst.history), inst.target);
      CHECK(std::abs((l1 - l0) - g[p] * delta) < 1e-6);
    }
  }
  SUBCASE("forward_backward agrees with the separate calls") {
    const oracle::Instance inst = oracle::random_instance(9);
    auto [pred, grad] = lstm_forward_backward(inst.model, inst.history, inst.target);
    CHECK(pred == lstm_forward(inst.model, inst.history));
    CHECK(grad == lstm_gradient(inst.model, inst.history, inst.target));
  }
}

TEST_CASE("learning-rate schedule endpoints") {
  TrainConfig cfg;
  CHECK(learning_rate(cfg, 0) == cfg.lr_start);
  CHECK(std::abs(learning_rate(cfg, cfg.total_steps) - cfg.lr_end) < 1e-12);
  CHECK(learning_rate(cfg, cfg.total_steps / 2) == doctest::Approx(1e-5).epsilon(1e-12));
  const TrainConfig desk = TrainConfig::desk_scale();
  CHECK(std::abs(learning_rate(desk, desk.total_steps) - desk.lr_end) < 1e-12);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.lr_start = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK_THROWS_AS(lstm_train({}, TrainConfig{}), InvalidArgument);
}

TEST_CASE("sliding-window samples") {
  std::vector<EgoMotion> t;
  for (int n = 0; n < 7; ++n) t.push_back({0, 0, -0.1 * n, 0, 0, 0});
  const auto s = make_samples(t, 4);
  REQUIRE(s.size() == 3);
  CHECK(s[0].history.front() == t[0]);
  CHECK(s[0].target == t[4]);
  CHECK(s[2].history.back() == t[5]);
  CHECK(s[2].target == t[6]);
  CHECK(make_samples(t, 7).empty());
}

TEST_CASE("component scale") {
  std::vector<TrainingSample> s{{{{0.5, 0, -1, 0, 0, 0}}, {-2, 0, 0, 0, 0, 0}}};
  const auto scale = fit_component_scale(s);
  CHECK(scale(0) == 2.5);
  CHECK(scale(1) == 1.0);
  CHECK(scale(2) == 1.25);
}

TEST_CASE("training") {
  const TrajectorySampling sampling = TrajectorySampling::urban_driving();
  const auto train = samples_from(sample_trajectories(TrajectoryKind::kConstantAcceleration, sampling, 200, 10, 1));
  TrainConfig cfg = TrainConfig::desk_scale();
  cfg.total_steps = 2000;
  cfg.log_interval = 500;
  cfg.seed = 3;

  SUBCASE("is bit-reproducible and reduces the loss") {
    const TrainResult a = lstm_train(train, cfg);
    const TrainResult b = lstm_train(train, cfg);
    CHECK(a.model == b.model);
    REQUIRE(a.loss_curve.size() == 5);
    CHECK(a.loss_curve.front().step == 0);
    CHECK(a.loss_curve.back().step == cfg.total_steps);
    CHECK(a.loss_curve.back().loss < a.loss_curve.front().loss);
    CHECK(a.model.step == cfg.total_steps);
  }
  SUBCASE("long schedule also makes progress") {
    TrainConfig slow = TrainConfig::long_schedule();
    slow.total_steps = 500;
    slow.log_interval = 500;
    const TrainResult r = lstm_train(train, slow);
    CHECK(r.loss_curve.back().loss < r.loss_curve.front().loss);
  }
}

TEST_CASE("trained model vs copy on held-out trajectories") {
  TrajectorySampling noisy = TrajectorySampling::urban_driving();
  const double sigma = 0.03;
  noisy.noise_sigma = {sigma, 0.2 * sigma, sigma, 0.1 * sigma, 0.2 * sigma, 0.1 * sigma};

  SUBCASE("noisy constant velocity: within 5% of copy") {
    const auto train = samples_from(sample_trajectories(TrajectoryKind::kConstantVelocity, noisy, 500, 10, 1));
    const auto test = samples_from(sample_trajectories(TrajectoryKind::kConstantVelocity, noisy, 300, 10, 2));
    TrainConfig cfg = TrainConfig::desk_scale();
    cfg.total_steps = 20'000;
    cfg.log_interval = cfg.total_steps;
    const TrainResult r = lstm_train(train, cfg);
    CHECK(mean_loss(r.model, test) <= 1.05 * copy_mean_loss(test));
  }
  SUBCASE("constant acceleration: better than copy") {
    const TrajectorySampling clean = TrajectorySampling::urban_driving();
    const auto train = samples_from(sample_trajectories(TrajectoryKind::kConstantAcceleration, clean, 2000, 10, 1));
    const auto test = samples_from(sample_trajectories(TrajectoryKind::kConstantAcceleration, clean, 300, 10, 2));
    TrainConfig cfg = TrainConfig::desk_scale();
    cfg.total_steps = 20'000;
    cfg.log_interval = cfg.total_steps;
    const TrainResult r = lstm_train(train, cfg);
    CHECK(mean_loss(r.model, test) < copy_mean_loss(test));
  }
}

TEST_CASE("roll-out feeds predictions back") {
  const LstmModel m = LstmModel::initialize(1);
  const TrajectoryHistory h{{0, 0, -0.3, 0, 0, 0}, {0, 0, -0.35, 0, 0, 0}, {0, 0, -0.4, 0, 0, 0},
                            {0, 0, -0.45, 0, 0, 0}};
  const auto out = lstm_rollout(m, h, 3, 4);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == lstm_forward(m, h));
  TrajectoryHistory next(h.begin() + 1, h.end());
  next.push_back(out[0]);
  CHECK(out[1] == lstm_forward(m, next));
}

TEST_CASE("checkpoint round trip") {
  LstmModel m = LstmModel::initialize(77);
  m.step = 1234;
  m.component_scale << 0.1, 0.02, 0.6, 0.005, 0.03, 0.005;
  const std::string bytes = encode_checkpoint(m);
  const LstmModel back = decode_checkpoint(bytes);
  CHECK(back == m);
  CHECK(encode_checkpoint(back) == bytes);

  CHECK_THROWS_AS(decode_checkpoint("nope"), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), FormatError);
  std::string bad_scale = bytes;
  const std::size_t body = bytes.size() - 8 * (6 + m.params.parameter_count());
  for (int b = 0; b < 8; ++b) bad_scale[body + b] = 0;
  CHECK_THROWS_AS(decode_checkpoint(bad_scale), FormatError);
}

}
