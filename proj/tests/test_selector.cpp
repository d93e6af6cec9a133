#include "doctest.h"

#include <set>

#include "dynres/resolution_selector.hpp"

using namespace dynres;

namespace {

BoConfig exhaustive_config() {
  BoConfig c;
  c.omega_min = 10;
  c.omega_max = 40;
  c.n_init = 31;
  c.n_iter = 0;
  c.kernel.noise_sd = 1e-3;
  c.kernel.lengthscale = 0.1;
  return c;
}

// Sparse pooled maps plus dense scalars, like real features; the learnable
// label is a function of the distance scalar.
LabelRecord synthetic_label(Rng &rng, bool learnable) {
  constexpr int kScalars = 2 * kPoolSize * kPoolSize;
  LabelRecord r;
  r.features.resize(kFeatureSize);
  for (int k = 0; k < kScalars; ++k) r.features[k] = rng.uniform() < 0.1 ? rng.uniform() : 0.0;
  for (int k = kScalars; k < kFeatureSize; ++k) r.features[k] = rng.uniform();
  r.omega_star = learnable ? 10 + static_cast<int>(std::lround(90 * r.features[kScalars + 1])) : 42;
  return r;
}

}  // namespace

TEST_CASE("regularizer examples") {
  CHECK(regularizer(50, 10.0, 1e-3) == doctest::Approx(0.5));
  CHECK(regularizer(10, 0.0, 1e-3) == 0.0);
  CHECK(regularizer(100, 20.0, 0.0) == 0.0);
}

TEST_CASE("bo_normalize maps the bounds to [0, 1]") {
  BoConfig c;
  CHECK(bo_normalize(10, c) == 0.0);
  CHECK(bo_normalize(100, c) == 1.0);
  CHECK(bo_normalize(55, c) == 0.5);
}

TEST_CASE("label is the grid argmin of the final GP mean") {
  BoConfig c;
  const auto r = bo_label([](int w) { return std::pow(w - 37.0, 2) / 50.0 + std::sin(w * 0.3); }, c);
  const auto mean = bo_grid_mean(r.samples, c);
  CHECK(mean == r.grid_mean);
  const auto best = std::min_element(mean.begin(), mean.end()) - mean.begin();
  CHECK(r.omega_star == c.omega_min + best);
}

TEST_CASE("BO evaluates each resolution at most once within budget") {
  BoConfig c;
  const auto r = bo_label([](int w) { return std::abs(w - 73.0); }, c);
  CHECK(r.samples.size() <= static_cast<std::size_t>(c.n_init + c.n_iter));
  std::set<int> seen;
  for (const auto &s : r.samples) {
    CHECK(seen.insert(s.omega).second);
    CHECK(s.omega >= c.omega_min);
    CHECK(s.omega <= c.omega_max);
  }
  CHECK(std::abs(r.omega_star - 73) <= 5);
}

TEST_CASE("BO stops once the grid is exhausted") {
  BoConfig c;
  c.omega_min = 3;
  c.omega_max = 6;
  c.n_init = 2;
  c.n_iter = 20;
  const auto r = bo_label([](int w) { return -w; }, c);
  CHECK(r.samples.size() == 4);
  CHECK(r.omega_star == 6);
}

TEST_CASE("adding the size penalty never raises the label") {
  const BoConfig c = exhaustive_config();
  for (int center : {14, 22, 31, 38}) {
    auto f = [&](int w) { return std::pow(w - center, 2) / 4.0; };
    const int plain = bo_label(f, c).omega_star;
    for (double wr : {1e-3, 1e-2, 1e-1}) {
      const int pen = bo_label([&](int w) { return f(w) + regularizer(w, 50.0, wr); }, c).omega_star;
      CHECK(pen <= plain);
    }
  }
}

TEST_CASE("featurize layout and whole-block translation") {
  SimConfig sim;
  sim.n_pieces = 40;
  sim.layout = Layout::Blob;
  sim.blob_centers = {{0.2, 0.2}};
  const auto st = init_scene(sim, 1);
  const auto obs = observe(sim, st);
  const auto goal = make_goal(disk_heatmap(obs.transform, {0.3, 0.25}, 0.05), obs.transform, 50);
  const auto f = featurize(obs, goal);
  REQUIRE(f.size() == static_cast<std::size_t>(kFeatureSize));
  CHECK(f[2 * kPoolSize * kPoolSize] == doctest::Approx(double(obs.occupied_count()) / (64 * 64)));

  const double block = 4 * obs.transform.cell_size;  // one pooled cell
  std::vector<Vec2> moved = st.positions;
  for (Vec2 &p : moved) p += Vec2{block, 2 * block};
  const auto obs2 = rasterize(sim, moved, st.material);
  const auto goal2 =
      make_goal(disk_heatmap(obs.transform, {0.3 + block, 0.25 + 2 * block}, 0.05), obs.transform, 50);
  const auto g = featurize(obs2, goal2);
  for (int k = 0; k < 4; ++k)
    CHECK(g[2 * kPoolSize * kPoolSize + k] ==
          doctest::Approx(f[2 * kPoolSize * kPoolSize + k]).epsilon(1e-12));
  for (int r = 0; r + 2 < kPoolSize; ++r)
    for (int c = 0; c + 1 < kPoolSize; ++c) {
      CHECK(g[(r + 2) * kPoolSize + c + 1] == doctest::Approx(f[r * kPoolSize + c]));
      CHECK(g[kPoolSize * kPoolSize + (r + 2) * kPoolSize + c + 1] ==
            doctest::Approx(f[kPoolSize * kPoolSize + r * kPoolSize + c]));
    }
}

TEST_CASE("regressor fits a constant label") {
  Rng rng(1);
  std::vector<LabelRecord> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(synthetic_label(rng, false));
  RegressorConfig cfg;
  cfg.val_fraction = 0.0;
  const auto fit = train_regressor(labels, cfg, 3);
  for (const auto &l : labels) CHECK(predict_resolution(fit.model, l.features, 1000) == 42);
}

TEST_CASE("regressor beats the constant predictor on a learnable label") {
  Rng rng(2);
  std::vector<LabelRecord> labels;
  for (int i = 0; i < 200; ++i) labels.push_back(synthetic_label(rng, true));
  RegressorConfig cfg;
  const auto fit = train_regressor(labels, cfg, 4);
  CHECK(fit.val_mse < 0.5 * fit.label_variance);
  const auto again = train_regressor(labels, cfg, 4);
  CHECK(encode_checkpoint(fit.model.to_tensors()) == encode_checkpoint(again.model.to_tensors()));
}

TEST_CASE("predictions are rounded and clamped") {
  Rng rng(3);
  std::vector<LabelRecord> labels;
  for (int i = 0; i < 20; ++i) {
    auto l = synthetic_label(rng, false);
    l.omega_star = 100;
    labels.push_back(l);
  }
  RegressorConfig cfg;
  cfg.val_fraction = 0.0;
  const auto fit = train_regressor(labels, cfg, 5);
  CHECK(predict_resolution(fit.model, labels[0].features, 1000) == 100);
  CHECK(predict_resolution(fit.model, labels[0].features, 30) == 30);
  CHECK(predict_resolution(fit.model, labels[0].features, 3) == 10);

  ResolutionRegressor low = fit.model;
  low.b2.value.data[0] = -5.0;
  for (double &v : low.w2.value.data) v = 0.0;
  CHECK(predict_resolution(low, labels[0].features, 1000) == 10);
}

TEST_CASE("regressor checkpoints round-trip") {
  Rng rng(4);
  std::vector<LabelRecord> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(synthetic_label(rng, true));
  RegressorConfig cfg;
  cfg.epochs = 5;
  const auto fit = train_regressor(labels, cfg, 6);
  const auto back = ResolutionRegressor::from_tensors(decode_checkpoint(encode_checkpoint(fit.model.to_tensors())));
  CHECK(back.raw(labels[0].features) == fit.model.raw(labels[0].features));
  CHECK(back.cfg.omega_max == cfg.omega_max);
}

TEST_CASE("label records round-trip") {
  LabelRecord r;
  r.source = "gather-3";
  r.step = 12;
  r.omega_star = 47;
  r.samples = {{10, 1.5}, {100, 2.25}};
  r.features = {0.5, 0.25};
  const std::string line = label_record_line(r);
  const auto back = parse_label_record(line);
  CHECK(back.source == r.source);
  CHECK(back.omega_star == 47);
  CHECK(back.samples.size() == 2);
  CHECK(back.samples[1].value == 2.25);
  CHECK(label_record_line(back) == line);
  CHECK(parse_label_file(line + "\n" + line + "\n").size() == 2);
}
