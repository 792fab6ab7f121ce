#include <cmath>
#include <sstream>

#include "csr/errors.hpp"
#include "csr/model.hpp"
#include "csr/resample.hpp"
#include "csr/rng.hpp"
#include "csr/synthetic.hpp"
#include "csr/train.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace {

std::vector<csr::Grid> normalized_corpus(int count, int size,
                                         std::uint64_t seed) {
  std::vector<csr::Grid> out;
  for (const csr::Grid& g : csr::synthetic_corpus(count, size, seed))
    out.push_back(csr::normalize(g, 0.0, 255.0));
  return out;
}

csr::TrainConfig tiny_config(long steps, csr::LossKind loss, bool with_de) {
  csr::TrainConfig config;
  config.loss = loss;
  config.lambda = loss == csr::LossKind::de_regularized ? 100.0 : 16.0;
  config.learning_rate = 1e-3;
  config.steps = steps;
  config.batch = 2;
  config.chip = 6;
  config.seed = 9;
  config.with_de = with_de;
  return config;
}

}  // namespace

TEST_CASE("config parser: defaults, values, errors") {
  std::istringstream good(
      "# comment\n"
      "loss = dual_resolution\n"
      "lr = 2e-4\n"
      "steps = 50\n"
      "batch = 4\n"
      "chip = 12\n"
      "seed = 3\n"
      "de = off\n");
  const csr::TrainConfig c = csr::parse_train_config(good);
  CHECK(c.loss == csr::LossKind::dual_resolution);
  CHECK(c.lambda == 16.0);  // loss-specific default
  CHECK(c.learning_rate == 2e-4);
  CHECK(c.steps == 50);
  CHECK(c.batch == 4);
  CHECK(c.chip == 12);
  CHECK(c.seed == 3);
  CHECK_FALSE(c.with_de);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.999);
  CHECK(c.epsilon == 1e-7);

  std::istringstream unknown("steps = 5\nwat = 7\n");
  try {
    csr::parse_train_config(unknown);
    FAIL("expected ConfigError");
  } catch (const csr::ConfigError& e) {
    CHECK(e.line() == 2);
  }

  std::istringstream bad_value("steps = soon\n");
  CHECK_THROWS_AS(csr::parse_train_config(bad_value), csr::ConfigError);
  std::istringstream no_eq("steps\n");
  CHECK_THROWS_AS(csr::parse_train_config(no_eq), csr::ConfigError);
  std::istringstream reg_without_de("loss = de_regularized\nde = off\n");
  CHECK_THROWS_AS(csr::parse_train_config(reg_without_de), csr::ConfigError);
}

TEST_CASE("dihedral transforms form the full group") {
  csr::Rng rng(71);
  const csr::Grid g = oracle::random_grid(rng, 6, 6, 2);

  CHECK(csr::dihedral(g, 0).data == g.data);

  // Four quarter turns compose to the identity.
  csr::Grid turned = g;
  for (int k = 0; k < 4; ++k) turned = csr::dihedral(turned, 1);
  CHECK(turned.data == g.data);

  // A flip is an involution.
  CHECK(csr::dihedral(csr::dihedral(g, 4), 4).data == g.data);

  // All 8 elements are distinct on a generic grid.
  std::vector<std::vector<double>> images;
  for (int t = 0; t < 8; ++t) images.push_back(csr::dihedral(g, t).data);
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b) CHECK(images[a] != images[b]);

  CHECK_THROWS_AS(csr::dihedral(csr::Grid(3, 4, 1), 1), csr::NotSquare);
}

TEST_CASE("dihedral commutes with 2D-average downsampling") {
  csr::Rng rng(72);
  const csr::Grid hr = oracle::random_grid(rng, 12, 12, 1);
  for (int t = 0; t < 8; ++t) {
    const csr::Grid a = csr::downsample_avg(csr::dihedral(hr, t), 4);
    const csr::Grid b = csr::dihedral(csr::downsample_avg(hr, 4), t);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-14));
  }
}

TEST_CASE("augment applies one transform to both chips") {
  csr::Rng rng(73);
  const csr::Grid hr = oracle::random_grid(rng, 8, 8, 1);
  const csr::ChipPair pair{csr::downsample_avg(hr, 2), hr};
  csr::Rng aug_rng(5);
  const csr::ChipPair out = csr::augment(pair, aug_rng);
  // Whatever element was chosen, downsampling must still relate the chips.
  const csr::Grid down = csr::downsample_avg(out.hr, 2);
  for (std::size_t i = 0; i < down.data.size(); ++i)
    CHECK(down.data[i] == doctest::Approx(out.lr.data[i]).epsilon(1e-14));

  csr::ChipPair bad{csr::Grid(2, 3, 1), csr::Grid(4, 6, 1)};
  CHECK_THROWS_AS(csr::augment(bad, aug_rng), csr::NotSquare);
}

TEST_CASE("adam at t=1 reduces to the sign-scaled step") {
  csr::ModelSpec spec;
  spec.input_channels = 1;
  spec.layers = {csr::LayerSpec::conv(1, 1, 1)};
  spec.validate();

  auto weights = csr::zero_weights<double>(spec);
  weights.convs[0].kernel[0] = 0.5;
  auto grads = csr::zero_weights<double>(spec);
  grads.convs[0].kernel[0] = 0.03;

  const double lr = 1e-2, eps = 1e-7;
  csr::Adam<double> opt(spec, lr, 0.9, 0.999, eps);
  opt.step(weights, grads);
  // After bias correction at t=1: update = -lr * g / (sqrt(g^2) + eps).
  const double expected = 0.5 - lr * 0.03 / (std::sqrt(0.03 * 0.03) + eps);
  CHECK(weights.convs[0].kernel[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero learning rate leaves weights fixed") {
  const auto corpus = normalized_corpus(3, 48, 7);
  const csr::ModelSpec spec = csr::make_sr_model(1, 4, true);
  csr::TrainConfig config = tiny_config(1, csr::LossKind::mse, true);
  config.learning_rate = 1e-30;  // parser demands > 0; this is an effective 0
  const csr::TrainResult result = csr::train(spec, config, corpus);

  csr::Rng rng(config.seed);
  const csr::Weights init = csr::init_weights<float>(spec, rng);
  for (std::size_t ci = 0; ci < init.convs.size(); ++ci)
    for (std::size_t i = 0; i < init.convs[ci].kernel.size(); ++i)
      CHECK(std::abs(result.weights.convs[ci].kernel[i] -
                     init.convs[ci].kernel[i]) <= 1e-28f);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const auto corpus = normalized_corpus(3, 48, 7);
  const csr::ModelSpec spec = csr::make_sr_model(1, 2, true);
  csr::TrainConfig config = tiny_config(8, csr::LossKind::mse, true);

  const csr::TrainResult a = csr::train(spec, config, corpus);
  const csr::TrainResult b = csr::train(spec, config, corpus);
  for (std::size_t ci = 0; ci < a.weights.convs.size(); ++ci) {
    CHECK(a.weights.convs[ci].kernel == b.weights.convs[ci].kernel);
    CHECK(a.weights.convs[ci].bias == b.weights.convs[ci].bias);
  }
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].loss == b.log[i].loss);

  csr::TrainConfig other = config;
  other.seed = 10;
  const csr::TrainResult c = csr::train(spec, other, corpus);
  CHECK(a.weights.convs[0].kernel != c.weights.convs[0].kernel);
}

TEST_CASE("training drives the loss down") {
  const auto corpus = normalized_corpus(4, 48, 7);
  const csr::ModelSpec spec = csr::make_sr_model(1, 2, true);
  csr::TrainConfig config = tiny_config(120, csr::LossKind::mse, true);
  config.batch = 4;
  const csr::TrainResult result = csr::train(spec, config, corpus);

  double early = 0.0, late = 0.0;
  for (int i = 0; i < 10; ++i) {
    early += result.log[static_cast<std::size_t>(i)].loss;
    late += result.log[result.log.size() - 1 - static_cast<std::size_t>(i)].loss;
  }
  CHECK(late < early);
  CHECK(result.final_val_mse > 0.0);
  CHECK(result.has_correction);

  // Conservation still holds for the trained weights, not just at init.
  const csr::Grid lr = csr::downsample_avg(corpus.front(), 2);
  const csr::Grid hr = csr::model_upscale(spec, result.weights, lr);
  const csr::Grid round = csr::downsample_avg(hr, 2);
  for (std::size_t i = 0; i < round.data.size(); ++i)
    CHECK(round.data[i] == doctest::Approx(lr.data[i]).epsilon(1e-12));
}

TEST_CASE("train rejects empty or undersized datasets") {
  const csr::ModelSpec spec = csr::make_sr_model(1, 4, true);
  const csr::TrainConfig config = tiny_config(1, csr::LossKind::mse, true);
  CHECK_THROWS_AS(csr::train(spec, config, {}), csr::EmptyDataset);

  // Images smaller than one chip cannot feed the sampler.
  std::vector<csr::Grid> tiny{
      csr::normalize(csr::synthetic_texture(16, 3, 0), 0.0, 255.0)};
  csr::TrainConfig big_chip = config;
  big_chip.chip = 48;
  CHECK_THROWS_AS(csr::train(spec, big_chip, tiny), csr::EmptyDataset);
}

TEST_CASE("train log CSV carries the loss name and validation columns") {
  const auto corpus = normalized_corpus(3, 48, 7);
  const csr::ModelSpec spec = csr::make_sr_model(1, 2, false);
  csr::TrainConfig config = tiny_config(4, csr::LossKind::dual_resolution, false);
  const csr::TrainResult result = csr::train(spec, config, corpus);

  std::ostringstream out;
  csr::write_train_log_csv(result, config, out);
  const std::string csv = out.str();
  CHECK(csv.find("# loss=dual_resolution lambda=16") == 0);
  CHECK(csv.find("step,loss,val_mse,val_psnr\n") != std::string::npos);
  CHECK(csv.find("\n4,") != std::string::npos);
  CHECK(result.log.back().has_val);  // final step always validates
  CHECK(result.val_mse_at(4) == result.final_val_mse);
}

TEST_CASE("train reports divergence instead of emitting garbage") {
  const auto corpus = normalized_corpus(3, 48, 7);
  const csr::ModelSpec spec = csr::make_sr_model(1, 2, false);
  csr::TrainConfig config = tiny_config(40, csr::LossKind::mse, false);
  config.learning_rate = 1e25;  // Adam steps of ~1e25 overflow the forward
  CHECK_THROWS_AS(csr::train(spec, config, corpus), csr::DivergedLoss);
}
