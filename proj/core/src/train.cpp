#include "csr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "csr/errors.hpp"
#include "csr/losses.hpp"
#include "csr/metrics.hpp"
#include "csr/resample.hpp"

namespace csr {

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::mse:
      return "mse";
    case LossKind::dual_resolution:
      return "dual_resolution";
    case LossKind::de_regularized:
      return "de_regularized";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_real(const std::string& v, int line) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'", line);
  }
  if (used != v.size())
    throw ConfigError("trailing junk after number '" + v + "'", line);
  return out;
}

long parse_integer(const std::string& v, int line) {
  const double d = parse_real(v, line);
  const long l = static_cast<long>(d);
  if (static_cast<double>(l) != d)
    throw ConfigError("expected an integer, got '" + v + "'", line);
  return l;
}

bool parse_switch(const std::string& v, int line) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("expected on/off, got '" + v + "'", line);
}

}  // namespace

TrainConfig parse_train_config(std::istream& in) {
  TrainConfig config;
  bool lambda_given = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "loss") {
      if (value == "mse")
        config.loss = LossKind::mse;
      else if (value == "dual_resolution")
        config.loss = LossKind::dual_resolution;
      else if (value == "de_regularized")
        config.loss = LossKind::de_regularized;
      else
        throw ConfigError("unknown loss '" + value + "'", line_no);
    } else if (key == "lambda") {
      config.lambda = parse_real(value, line_no);
      lambda_given = true;
      if (config.lambda < 0.0)
        throw ConfigError("lambda must be >= 0", line_no);
    } else if (key == "lr") {
      config.learning_rate = parse_real(value, line_no);
      if (!(config.learning_rate > 0.0))
        throw ConfigError("lr must be > 0", line_no);
    } else if (key == "beta1") {
      config.beta1 = parse_real(value, line_no);
    } else if (key == "beta2") {
      config.beta2 = parse_real(value, line_no);
    } else if (key == "epsilon") {
      config.epsilon = parse_real(value, line_no);
    } else if (key == "steps") {
      config.steps = parse_integer(value, line_no);
      if (config.steps < 1) throw ConfigError("steps must be >= 1", line_no);
    } else if (key == "batch") {
      config.batch = static_cast<int>(parse_integer(value, line_no));
      if (config.batch < 1) throw ConfigError("batch must be >= 1", line_no);
    } else if (key == "chip") {
      config.chip = static_cast<int>(parse_integer(value, line_no));
      if (config.chip < 1) throw ConfigError("chip must be >= 1", line_no);
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(parse_integer(value, line_no));
    } else if (key == "de") {
      config.with_de = parse_switch(value, line_no);
    } else {
      throw ConfigError("unknown key '" + key + "'", line_no);
    }
  }
  if (!lambda_given) {
    // The weightings reported for each loss variant.
    if (config.loss == LossKind::dual_resolution) config.lambda = 16.0;
    if (config.loss == LossKind::de_regularized) config.lambda = 100.0;
  }
  if (config.loss == LossKind::de_regularized && !config.with_de)
    throw ConfigError("loss=de_regularized requires de=on", 0);
  return config;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  return parse_train_config(in);
}

Grid dihedral(const Grid& g, int element) {
  if (g.height != g.width)
    throw NotSquare("dihedral: grid must be square");
  const bool flip = (element & 4) != 0;
  const int quarter_turns = element & 3;
  const int n = g.height;
  Grid out(n, n, g.channels);
  out.normalized = g.normalized;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      int sy = y, sx = x;
      switch (quarter_turns) {
        case 0:
          break;
        case 1:  // 90 degrees counterclockwise
          sy = x;
          sx = n - 1 - y;
          break;
        case 2:
          sy = n - 1 - y;
          sx = n - 1 - x;
          break;
        case 3:
          sy = n - 1 - x;
          sx = y;
          break;
      }
      if (flip) sx = n - 1 - sx;
      for (int c = 0; c < g.channels; ++c)
        out.at(y, x, c) = g.at(sy, sx, c);
    }
  }
  return out;
}

ChipPair augment(const ChipPair& pair, Rng& rng) {
  if (pair.lr.height != pair.lr.width || pair.hr.height != pair.hr.width)
    throw NotSquare("augment: chips must be square");
  const int element = rng.uniform_int(8);
  return {dihedral(pair.lr, element), dihedral(pair.hr, element)};
}

template <typename T>
Adam<T>::Adam(const ModelSpec& spec, double lr, double beta1, double beta2,
              double epsilon)
    : m_(zero_weights<T>(spec)),
      v_(zero_weights<T>(spec)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

template <typename T>
void Adam<T>::step(WeightsT<T>& weights, const WeightsT<T>& grads) {
  ++t_;
  const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
  const T eps = static_cast<T>(epsilon_);
  const T corr1 = static_cast<T>(1.0 - std::pow(beta1_, t_));
  const T corr2 = static_cast<T>(1.0 - std::pow(beta2_, t_));
  const T lr = static_cast<T>(lr_);
  for (std::size_t ci = 0; ci < weights.convs.size(); ++ci) {
    auto update = [&](std::vector<T>& w, std::vector<T>& m, std::vector<T>& v,
                      const std::vector<T>& g) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T mhat = m[i] / corr1;
        const T vhat = v[i] / corr2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    };
    update(weights.convs[ci].kernel, m_.convs[ci].kernel, v_.convs[ci].kernel,
           grads.convs[ci].kernel);
    update(weights.convs[ci].bias, m_.convs[ci].bias, v_.convs[ci].bias,
           grads.convs[ci].bias);
  }
}

template class Adam<float>;
template class Adam<double>;

double TrainResult::val_mse_at(long step) const {
  for (const LogRow& row : log)
    if (row.step == step && row.has_val) return row.val_mse;
  throw Error("no validation entry at step " + std::to_string(step));
}

namespace {

struct ValScores {
  double mse = 0.0;
  double psnr = 0.0;
  double correction = 0.0;
};

ValScores validate(const ModelSpec& spec, const Weights& weights,
                   const std::vector<Grid>& val_images, int factor) {
  ValScores scores;
  double mse_sum = 0.0, psnr_sum = 0.0, corr_sum = 0.0;
  for (const Grid& hr : val_images) {
    const Grid lr = downsample_avg(hr, factor);
    const Tensor<float> input = tensor_from_grid<float>(lr);
    Tensor<float> out;
    if (spec.has_de()) {
      ForwardSplit<float> split = model_forward_split(spec, weights, input);
      const Grid pre = grid_from_tensor(split.pre_de, true);
      const Grid post = grid_from_tensor(split.output, true);
      std::vector<double> diff(pre.data.size());
      for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = std::abs(pre.data[i] - post.data[i]);
      corr_sum += pairwise_mean(diff.data(), diff.size());
      out = std::move(split.output);
    } else {
      out = model_forward(spec, weights, input);
    }
    const Grid pred = grid_from_tensor(out, true);
    mse_sum += mse(pred, hr);
    psnr_sum += psnr_y(denormalize(pred, 0.0, 255.0),
                       denormalize(hr, 0.0, 255.0));
  }
  const double n = static_cast<double>(val_images.size());
  scores.mse = mse_sum / n;
  scores.psnr = psnr_sum / n;
  scores.correction = corr_sum / n;
  return scores;
}

}  // namespace

TrainResult train(const ModelSpec& spec, const TrainConfig& config,
                  const std::vector<Grid>& dataset) {
  spec.validate();
  if (dataset.empty()) throw EmptyDataset("train: dataset is empty");
  const int factor = spec.upscale_factor();
  const int chip_lr = config.chip;
  const int chip_hr = chip_lr * factor;

  // Trim each image to factor-aligned dims and keep those that can supply at
  // least one chip.
  std::vector<Grid> usable;
  for (const Grid& img : dataset) {
    if (!img.normalized)
      throw NotNormalized("train: dataset grids must be normalized");
    const int h = (img.height / factor) * factor;
    const int w = (img.width / factor) * factor;
    if (h / factor < chip_lr || w / factor < chip_lr) continue;
    usable.push_back(h == img.height && w == img.width ? img
                                                       : crop(img, 0, 0, h, w));
  }
  if (usable.empty())
    throw EmptyDataset("train: no image can supply a " +
                       std::to_string(chip_lr) + "-pixel chip");

  // Hold out the tail for validation; a lone image validates on itself.
  std::size_t n_val =
      usable.size() >= 2
          ? std::max<std::size_t>(1, usable.size() / 5)
          : 0;
  std::vector<Grid> train_images(usable.begin(), usable.end() - n_val);
  std::vector<Grid> val_images(usable.end() - n_val, usable.end());
  if (val_images.empty()) val_images = usable;

  Rng rng(config.seed);
  Weights weights = init_weights<float>(spec, rng);
  Adam<float> optimizer(spec, config.learning_rate, config.beta1, config.beta2,
                        config.epsilon);
  // Single 10x drop at 2/3 of the run, the scaled-down schedule.
  const long drop_step = config.steps * 2 / 3;

  TrainResult result;
  result.spec = spec;
  result.log.reserve(static_cast<std::size_t>(config.steps));

  const long val_every = 100;
  for (long step = 1; step <= config.steps; ++step) {
    if (drop_step > 0 && step == drop_step + 1)
      optimizer.set_learning_rate(config.learning_rate * 0.1);

    Weights grad_sum = zero_weights<float>(spec);
    double loss_sum = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      const Grid& img = train_images[rng.uniform_int(
          static_cast<int>(train_images.size()))];
      const int lr_h = img.height / factor, lr_w = img.width / factor;
      const int oy = rng.uniform_int(lr_h - chip_lr + 1);
      const int ox = rng.uniform_int(lr_w - chip_lr + 1);
      Grid hr_chip = crop(img, oy * factor, ox * factor, chip_hr, chip_hr);
      hr_chip = dihedral(hr_chip, rng.uniform_int(8));
      const Grid lr_chip = downsample_avg(hr_chip, factor);

      const Tensor<float> input = tensor_from_grid<float>(lr_chip);
      const Tensor<float> truth = tensor_from_grid<float>(hr_chip);
      Tape<float> tape;
      const Tensor<float> output = model_forward(spec, weights, input, &tape);

      ModelGrads<float> grads;
      switch (config.loss) {
        case LossKind::mse: {
          Loss<float> loss = loss_mse(output, truth);
          loss_sum += loss.value;
          grads = model_backward(spec, weights, tape, loss.grad);
          break;
        }
        case LossKind::dual_resolution: {
          Loss<float> loss =
              loss_dual_resolution(output, truth, config.lambda, factor);
          loss_sum += loss.value;
          grads = model_backward(spec, weights, tape, loss.grad);
          break;
        }
        case LossKind::de_regularized: {
          if (!spec.has_de())
            throw NoDELayer("train: de_regularized needs the enforcement head");
          const Tensor<float>& pre = tape.layer_inputs.back();
          DeRegularizedLoss<float> loss =
              loss_de_regularized(output, pre, truth, config.lambda);
          loss_sum += loss.value;
          grads = model_backward(spec, weights, tape, loss.grad_final,
                                 &loss.grad_pre);
          break;
        }
      }
      for (std::size_t ci = 0; ci < grad_sum.convs.size(); ++ci) {
        for (std::size_t i = 0; i < grad_sum.convs[ci].kernel.size(); ++i)
          grad_sum.convs[ci].kernel[i] += grads.weights.convs[ci].kernel[i];
        for (std::size_t i = 0; i < grad_sum.convs[ci].bias.size(); ++i)
          grad_sum.convs[ci].bias[i] += grads.weights.convs[ci].bias[i];
      }
    }

    const float inv_batch = 1.0f / static_cast<float>(config.batch);
    for (ConvParams<float>& conv : grad_sum.convs) {
      for (float& v : conv.kernel) v *= inv_batch;
      for (float& v : conv.bias) v *= inv_batch;
    }
    const double step_loss = loss_sum / config.batch;
    if (!std::isfinite(step_loss))
      throw DivergedLoss("train: loss diverged at step " +
                         std::to_string(step));
    optimizer.step(weights, grad_sum);
    if (!weights.all_finite())
      throw DivergedLoss("train: weights diverged at step " +
                         std::to_string(step));

    LogRow row;
    row.step = step;
    row.loss = step_loss;
    if (step % val_every == 0 || step == config.steps) {
      const ValScores scores = validate(spec, weights, val_images, factor);
      row.has_val = true;
      row.val_mse = scores.mse;
      row.val_psnr = scores.psnr;
      result.final_val_mse = scores.mse;
      result.final_val_psnr = scores.psnr;
      if (spec.has_de()) {
        result.final_val_correction = scores.correction;
        result.has_correction = true;
      }
    }
    result.log.push_back(row);
  }

  result.weights = std::move(weights);
  return result;
}

void write_train_log_csv(const TrainResult& result, const TrainConfig& config,
                         std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "# loss=%s lambda=%.9g de=%s seed=%llu\n",
                loss_kind_name(config.loss).c_str(), config.lambda,
                config.with_de ? "on" : "off",
                static_cast<unsigned long long>(config.seed));
  out << buf;
  out << "step,loss,val_mse,val_psnr\n";
  for (const LogRow& row : result.log) {
    if (row.has_val)
      std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g\n", row.step,
                    row.loss, row.val_mse, row.val_psnr);
    else
      std::snprintf(buf, sizeof(buf), "%ld,%.9g,,\n", row.step, row.loss);
    out << buf;
  }
}

}  // namespace csr
