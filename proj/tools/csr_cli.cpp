// csr: conservative super-resolution front end.
//
// Subcommands wire the library into the standard workflows: degrading HR
// images, post-hoc enforcement, upscaling with non-learned or trained
// models, training, chip-based evaluation, and the correction-surface dump.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "csr/checkpoint.hpp"
#include "csr/de_op.hpp"
#include "csr/errors.hpp"
#include "csr/image_io.hpp"
#include "csr/metrics.hpp"
#include "csr/model.hpp"
#include "csr/resample.hpp"
#include "csr/synthetic.hpp"
#include "csr/tile.hpp"
#include "csr/train.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitShape = 3;
constexpr int kExitMissingWeights = 4;
constexpr int kExitConfig = 5;
constexpr int kExitDiverged = 6;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const csr::ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const csr::EmptyDataset*>(&e)) return kExitConfig;
  if (dynamic_cast<const csr::DivergedLoss*>(&e)) return kExitDiverged;
  if (dynamic_cast<const csr::IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const csr::Error*>(&e)) return kExitShape;
  return 1;
}

template <typename F>
int run_guarded(F&& f) {
  try {
    f();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "csr: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

struct NormRange {
  double lo = 0.0;
  double hi = 255.0;
};

// PNGs live on the 0-255 scale by definition; raw grids are normalized by
// their own extent (widened when constant so the affine map stays valid).
NormRange data_range(const csr::Grid& g, const std::string& path) {
  if (csr::is_png_path(path)) return {0.0, 255.0};
  double lo = g.data.empty() ? 0.0 : g.data[0];
  double hi = lo;
  for (double v : g.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  return {lo, hi};
}

NormRange joint_range(const csr::Grid& a, const std::string& path_a,
                      const csr::Grid& b, const std::string& path_b) {
  if (csr::is_png_path(path_a) && csr::is_png_path(path_b))
    return {0.0, 255.0};
  const NormRange ra = data_range(a, path_a);
  const NormRange rb = data_range(b, path_b);
  NormRange r{std::min(ra.lo, rb.lo), std::max(ra.hi, rb.hi)};
  if (!(r.hi > r.lo)) r.hi = r.lo + 1.0;
  return r;
}

double max_conservation_residual(const csr::Grid& hr_norm,
                                 const csr::Grid& lr_norm, int factor) {
  const csr::Grid down = csr::downsample_avg(hr_norm, factor);
  double worst = 0.0;
  for (std::size_t i = 0; i < down.data.size(); ++i)
    worst = std::max(worst, std::abs(down.data[i] - lr_norm.data[i]));
  return worst;
}

std::vector<std::string> list_image_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw csr::IoError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string p = entry.path().string();
    if (csr::is_png_path(p) || csr::is_raw_grid_path(p)) files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw csr::IoError("cannot open " + path);
  out << text;
  if (!out) throw csr::IoError("short write to " + path);
}

// ---------------------------------------------------------------------------
// degrade

int cmd_degrade(const std::string& input, const std::string& output,
                int factor) {
  return run_guarded([&] {
    const csr::Grid g = csr::read_image(input);
    const csr::Grid down = csr::downsample_avg(g, factor);
    csr::write_image(down, output);
  });
}

// ---------------------------------------------------------------------------
// enforce

int cmd_enforce(const std::string& hr_path, const std::string& lr_path,
                const std::string& output, int factor) {
  return run_guarded([&] {
    const csr::Grid hr = csr::read_image(hr_path);
    const csr::Grid lr = csr::read_image(lr_path);
    const NormRange range = joint_range(hr, hr_path, lr, lr_path);
    const csr::Grid hr_norm = csr::normalize(hr, range.lo, range.hi);
    const csr::Grid lr_norm = csr::normalize(lr, range.lo, range.hi);

    const double correction =
        csr::correction_magnitude(hr_norm, lr_norm, factor);
    const csr::Grid enforced = csr::de_forward_grid(hr_norm, lr_norm, factor);
    const double residual =
        max_conservation_residual(enforced, lr_norm, factor);

    csr::write_image(csr::denormalize(enforced, range.lo, range.hi), output);
    std::printf("correction_magnitude %.9g\n", correction);
    std::printf("max_residual %.9g\n", residual);
  });
}

// ---------------------------------------------------------------------------
// upscale

int cmd_upscale(const std::string& input, const std::string& output,
                int factor, bool factor_explicit, const std::string& method,
                const std::string& weights_path, bool de_on) {
  if (method == "model" && weights_path.empty()) {
    std::cerr << "csr: --weights is required with --method model\n";
    return kExitMissingWeights;
  }
  return run_guarded([&] {
    const csr::Grid lr = csr::read_image(input);
    const NormRange range = data_range(lr, input);
    const csr::Grid lr_norm = csr::normalize(lr, range.lo, range.hi);

    csr::Grid out_norm;
    bool conserving_by_construction = false;
    if (method == "nearest") {
      out_norm = csr::upsample_nearest(lr_norm, factor);
    } else if (method == "bilinear") {
      out_norm = csr::upsample_bilinear(lr_norm, factor);
    } else if (method == "model") {
      const csr::Checkpoint ckpt = csr::load_checkpoint(weights_path);
      if (factor_explicit && ckpt.spec.upscale_factor() != factor)
        throw csr::ShapeMismatch(
            "model upscales by " +
            std::to_string(ckpt.spec.upscale_factor()) +
            ", but --factor is " + std::to_string(factor));
      factor = ckpt.spec.upscale_factor();
      const bool skip_de = ckpt.spec.has_de() && !de_on;
      out_norm = csr::model_upscale(ckpt.spec, ckpt.weights, lr_norm, skip_de);
      conserving_by_construction = ckpt.spec.has_de() && !skip_de;
    } else {
      throw csr::Error("unknown method '" + method + "'");
    }

    if (de_on && !conserving_by_construction)
      out_norm = csr::de_forward_grid(out_norm, lr_norm, factor);

    const double residual =
        max_conservation_residual(out_norm, lr_norm, factor);
    csr::write_image(csr::denormalize(out_norm, range.lo, range.hi), output);
    std::printf("max_residual %.9g\n", residual);
  });
}

// ---------------------------------------------------------------------------
// train

std::vector<csr::Grid> load_training_images(
    const std::vector<std::string>& files) {
  std::vector<csr::Grid> raw;
  raw.reserve(files.size());
  for (const std::string& f : files) raw.push_back(csr::read_image(f));

  // PNGs normalize on 0-255. Raw grids share one range so values stay
  // comparable across the dataset.
  double raw_lo = 0.0, raw_hi = 0.0;
  bool have_raw = false;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (csr::is_png_path(files[i])) continue;
    const NormRange r = data_range(raw[i], files[i]);
    if (!have_raw) {
      raw_lo = r.lo;
      raw_hi = r.hi;
      have_raw = true;
    } else {
      raw_lo = std::min(raw_lo, r.lo);
      raw_hi = std::max(raw_hi, r.hi);
    }
  }
  if (have_raw && !(raw_hi > raw_lo)) raw_hi = raw_lo + 1.0;

  std::vector<csr::Grid> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < files.size(); ++i)
    out.push_back(csr::is_png_path(files[i])
                      ? csr::normalize(raw[i], 0.0, 255.0)
                      : csr::normalize(raw[i], raw_lo, raw_hi));
  return out;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, std::string log_path, int factor,
              const std::optional<std::uint64_t>& seed_override) {
  return run_guarded([&] {
    csr::TrainConfig config = csr::load_train_config(config_path);
    if (seed_override) config.seed = *seed_override;

    const std::vector<std::string> files = list_image_files(data_dir);
    if (files.empty())
      throw csr::EmptyDataset("no .png or .csrg files in " + data_dir);
    const std::vector<csr::Grid> dataset = load_training_images(files);
    for (const csr::Grid& g : dataset)
      if (g.channels != dataset.front().channels)
        throw csr::ShapeMismatch("training images disagree on channel count");

    const csr::ModelSpec spec =
        csr::make_sr_model(dataset.front().channels, factor, config.with_de);
    const csr::TrainResult result = csr::train(spec, config, dataset);

    csr::save_checkpoint(spec, result.weights, out_path);
    if (log_path.empty()) log_path = out_path + ".log.csv";
    std::ostringstream log;
    csr::write_train_log_csv(result, config, log);
    write_text_file(log_path, log.str());
    std::printf("final_val_mse %.9g\n", result.final_val_mse);
    std::printf("final_val_psnr %.9g\n", result.final_val_psnr);
    if (result.has_correction)
      std::printf("final_val_correction %.9g\n", result.final_val_correction);
  });
}

// ---------------------------------------------------------------------------
// eval

struct EvalRow {
  std::string name;
  csr::MetricReport report;
  double residual = 0.0;
};

EvalRow eval_with_model(const csr::Checkpoint& ckpt, const csr::Grid& truth,
                        const std::string& path, int factor, int chip,
                        int stride) {
  const NormRange range = data_range(truth, path);
  csr::Grid truth_norm = csr::normalize(truth, range.lo, range.hi);
  const int h = (truth_norm.height / factor) * factor;
  const int w = (truth_norm.width / factor) * factor;
  if (h != truth_norm.height || w != truth_norm.width)
    truth_norm = csr::crop(truth_norm, 0, 0, h, w);

  const csr::Grid lr = csr::downsample_avg(truth_norm, factor);
  const csr::TileSet tiles = csr::tile(lr, chip, stride);

  std::vector<csr::Grid> outputs;
  outputs.reserve(tiles.origins.size());
  double residual = 0.0;
  for (std::size_t i = 0; i < tiles.origins.size(); ++i) {
    const csr::Grid chip_lr = csr::chip_at(lr, tiles, i);
    csr::Grid out = csr::model_upscale(ckpt.spec, ckpt.weights, chip_lr);
    if (ckpt.spec.has_de())
      residual =
          std::max(residual, max_conservation_residual(out, chip_lr, factor));
    outputs.push_back(std::move(out));
  }
  const csr::Grid assembled = csr::assemble_centers(tiles, outputs, factor);
  const csr::ScoredRegion region = csr::scored_region(tiles);
  const csr::Grid truth_crop =
      csr::crop(truth_norm, region.row0 * factor, region.col0 * factor,
                region.height * factor, region.width * factor);

  EvalRow row;
  row.name = fs::path(path).filename().string();
  row.report = csr::evaluate_pair(csr::denormalize(assembled, 0.0, 255.0),
                                  csr::denormalize(truth_crop, 0.0, 255.0));
  row.residual = residual;
  return row;
}

EvalRow eval_against_pred(const csr::Grid& pred, const csr::Grid& truth,
                          const std::string& path, int factor, int chip,
                          int stride) {
  if (!pred.same_shape(truth))
    throw csr::ShapeMismatch("prediction and truth dims differ for " + path);
  const NormRange range = data_range(truth, path);
  csr::Grid truth_norm = csr::normalize(truth, range.lo, range.hi);
  csr::Grid pred_norm = csr::normalize(pred, range.lo, range.hi);
  const int h = (truth_norm.height / factor) * factor;
  const int w = (truth_norm.width / factor) * factor;
  if (h != truth_norm.height || w != truth_norm.width) {
    truth_norm = csr::crop(truth_norm, 0, 0, h, w);
    pred_norm = csr::crop(pred_norm, 0, 0, h, w);
  }

  // A precomputed prediction run through the chip pipeline reproduces its
  // own pixels, so scoring reduces to the scored center region.
  const csr::Grid lr_like(h / factor, w / factor, 1);
  const csr::TileSet tiles = csr::tile(lr_like, chip, stride);
  const csr::ScoredRegion region = csr::scored_region(tiles);
  const csr::Grid pred_crop =
      csr::crop(pred_norm, region.row0 * factor, region.col0 * factor,
                region.height * factor, region.width * factor);
  const csr::Grid truth_crop =
      csr::crop(truth_norm, region.row0 * factor, region.col0 * factor,
                region.height * factor, region.width * factor);

  EvalRow row;
  row.name = fs::path(path).filename().string();
  row.report = csr::evaluate_pair(csr::denormalize(pred_crop, 0.0, 255.0),
                                  csr::denormalize(truth_crop, 0.0, 255.0));
  return row;
}

int cmd_eval(const std::string& pred_or_weights, const std::string& truth_dir,
             int factor, int chip, int stride, const std::string& out_path,
             int threads) {
  return run_guarded([&] {
    const std::vector<std::string> truth_files = list_image_files(truth_dir);
    if (truth_files.empty())
      throw csr::IoError("no .png or .csrg files in " + truth_dir);

    const bool model_mode = fs::is_regular_file(pred_or_weights);
    std::optional<csr::Checkpoint> ckpt;
    if (model_mode) ckpt = csr::load_checkpoint(pred_or_weights);
    const bool with_residual = model_mode && ckpt->spec.has_de();

    std::vector<EvalRow> rows(truth_files.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= truth_files.size()) return;
        try {
          const csr::Grid truth = csr::read_image(truth_files[i]);
          if (model_mode) {
            rows[i] = eval_with_model(*ckpt, truth, truth_files[i], factor,
                                      chip, stride);
          } else {
            const std::string pred_path =
                (fs::path(pred_or_weights) /
                 fs::path(truth_files[i]).filename())
                    .string();
            if (!fs::is_regular_file(pred_path))
              throw csr::IoError("missing prediction " + pred_path);
            rows[i] = eval_against_pred(csr::read_image(pred_path), truth,
                                        truth_files[i], factor, chip, stride);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    const int n_threads =
        std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::ostringstream csv;
    csv << (with_residual ? "image,psnr_db,ssim,mse,residual\n"
                          : "image,psnr_db,ssim,mse\n");
    double psnr_sum = 0.0, ssim_sum = 0.0, mse_sum = 0.0, res_max = 0.0;
    for (const EvalRow& row : rows) {
      csv << row.name << ',' << format_metric(row.report.psnr_db) << ','
          << format_metric(row.report.ssim) << ','
          << format_metric(row.report.mse);
      if (with_residual) csv << ',' << format_metric(row.residual);
      csv << '\n';
      psnr_sum += row.report.psnr_db;
      ssim_sum += row.report.ssim;
      mse_sum += row.report.mse;
      res_max = std::max(res_max, row.residual);
    }
    const double n = static_cast<double>(rows.size());
    csv << "mean," << format_metric(psnr_sum / n) << ','
        << format_metric(ssim_sum / n) << ',' << format_metric(mse_sum / n);
    if (with_residual) csv << ',' << format_metric(res_max);
    csv << '\n';

    if (out_path.empty())
      std::cout << csv.str();
    else
      write_text_file(out_path, csv.str());
  });
}

// ---------------------------------------------------------------------------
// plot-correction

int cmd_plot_correction(int n, const std::string& out_path) {
  return run_guarded([&] {
    if (n < 2) throw csr::Error("plot-correction: need n >= 2");
    // Mirror-exact spacing: x_i = (2i - (n-1)) / (n-1) pairs to exact
    // negations, so the sample mean is exactly zero for even n.
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      x[static_cast<std::size_t>(i)] =
          static_cast<double>(2 * i - (n - 1)) / static_cast<double>(n - 1);
    std::vector<double> p(201);
    for (int k = 0; k < 201; ++k)
      p[static_cast<std::size_t>(k)] = static_cast<double>(k - 100) / 100.0;

    const std::vector<csr::CorrectionSample> table =
        csr::correction_surface(x, p);
    std::ostringstream csv;
    csr::write_correction_csv(table, csv);
    if (out_path.empty())
      std::cout << csv.str();
    else
      write_text_file(out_path, csv.str());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conservative super-resolution toolkit"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  int threads = 1;
  app.add_option("--seed", seed, "override the training seed");
  app.add_option("--threads", threads, "worker threads for eval")
      ->check(CLI::PositiveNumber);

  std::string input, output, hr_path, lr_path, weights_path, config_path;
  std::string data_dir, truth_dir, pred_or_weights, log_path, out_csv;
  std::string method = "nearest", de_flag = "off";
  int factor = 4, chip = 48, stride = 24, n_samples = 16;

  CLI::App* degrade =
      app.add_subcommand("degrade", "2D-average downsample an image");
  degrade->add_option("input", input)->required();
  degrade->add_option("output", output)->required();
  degrade->add_option("--factor", factor, "downsampling factor")
      ->check(CLI::PositiveNumber);

  CLI::App* enforce = app.add_subcommand(
      "enforce", "project an HR image onto exact conservation");
  enforce->add_option("hr", hr_path)->required();
  enforce->add_option("lr", lr_path)->required();
  enforce->add_option("output", output)->required();
  enforce->add_option("--factor", factor)->check(CLI::PositiveNumber);

  CLI::App* upscale = app.add_subcommand("upscale", "upsample an image");
  upscale->add_option("input", input)->required();
  upscale->add_option("output", output)->required();
  upscale->add_option("--factor", factor)->check(CLI::PositiveNumber);
  upscale->add_option("--method", method, "nearest|bilinear|model")
      ->check(CLI::IsMember({"nearest", "bilinear", "model"}));
  upscale->add_option("--weights", weights_path, "checkpoint for --method model");
  upscale->add_option("--de", de_flag, "on|off: enforce conservation")
      ->check(CLI::IsMember({"on", "off"}));

  CLI::App* train = app.add_subcommand("train", "train the SR model");
  train->add_option("config", config_path)->required();
  train->add_option("data", data_dir)->required();
  train->add_option("weights_out", output)->required();
  train->add_option("--factor", factor, "upscaling factor of the model")
      ->check(CLI::PositiveNumber);
  train->add_option("--log", log_path, "training log CSV path");

  CLI::App* eval = app.add_subcommand(
      "eval", "chip-based evaluation against a truth directory");
  eval->add_option("pred_or_weights", pred_or_weights,
                   "checkpoint file or directory of predictions")
      ->required();
  eval->add_option("truth", truth_dir)->required();
  eval->add_option("--factor", factor)->check(CLI::PositiveNumber);
  eval->add_option("--chip", chip)->check(CLI::PositiveNumber);
  eval->add_option("--stride", stride)->check(CLI::PositiveNumber);
  eval->add_option("--out", out_csv, "CSV output path (default stdout)");

  CLI::App* plot = app.add_subcommand(
      "plot-correction", "dump the correction surface for a sample block");
  plot->add_option("--n", n_samples, "number of block samples")
      ->check(CLI::PositiveNumber);
  plot->add_option("--out", out_csv, "CSV output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (degrade->parsed()) return cmd_degrade(input, output, factor);
  if (enforce->parsed())
    return cmd_enforce(hr_path, lr_path, output, factor);
  if (upscale->parsed())
    return cmd_upscale(input, output, factor, upscale->count("--factor") > 0,
                       method, weights_path, de_flag == "on");
  if (train->parsed())
    return cmd_train(config_path, data_dir, output, log_path, factor, seed);
  if (eval->parsed())
    return cmd_eval(pred_or_weights, truth_dir, factor, chip, stride, out_csv,
                    threads);
  if (plot->parsed()) return cmd_plot_correction(n_samples, out_csv);
  return 1;
}
