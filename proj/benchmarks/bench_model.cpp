#include <benchmark/benchmark.h>

#include "csr/losses.hpp"
#include "csr/model.hpp"
#include "csr/rng.hpp"

namespace {

template <typename T>
csr::Tensor<T> random_tensor(int h, int w, int c, std::uint64_t seed) {
  csr::Rng rng(seed);
  csr::Tensor<T> t(h, w, c);
  for (T& v : t.data) v = static_cast<T>(rng.uniform(-0.9, 0.9));
  return t;
}

void ModelForward(benchmark::State& state) {
  const int chip = static_cast<int>(state.range(0));
  const csr::ModelSpec spec = csr::make_sr_model(1, 4, true);
  csr::Rng rng(1);
  const csr::Weights weights = csr::init_weights<float>(spec, rng);
  const csr::Tensor<float> input = random_tensor<float>(chip, chip, 1, 2);
  for (auto _ : state) {
    csr::Tensor<float> out = csr::model_forward(spec, weights, input);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(ModelForward)->Arg(8)->Arg(16)->Arg(48);

void ModelTrainStep(benchmark::State& state) {
  const int chip = static_cast<int>(state.range(0));
  const csr::ModelSpec spec = csr::make_sr_model(1, 4, true);
  csr::Rng rng(1);
  csr::Weights weights = csr::init_weights<float>(spec, rng);
  const csr::Tensor<float> input = random_tensor<float>(chip, chip, 1, 2);
  const csr::Tensor<float> truth =
      random_tensor<float>(chip * 4, chip * 4, 1, 3);
  for (auto _ : state) {
    csr::Tape<float> tape;
    const csr::Tensor<float> out =
        csr::model_forward(spec, weights, input, &tape);
    const csr::Loss<float> loss = csr::loss_mse(out, truth);
    csr::ModelGrads<float> grads =
        csr::model_backward(spec, weights, tape, loss.grad);
    benchmark::DoNotOptimize(grads.weights.convs.front().kernel.data());
  }
}
BENCHMARK(ModelTrainStep)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
