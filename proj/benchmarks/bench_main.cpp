#include <benchmark/benchmark.h>

#include "glitchsim/accel.hpp"
#include "glitchsim/dspfault.hpp"
#include "glitchsim/pdn.hpp"
#include "glitchsim/sched.hpp"
#include "glitchsim/sim.hpp"
#include "glitchsim/tdc.hpp"
#include "glitchsim/trainer.hpp"

namespace glitchsim {
namespace {

std::vector<std::uint8_t> test_image() {
  std::vector<std::uint8_t> img(784, 0);
  Rng rng(3);
  for (std::size_t r = 6; r < 22; ++r)
    for (std::size_t c = 10; c < 18; ++c) img[r * 28 + c] = static_cast<std::uint8_t>(128 + rng() % 128);
  return img;
}

const QuantizedModel& model() {
  static const QuantizedModel m = quantize_model(init_lenet(1));
  return m;
}

void BM_DspOp(benchmark::State& state) {
  Rng rng(1);
  std::int64_t acc = 0;
  for (auto _ : state) {
    const auto a = static_cast<std::int64_t>(rng() & 0xff) - 128, c = static_cast<std::int64_t>((rng() >> 8) & 0xff) - 128;
    acc += dsp_op_raw(a, 0, c, kQ3_5);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_DspOp);

void BM_PdnStep(benchmark::State& state) {
  const PdnConfig cfg;
  Rng rng(2);
  VoltageState s = VoltageState::nominal(cfg);
  for (auto _ : state) {
    s = step(s, 8.0, 2.0, cfg, rng);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_PdnStep);

void BM_TdcMeasure(benchmark::State& state) {
  const TdcConfig cfg;
  Rng rng(3);
  std::int64_t cycle = 0;
  for (auto _ : state) benchmark::DoNotOptimize(measure(0.97, cfg, rng, cycle++));
}
BENCHMARK(BM_TdcMeasure);

void BM_SchemeParse(benchmark::State& state) {
  const std::string text = render_scheme(make_scheme(11800, 1, static_cast<std::uint64_t>(state.range(0)), 3));
  for (auto _ : state) benchmark::DoNotOptimize(parse_scheme(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_SchemeParse)->Arg(100)->Arg(4500);

void BM_Inference(benchmark::State& state) {
  const Accelerator acc(model());
  const auto img = test_image();
  for (auto _ : state) benchmark::DoNotOptimize(acc.infer(img).prediction);
}
BENCHMARK(BM_Inference)->Unit(benchmark::kMicrosecond);

void BM_GuidedAttack(benchmark::State& state) {
  const Simulator sim(model(), SimConfig{});
  const auto img = test_image();
  const auto trigger = profile_trigger(sim, img, 1).value_or(0);
  const auto cycles = strike_cycles(sim.schedule().window("conv2"), static_cast<std::uint64_t>(state.range(0)),
                                    Placement::Even, 1);
  const AttackScheme scheme = scheme_for_cycles(cycles, trigger, sim.config().f_sram_hz());
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim.run_guided(img, scheme, ++seed).prediction);
}
BENCHMARK(BM_GuidedAttack)->Arg(0)->Arg(4500)->Unit(benchmark::kMillisecond);

void BM_BlindAttack(benchmark::State& state) {
  const Simulator sim(model(), SimConfig{});
  const auto img = test_image();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim.run_blind(img, 4500, ++seed).prediction);
}
BENCHMARK(BM_BlindAttack)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace glitchsim

BENCHMARK_MAIN();
