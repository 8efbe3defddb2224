#include <benchmark/benchmark.h>

#include "mcg/diffusion.hpp"
#include "mcg/guidance.hpp"
#include "mcg/motion_pattern.hpp"

namespace {

using namespace mcg;

void BM_ExtractPattern(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0)), hw = static_cast<std::size_t>(state.range(1));
    const Tensor f = standard_normal({c, 16, hw, hw}, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_pattern(f, {hw / 2, hw / 2}, 0, 10.0, 0));
    }
    state.SetItemsProcessed(state.iterations() * 15);
}
BENCHMARK(BM_ExtractPattern)->Args({8, 8})->Args({16, 16})->Args({64, 16});

void BM_TrackPoint(benchmark::State& state) {
    const Tensor f = standard_normal({16, 16, 16, 16}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(track_point(f, {8, 8}, 0, 10.0));
}
BENCHMARK(BM_TrackPoint);

BackboneConfig config_for(std::int64_t levels) {
    BackboneConfig c;
    if (levels == 2) {
        c.level_channels = {8, 16};
        c.embed_dim = 16;
    }
    return c;
}

void BM_BackboneForward(benchmark::State& state) {
    const Backbone net(config_for(state.range(0)));
    const auto sched = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const Tensor z = standard_normal({4, static_cast<std::size_t>(state.range(1)), 16, 16}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(net.predict_noise(z, step_at(sched, 25), 0));
}
BENCHMARK(BM_BackboneForward)->Args({2, 16})->Args({3, 16})->Args({3, 32})->Unit(benchmark::kMillisecond);

void BM_GuidedStep(benchmark::State& state) {
    const Backbone net(config_for(state.range(0)));
    const auto sched = NoiseSchedule::build(50, ScheduleKind::kLinear);
    const auto traj = linear_trajectory(0.2, 0.5, 0.8, 0.5, 16, 0.25, 0.25);
    const VideoDims dims{16, 16, 16};
    ReferencePatternConfig rc;
    rc.ground_truth_paths = {box_center_path(traj, dims)};
    const auto ref = reference_pattern(trajectory_reference(traj, dims), {rc.ground_truth_paths[0].front()}, net, sched, rc);
    const Tensor z = standard_normal({4, 16, 16, 16}, 4);
    GuidanceConfig g;
    for (auto _ : state) {
        benchmark::DoNotOptimize(guided_noise_estimate(net, z, step_at(sched, 40), 0, ref.bundle, g));
    }
}
BENCHMARK(BM_GuidedStep)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
