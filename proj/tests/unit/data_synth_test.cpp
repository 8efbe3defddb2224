#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "mcg/container.hpp"
#include "mcg/error.hpp"
#include "mcg/records.hpp"
#include "mcg/video.hpp"
#include "support/gradcheck.hpp"

namespace mcg {
namespace {

// Pixel-mass centroid (in continuous pixel coordinates) of pixels that differ
// from white in frame f.
std::pair<double, double> mass_centroid(const PixelVideo& v, std::size_t f) {
    double sx = 0, sy = 0, n = 0;
    for (std::size_t y = 0; y < v.height(); ++y)
        for (std::size_t x = 0; x < v.width(); ++x) {
            const bool ink = v.data.at(0, f, y, x) != 1.0 || v.data.at(1, f, y, x) != 1.0 || v.data.at(2, f, y, x) != 1.0;
            if (!ink) continue;
            sx += static_cast<double>(x) + 0.5;
            sy += static_cast<double>(y) + 0.5;
            n += 1;
        }
    return {sx / n, sy / n};
}

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "mcg_data_synth_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

TEST(GenerateMovingShape, StaticTrajectoryGivesIdenticalFrames) {
    MotionSpec spec;
    spec.trajectory = static_trajectory({0.5, 0.5, 0.25, 0.25}, 6);
    const PixelVideo v = generate_moving_shape_video(spec, {6, 16, 16});
    for (std::size_t f = 1; f < 6; ++f) EXPECT_EQ(slice_frames(v.data, f, 1), slice_frames(v.data, 0, 1));
    v.validate();
}

TEST(GenerateMovingShape, ZeroRadiusCircleIsSingleDot) {
    MotionSpec spec;
    spec.shape = ShapeKind::kCircle;
    spec.size = 0;
    spec.trajectory = linear_trajectory(0.2, 0.5, 0.8, 0.5, 4, 0.1, 0.1);
    const PixelVideo v = generate_moving_shape_video(spec, {4, 16, 16});
    for (std::size_t f = 0; f < 4; ++f) {
        int dots = 0;
        for (std::size_t y = 0; y < 16; ++y)
            for (std::size_t x = 0; x < 16; ++x) dots += v.data.at(0, f, y, x) == 0.0;
        EXPECT_EQ(dots, 1) << "frame " << f;
    }
}

TEST(GenerateMovingShape, OutOfFrameNamesFrame) {
    MotionSpec spec;
    spec.size = 6;
    spec.trajectory = linear_trajectory(0.5, 0.5, 0.95, 0.5, 5, 0.1, 0.1);
    try {
        generate_moving_shape_video(spec, {5, 16, 16});
        FAIL() << "expected rejection";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("frame 4"), std::string::npos) << e.what();
    }
}

TEST(GenerateMovingShape, DeterministicBytes) {
    CorpusConfig cfg;
    cfg.count = 8;
    cfg.seed = 42;
    const auto a = generate_corpus(cfg);
    const auto b = generate_corpus(cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].video.data, b[i].video.data);
        EXPECT_EQ(a[i].label, b[i].label);
    }
}

TEST(GenerateMovingShape, CentroidFidelityOnRandomSpecs) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.2, 0.8);
    for (int trial = 0; trial < 200; ++trial) {
        MotionSpec spec;
        spec.shape = trial % 2 ? ShapeKind::kCircle : ShapeKind::kSquare;
        spec.size = 1 + trial % 3;
        spec.color = {0.2, 0.3, 0.4};
        spec.trajectory = linear_trajectory(u(rng), u(rng), u(rng), u(rng), 5, 0.1, 0.1);
        const VideoDims dims{5, 24, 20};
        const PixelVideo v = generate_moving_shape_video(spec, dims);
        for (std::size_t f = 0; f < dims.frames; ++f) {
            const auto [cx, cy] = mass_centroid(v, f);
            EXPECT_LE(std::abs(cx - box_center_px(spec.trajectory.boxes[f].cx, dims.width)), 1.0);
            EXPECT_LE(std::abs(cy - box_center_px(spec.trajectory.boxes[f].cy, dims.height)), 1.0);
        }
    }
}

TEST(BoxReference, FullFrameBoxIsAllBlack) {
    const PixelVideo v = synthesize_box_reference(static_trajectory({0.5, 0.5, 1.0, 1.0}, 3), {3, 8, 8});
    EXPECT_EQ(v.data.max_abs(), 0.0);
}

TEST(BoxReference, DiagonalCentroidWithinOnePixel) {
    const VideoDims dims{16, 32, 32};
    const TrajectorySpec t = linear_trajectory(0.2, 0.2, 0.8, 0.8, 16, 0.2, 0.15);
    const PixelVideo v = synthesize_box_reference(t, dims);
    for (std::size_t f = 0; f < 16; ++f) {
        const auto [cx, cy] = mass_centroid(v, f);
        EXPECT_LE(std::abs(cx - box_center_px(t.boxes[f].cx, 32)), 1.0);
        EXPECT_LE(std::abs(cy - box_center_px(t.boxes[f].cy, 32)), 1.0);
    }
}

TEST(BoxReference, EightBenchmarkTrajectoriesAreDistinctAndFaithful) {
    const VideoDims dims{16, 16, 16};
    const auto trajs = benchmark_trajectories(16);
    ASSERT_EQ(trajs.size(), 8u);
    ASSERT_EQ(benchmark_trajectory_names().size(), 8u);
    std::set<Storage> seen;
    for (const auto& t : trajs) {
        const PixelVideo v = synthesize_box_reference(t, dims);
        seen.insert(v.data.storage());
        for (std::size_t f = 0; f < 16; ++f) {
            const auto [cx, cy] = mass_centroid(v, f);
            EXPECT_LE(std::abs(cx - box_center_px(t.boxes[f].cx, 16)), 1.0);
            EXPECT_LE(std::abs(cy - box_center_px(t.boxes[f].cy, 16)), 1.0);
        }
    }
    EXPECT_EQ(seen.size(), 8u);
}

TEST(BoxReference, RejectsOutOfFrameBox) {
    const TrajectorySpec t = linear_trajectory(0.5, 0.5, 0.95, 0.5, 4, 0.3, 0.3);
    EXPECT_THROW(synthesize_box_reference(t, {4, 16, 16}), ValidationError);
}

TEST(Trajectory, RoundingIsHalfUp) {
    EXPECT_EQ(to_pixel(0.5 / 16.0, 16), 1);  // 0.5 px rounds up
    EXPECT_EQ(to_pixel(0.49 / 16.0, 16), 0);
    EXPECT_THROW((TrajectorySpec{{{0.5, 0.5, 0.0, 0.1}}}.validate()), ValidationError);
    EXPECT_THROW((TrajectorySpec{{{1.5, 0.5, 0.2, 0.2}}}.validate()), ValidationError);
}

TEST(Container, ZerosRoundTrip) {
    const auto path = temp_file("zeros.mcgt");
    const Tensor z({3, 2, 8, 8});
    write_container(z, path, {{"kind", "zeros"}});
    const LoadedTensor back = read_container_full(path);
    EXPECT_EQ(back.tensor, z);
    EXPECT_EQ(back.metadata.at("kind"), "zeros");
}

TEST(Container, RandomRoundTripIsBitExact) {
    const auto path = temp_file("random.mcgt");
    const Tensor x = testing::random_tensor({4, 16, 8, 8}, 99);
    write_container(x, path);
    const Tensor y = read_container(path);
    ASSERT_EQ(y.shape(), x.shape());
    EXPECT_EQ(std::memcmp(x.data(), y.data(), x.size() * sizeof(double)), 0);
}

TEST(Container, Float32RoundTripForRepresentableValues) {
    const auto path = temp_file("f32.mcgt");
    Tensor x = testing::random_tensor({5, 3}, 5);
    for (double& v : x.values()) v = static_cast<float>(v);
    write_container(x, path, {}, DType::kFloat32);
    const LoadedTensor back = read_container_full(path);
    EXPECT_EQ(back.tensor, x);
    EXPECT_EQ(back.dtype, DType::kFloat32);
}

TEST(Container, TruncatedFileIsFormatError) {
    const auto path = temp_file("trunc.mcgt");
    write_container(testing::random_tensor({4, 4}, 1), path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
    EXPECT_THROW(read_container(path), FormatError);
    std::filesystem::resize_file(path, 6);
    EXPECT_THROW(read_container(path), FormatError);
}

TEST(Container, CorruptMagicAndSidecarMismatch) {
    const auto path = temp_file("bad.mcgt");
    write_container(testing::random_tensor({2, 3}, 1), path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    EXPECT_THROW(read_container(path), FormatError);

    write_container(testing::random_tensor({2, 3}, 1), path);
    save_json({{"format", "mcg-tensor"}, {"version", 1}, {"dtype", "float64"}, {"shape", {3, 2}}}, sidecar_path(path));
    EXPECT_THROW(read_container(path), FormatError);
}

TEST(Records, MotionSpecJsonRoundTripAndUnknownKeys) {
    MotionSpec m;
    m.shape = ShapeKind::kCircle;
    m.size = 2;
    m.color = {0.9, 0.1, 0.1};
    m.trajectory = linear_trajectory(0.2, 0.3, 0.7, 0.6, 4, 0.2, 0.2);
    const MotionSpec back = motion_from_json(to_json(m));
    EXPECT_EQ(back.shape, m.shape);
    EXPECT_EQ(back.size, m.size);
    EXPECT_EQ(back.color, m.color);
    EXPECT_EQ(back.trajectory.boxes, m.trajectory.boxes);

    auto j = to_json(m);
    j["speed"] = 3;
    EXPECT_THROW(motion_from_json(j), ValidationError);
}

TEST(Corpus, LabelsCoverClassesAndVideosAreValid) {
    CorpusConfig cfg;
    cfg.count = 12;
    cfg.classes = 3;
    const auto corpus = generate_corpus(cfg);
    std::set<std::size_t> labels;
    for (const auto& item : corpus) {
        labels.insert(item.label);
        item.video.validate();
    }
    EXPECT_EQ(labels.size(), 3u);
    cfg.classes = 5;
    EXPECT_THROW(generate_corpus(cfg), ValidationError);
}

}  // namespace
}  // namespace mcg
