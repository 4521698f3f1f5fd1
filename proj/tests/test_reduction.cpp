#include "shmssl/error.hpp"
#include "shmssl/reduction.hpp"
#include "shmssl/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace shmssl;
namespace fs = std::filesystem;

namespace {

TimeSeriesSegment segment_of(std::vector<double> samples, double rate = 1.0) {
    TimeSeriesSegment s;
    s.samples = std::move(samples);
    s.sample_rate_hz = rate;
    return s;
}

}  // namespace

TEST(Ierfh, PointMass) {
    const FeatureVector f = ierfh(segment_of(std::vector<double>(3600, 0.0)));
    ASSERT_EQ(f.values.size(), kFeatureDim);
    const std::size_t bin = ierfh_bin(0.0, -1.0, 1.0);
    EXPECT_EQ(bin, 256u);
    for (std::size_t i = 0; i < kFeatureDim; ++i) EXPECT_EQ(f.values[i], i == bin ? 0.0 : 1.0);
}

TEST(Ierfh, BinEdges) {
    EXPECT_EQ(ierfh_bin(-1.0, -1.0, 1.0), 0u);
    EXPECT_EQ(ierfh_bin(1.0, -1.0, 1.0), 511u);
    EXPECT_EQ(ierfh_bin(-5.0, -1.0, 1.0), 0u);
    EXPECT_EQ(ierfh_bin(7.0, -1.0, 1.0), 511u);
    EXPECT_EQ(ierfh_bin(-1.0 + 2.0 / 512.0, -1.0, 1.0), 1u);
}

TEST(Ierfh, UniformConcentration) {
    Rng rng(42);
    std::vector<double> x(512 * 1000);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const FeatureVector f = ierfh(segment_of(std::move(x), 512000.0 / 3600.0));
    for (double g : f.values) EXPECT_NEAR(g, 1.0 - 1.0 / 512.0, 0.02);
}

TEST(Ierfh, CaseOneShape) {
    Rng rng(1);
    std::vector<double> x(72000);
    for (double& v : x) v = 0.1 * rng.normal();
    const FeatureVector f = ierfh(segment_of(std::move(x), 20.0));
    EXPECT_EQ(f.values.size(), 512u);
}

TEST(Ierfh, MassSumsToOneAndPermutationInvariant) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(3600);
        for (double& v : x) v = 0.4 * rng.normal() + 0.1 * trial - 1.0;
        const FeatureVector a = ierfh(segment_of(x));
        double mass = 0.0;
        for (double g : a.values) {
            EXPECT_GE(g, 0.0);
            EXPECT_LE(g, 1.0);
            mass += 1.0 - g;
        }
        EXPECT_NEAR(mass, 1.0, 1e-12);
        rng.shuffle(std::span<double>(x));
        EXPECT_EQ(ierfh(segment_of(x)).values, a.values);
    }
}

TEST(Ierfh, Errors) {
    EXPECT_THROW(ierfh(segment_of({})), MissingDataError);
    EXPECT_THROW(ierfh(segment_of({0.0, NAN})), NumericError);
}

TEST(Ierfh, ParallelBatchMatchesSerial) {
    Rng rng(3);
    std::vector<TimeSeriesSegment> segs;
    for (int i = 0; i < 16; ++i) {
        std::vector<double> x(3600);
        for (double& v : x) v = 0.3 * rng.normal();
        segs.push_back(segment_of(std::move(x)));
    }
    const auto a = serial::ierfh_batch(segs);
    const auto b = parallel::ierfh_batch(segs);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
    segs[5].samples.clear();
    EXPECT_THROW(parallel::ierfh_batch(segs), MissingDataError);
}

TEST(DetectMissing, StrictCount) {
    EXPECT_FALSE(detect_missing(segment_of(std::vector<double>(72000), 20.0)));
    EXPECT_TRUE(detect_missing(segment_of({}, 20.0)));
    EXPECT_TRUE(detect_missing(segment_of(std::vector<double>(71999), 20.0)));
}

TEST(FeatureFile, RoundTrip) {
    const fs::path p = fs::temp_directory_path() / "shmssl_features_roundtrip.ierfh";
    std::vector<FeatureVector> fs_in(3);
    for (std::size_t i = 0; i < 3; ++i) {
        fs_in[i].values.assign(512, 0.25 * static_cast<double>(i));
        fs_in[i].channel_id = static_cast<std::uint32_t>(i + 1);
        fs_in[i].hour_index = static_cast<std::uint32_t>(10 * i);
    }
    const std::vector<int> labels{2, 0, 1};
    write_features(p, fs_in, labels);
    const FeatureFile back = read_features(p);
    ASSERT_EQ(back.features.size(), 3u);
    EXPECT_EQ(back.labels, labels);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.features[i].values, fs_in[i].values);
        EXPECT_EQ(back.features[i].channel_id, fs_in[i].channel_id);
        EXPECT_EQ(back.features[i].hour_index, fs_in[i].hour_index);
    }
    write_features(p, fs_in);
    EXPECT_TRUE(read_features(p).labels.empty());
}

TEST(FeatureFile, TruncatedIsFormatError) {
    const fs::path p = fs::temp_directory_path() / "shmssl_features_trunc.ierfh";
    std::vector<FeatureVector> f(2);
    for (auto& v : f) v.values.assign(512, 0.5);
    write_features(p, f);
    fs::resize_file(p, fs::file_size(p) - 100);
    EXPECT_THROW(read_features(p), FormatError);
}

TEST(SegmentCsv, RoundTrip) {
    const fs::path p = fs::temp_directory_path() / "shmssl_segment.csv";
    TimeSeriesSegment s = segment_of({0.5, -0.25, 0.125, 0.0}, 2.0);
    write_segment_csv(p, s);
    const TimeSeriesSegment back = read_segment_csv(p, -1.0, 1.0);
    EXPECT_EQ(back.samples, s.samples);
    EXPECT_DOUBLE_EQ(back.sample_rate_hz, 2.0);
}
