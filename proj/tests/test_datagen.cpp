#include "shmssl/datagen.hpp"
#include "shmssl/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace shmssl;

namespace {

PatternSpec spec_for(Pattern p, std::uint64_t seed) {
    PatternSpec s;
    s.pattern = p;
    s.seed = seed;
    return s;
}

double stddev(const std::vector<double>& x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

TEST(GenSegment, Deterministic) {
    EXPECT_EQ(gen_segment(spec_for(Pattern::Normal, 7)).samples, gen_segment(spec_for(Pattern::Normal, 7)).samples);
    EXPECT_NE(gen_segment(spec_for(Pattern::Normal, 7)).samples, gen_segment(spec_for(Pattern::Normal, 8)).samples);
}

TEST(GenSegment, MinorIsSmall) {
    const PatternSpec s = spec_for(Pattern::Minor, 3);
    EXPECT_LE(stddev(gen_segment(s).samples) / s.base_amplitude, 0.05);
}

TEST(GenSegment, SquareHasTwoLevels) {
    const PatternSpec s = spec_for(Pattern::Square, 4);
    std::vector<double> x = gen_segment(s).samples;
    // Two-level quantization: split at the midpoint of the range and measure
    // how many samples sit within 1% of the range from their half's median.
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double mid = 0.5 * (sorted.front() + sorted.back());
    std::vector<double> lo, hi;
    for (double v : x) (v < mid ? lo : hi).push_back(v);
    ASSERT_FALSE(lo.empty());
    ASSERT_FALSE(hi.empty());
    std::nth_element(lo.begin(), lo.begin() + static_cast<std::ptrdiff_t>(lo.size() / 2), lo.end());
    std::nth_element(hi.begin(), hi.begin() + static_cast<std::ptrdiff_t>(hi.size() / 2), hi.end());
    const double l = lo[lo.size() / 2], h = hi[hi.size() / 2];
    const double tol = 0.01 * std::abs(h - l);
    const auto near = std::count_if(x.begin(), x.end(),
                                    [&](double v) { return std::min(std::abs(v - l), std::abs(v - h)) <= tol; });
    EXPECT_GE(static_cast<double>(near), 0.95 * static_cast<double>(x.size()));
}

TEST(GenSegment, EveryPatternMeetsItsContract) {
    for (Pattern p : {Pattern::Normal, Pattern::Missing, Pattern::Minor, Pattern::Outlier, Pattern::Square,
                      Pattern::Trend, Pattern::Drift, Pattern::Biased, Pattern::Noise}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const PatternSpec s = spec_for(p, seed);
            const auto violation = check_pattern(s, gen_segment(s));
            EXPECT_FALSE(violation.has_value()) << to_string(p) << " seed " << seed << ": " << *violation;
        }
    }
}

TEST(GenSegment, UnknownPatternTag) {
    EXPECT_THROW(parse_pattern("wobble"), ConfigError);
    EXPECT_EQ(parse_pattern("drift"), Pattern::Drift);
}

TEST(GenDataset, CaseOneScaledTotal) {
    const auto counts = scaled_counts(Case::One, 0.1);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), 2533u);
    const auto& original = case_original_counts(Case::One);
    EXPECT_EQ(std::accumulate(original.begin(), original.end(), std::size_t{0}), 25330u);
}

TEST(GenDataset, CaseTwoCounts) {
    const auto data = gen_dataset(Case::Two, {10, 10, 10, 10, 10}, 5);
    ASSERT_EQ(data.size(), 50u);
    std::vector<int> per(5, 0);
    for (const auto& s : data) {
        ++per[static_cast<std::size_t>(s.label)];
        EXPECT_EQ(s.feature.values.size(), 512u);
    }
    EXPECT_EQ(per, std::vector<int>(5, 10));
    EXPECT_TRUE(gen_dataset(Case::Two, {0, 0, 0, 0, 0}, 5).empty());
}

TEST(GenDataset, ClassLists) {
    EXPECT_EQ(case_patterns(Case::One),
              (std::vector<Pattern>{Pattern::Normal, Pattern::Minor, Pattern::Outlier, Pattern::Square, Pattern::Trend,
                                    Pattern::Drift}));
    EXPECT_EQ(case_patterns(Case::Two), (std::vector<Pattern>{Pattern::Normal, Pattern::Minor, Pattern::Biased,
                                                              Pattern::Outlier, Pattern::Noise}));
}

TEST(GenDataset, ForeignPatternIsConfigError) {
    EXPECT_THROW(counts_for(Case::One, {{Pattern::Noise, 3}}), ConfigError);
    EXPECT_EQ(counts_for(Case::Two, {{Pattern::Noise, 3}}), (std::vector<std::size_t>{0, 0, 0, 0, 3}));
}

TEST(GenDataset, Deterministic) {
    const auto a = gen_dataset(Case::One, {2, 2, 2, 2, 2, 2}, 11);
    const auto b = gen_dataset(Case::One, {2, 2, 2, 2, 2, 2}, 11);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].feature.values, b[i].feature.values);
}

TEST(GenDataset, MissingSegmentsAreScreenedOut) {
    DatasetOptions opt;
    opt.missing_count = 4;
    const auto data = gen_dataset(Case::One, {3, 3, 3, 3, 3, 3}, 2, opt);
    EXPECT_EQ(data.size(), 18u);
}

// The classes must be learnable from the features: nearest centroid on half
// the data classifies the other half far above the 1/6 chance level. Trend and
// drift share a histogram shape once mean-centered, so perfect separation is
// not expected.
TEST(GenDataset, ClassesSeparableByNearestCentroid) {
    const auto data = gen_dataset(Case::One, {20, 20, 20, 20, 20, 20}, 13);
    const std::size_t k = 6, d = 512;
    std::vector<std::vector<double>> centroid(k, std::vector<double>(d, 0.0));
    std::vector<int> n(k, 0);
    for (std::size_t i = 0; i < data.size(); i += 2) {
        const auto c = static_cast<std::size_t>(data[i].label);
        for (std::size_t j = 0; j < d; ++j) centroid[c][j] += data[i].feature.values[j];
        ++n[c];
    }
    for (std::size_t c = 0; c < k; ++c)
        for (double& v : centroid[c]) v /= n[c];
    int correct = 0, total = 0;
    for (std::size_t i = 1; i < data.size(); i += 2) {
        std::size_t best = 0;
        double best_d = INFINITY;
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = data[i].feature.values[j] - centroid[c][j];
                s += diff * diff;
            }
            if (s < best_d) {
                best_d = s;
                best = c;
            }
        }
        correct += static_cast<int>(best) == data[i].label;
        ++total;
    }
    EXPECT_GE(static_cast<double>(correct) / total, 0.6);
}
