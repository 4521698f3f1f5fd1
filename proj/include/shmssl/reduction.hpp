#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace shmssl {

inline constexpr std::size_t kFeatureDim = 512;
inline constexpr double kSegmentSeconds = 3600.0;

/// One hour of raw samples from one sensor channel.
struct TimeSeriesSegment {
    std::vector<double> samples;
    double sample_rate_hz = 1.0;
    double range_min = -1.0;
    double range_max = 1.0;
    std::uint32_t channel_id = 0;
    std::uint32_t hour_index = 0;

    std::size_t expected_count() const;
};

/// 512-bin inverted relative-frequency histogram of a segment. Every value
/// lies in [0, 1].
struct FeatureVector {
    std::vector<double> values;
    std::uint32_t channel_id = 0;
    std::uint32_t hour_index = 0;
};

/// Equal-width bins spanning [range_min, range_max]; bin i covers
/// [min + i*w, min + (i+1)*w) and the last bin is closed on the right.
/// Out-of-range samples fall into the edge bins. Output g_i = 1 - count_i / N.
FeatureVector ierfh(const TimeSeriesSegment& segment);

/// Bin index of one sample under the rule above.
std::size_t ierfh_bin(double value, double range_min, double range_max);

namespace serial {
std::vector<FeatureVector> ierfh_batch(std::span<const TimeSeriesSegment> segments);
}
namespace parallel {
/// One segment per OpenMP iteration; the first error raised is rethrown.
std::vector<FeatureVector> ierfh_batch(std::span<const TimeSeriesSegment> segments);
}

/// True when the segment holds fewer samples than 3600 s * sample rate.
bool detect_missing(const TimeSeriesSegment& segment);

// Feature file (.ierfh), little-endian:
//   "SHMIERFH" | u32 version | u64 count | u32 dim (512) | u32 flags (bit 0: labeled) |
//   count x (u32 channel, u32 hour, i32 label or -1, dim x f32)
inline constexpr std::uint32_t kFeatureFileVersion = 1;

struct FeatureFile {
    std::vector<FeatureVector> features;
    std::vector<int> labels;  // empty when the file is unlabeled
};

void write_features(const std::filesystem::path& path, std::span<const FeatureVector> features,
                    std::span<const int> labels = {});
FeatureFile read_features(const std::filesystem::path& path);

/// Raw segment CSV with a "time,value" header, one sample per row.
void write_segment_csv(const std::filesystem::path& path, const TimeSeriesSegment& segment);
TimeSeriesSegment read_segment_csv(const std::filesystem::path& path, double range_min, double range_max);

}  // namespace shmssl
