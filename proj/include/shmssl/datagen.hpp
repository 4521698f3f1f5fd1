#pragma once

#include "shmssl/reduction.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace shmssl {

enum class Pattern { Normal, Missing, Minor, Outlier, Square, Trend, Drift, Biased, Noise };

const char* to_string(Pattern pattern);
Pattern parse_pattern(const std::string& text);

struct PatternSpec {
    Pattern pattern = Pattern::Normal;
    double base_amplitude = 0.12;
    double sample_rate_hz = 1.0;
    double duration_s = 3600.0;
    double range_min = -1.0;
    double range_max = 1.0;
    std::uint64_t seed = 0;
};

/// Synthesizes one raw segment exhibiting `spec.pattern`. The normal response
/// is three slowly-modulated random-phase modes plus white noise, rescaled so
/// its standard deviation equals base_amplitude; anomalies are layered on top.
TimeSeriesSegment gen_segment(const PatternSpec& spec);

/// Checks the defining statistical property of a generated pattern. Returns
/// a description of the first violated condition, or nothing when it holds.
std::optional<std::string> check_pattern(const PatternSpec& spec, const TimeSeriesSegment& segment);

struct LabeledSample {
    FeatureVector feature;
    int label = 0;
};

enum class Case { One = 1, Two = 2 };

/// Class list of a case, in label order.
const std::vector<Pattern>& case_patterns(Case c);
/// Per-class sample counts of the full (missing-free) dataset of a case.
const std::vector<std::size_t>& case_original_counts(Case c);
/// Original counts scaled by `scale` with largest-remainder rounding, so the
/// total equals round(scale * original total).
std::vector<std::size_t> scaled_counts(Case c, double scale);

struct DatasetOptions {
    double sample_rate_hz = 1.0;
    double duration_s = 3600.0;
    std::optional<double> base_amplitude;  // case default when unset
    std::optional<double> range_min;
    std::optional<double> range_max;
    /// Per-segment amplitude varies log-uniformly within +/- this fraction.
    double amplitude_jitter = 0.2;
    /// Extra missing-pattern segments generated and then screened out by detect_missing.
    std::size_t missing_count = 0;
};

double case_default_amplitude(Case c);
double case_range_min(Case c);
double case_range_max(Case c);

/// Generates `counts[k]` segments of class k (in case_patterns order), reduces
/// them to IERFH features and returns them class by class.
std::vector<LabeledSample> gen_dataset(Case c, const std::vector<std::size_t>& counts, std::uint64_t seed,
                                       const DatasetOptions& options = {});

/// Converts (pattern, count) pairs to a label-ordered count vector; patterns
/// outside the case's class list are a ConfigError.
std::vector<std::size_t> counts_for(Case c, const std::vector<std::pair<Pattern, std::size_t>>& pattern_counts);

/// Per-segment specs gen_dataset would use; exposed for raw-signal export.
PatternSpec dataset_segment_spec(Case c, std::size_t label, std::size_t index, std::uint64_t seed,
                                 const DatasetOptions& options);

}  // namespace shmssl
