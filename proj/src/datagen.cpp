#include "shmssl/datagen.hpp"

#include "shmssl/error.hpp"
#include "shmssl/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace shmssl {

namespace {

constexpr std::array<Pattern, 9> kAllPatterns{Pattern::Normal, Pattern::Missing, Pattern::Minor,
                                              Pattern::Outlier, Pattern::Square, Pattern::Trend,
                                              Pattern::Drift, Pattern::Biased, Pattern::Noise};

double mean_of(const std::vector<double>& x) {
    return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double std_of(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size()));
}

void center(std::vector<double>& x) {
    const double m = mean_of(x);
    for (double& v : x) v -= m;
}

// Ambient vibration: three modes with slowly varying amplitude plus white
// noise, rescaled to the requested standard deviation.
std::vector<double> ambient_response(std::size_t n, double amplitude, double rate, Rng& rng) {
    std::vector<double> x(n, 0.0);
    const double nyquist = 0.5 * rate;
    for (int mode = 0; mode < 3; ++mode) {
        const double freq = rng.uniform(0.05, 0.8) * nyquist;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double weight = rng.uniform(0.5, 1.0);
        const double env_period = rng.uniform(300.0, 1200.0);
        const double env_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate;
            const double envelope = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * t / env_period + env_phase);
            x[i] += weight * envelope * std::sin(2.0 * std::numbers::pi * freq * t + phase);
        }
    }
    const double noise = rng.uniform(0.3, 0.6);
    for (double& v : x) v += noise * rng.normal();
    center(x);
    const double s = std_of(x);
    if (s > 0.0)
        for (double& v : x) v *= amplitude / s;
    return x;
}

// Brownian bridge pinned to zero at both ends.
std::vector<double> brownian_bridge(std::size_t n, Rng& rng) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) w[i] = w[i - 1] + rng.normal();
    if (n > 1) {
        const double end = w[n - 1];
        for (std::size_t i = 0; i < n; ++i) w[i] -= end * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return w;
}

}  // namespace

const char* to_string(Pattern pattern) {
    switch (pattern) {
        case Pattern::Normal: return "normal";
        case Pattern::Missing: return "missing";
        case Pattern::Minor: return "minor";
        case Pattern::Outlier: return "outlier";
        case Pattern::Square: return "square";
        case Pattern::Trend: return "trend";
        case Pattern::Drift: return "drift";
        case Pattern::Biased: return "biased";
        case Pattern::Noise: return "noise";
    }
    return "unknown";
}

Pattern parse_pattern(const std::string& text) {
    for (Pattern p : kAllPatterns)
        if (text == to_string(p)) return p;
    throw ConfigError("unknown data pattern '" + text + "'");
}

TimeSeriesSegment gen_segment(const PatternSpec& spec) {
    const double samples = std::round(spec.duration_s * spec.sample_rate_hz);
    if (!(samples >= 1.0)) throw ConfigError("gen_segment: duration * sample rate must be at least 1");
    if (!(spec.range_min < spec.range_max)) throw ConfigError("gen_segment: range_min must be below range_max");
    if (!(spec.base_amplitude > 0.0)) throw ConfigError("gen_segment: base amplitude must be positive");
    const auto n = static_cast<std::size_t>(samples);
    const double amp = spec.base_amplitude;
    const double rate = spec.sample_rate_hz;
    Rng rng = Rng(spec.seed).split(to_string(spec.pattern));

    TimeSeriesSegment seg;
    seg.sample_rate_hz = rate;
    seg.range_min = spec.range_min;
    seg.range_max = spec.range_max;

    switch (spec.pattern) {
        case Pattern::Normal:
            seg.samples = ambient_response(n, amp, rate, rng);
            break;
        case Pattern::Missing: {
            // Either the whole hour or a trailing part of it is lost.
            std::vector<double> x = ambient_response(n, amp, rate, rng);
            const double kept = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.05, 0.95);
            x.resize(std::min(n - 1, static_cast<std::size_t>(kept * static_cast<double>(n))));
            seg.samples = std::move(x);
            break;
        }
        case Pattern::Minor:
            seg.samples = ambient_response(n, amp * rng.uniform(0.01, 0.04), rate, rng);
            break;
        case Pattern::Outlier: {
            std::vector<double> x = ambient_response(n, amp, rate, rng);
            const std::size_t spikes = std::min<std::size_t>(n, 20 + rng.below(41));
            for (std::size_t s = 0; s < spikes; ++s) {
                const std::size_t at = rng.below(n);
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                x[at] = sign * amp * rng.uniform(10.0, 20.0);
            }
            seg.samples = std::move(x);
            break;
        }
        case Pattern::Square: {
            const double level = amp * rng.uniform(1.4, 1.6);
            const double period = rng.uniform(60.0, 600.0);
            const double phase = rng.uniform(0.0, 1.0);
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / rate / period + phase;
                const double sign = (t - std::floor(t)) < 0.5 ? 1.0 : -1.0;
                x[i] = sign * level + 0.001 * level * rng.normal();
            }
            seg.samples = std::move(x);
            break;
        }
        case Pattern::Trend: {
            std::vector<double> x = ambient_response(n, amp, rate, rng);
            const double span = amp * rng.uniform(10.0, 14.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            for (std::size_t i = 0; i < n; ++i) x[i] += span * static_cast<double>(i) / static_cast<double>(n);
            center(x);
            seg.samples = std::move(x);
            break;
        }
        case Pattern::Drift: {
            std::vector<double> x = ambient_response(n, amp, rate, rng);
            std::vector<double> bridge = brownian_bridge(n, rng);
            double peak = 0.0;
            for (double v : bridge) peak = std::max(peak, std::abs(v));
            const double excursion = amp * rng.uniform(3.0, 6.0);
            const double displacement = amp * rng.uniform(7.0, 10.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double walk = peak > 0.0 ? bridge[i] * excursion / peak : 0.0;
                x[i] += walk + displacement * static_cast<double>(i) / static_cast<double>(n > 1 ? n - 1 : 1);
            }
            center(x);
            seg.samples = std::move(x);
            break;
        }
        case Pattern::Biased: {
            std::vector<double> x = ambient_response(n, amp, rate, rng);
            const double offset = amp * rng.uniform(5.0, 8.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            for (double& v : x) v += offset;
            seg.samples = std::move(x);
            break;
        }
        case Pattern::Noise: {
            std::vector<double> x = ambient_response(n, amp, rate, rng);
            std::vector<double> e(n);
            for (double& v : e) v = rng.student_t(3.0);
            const double s = std_of(e);
            const double target = amp * rng.uniform(3.5, 5.0);
            for (std::size_t i = 0; i < n; ++i) x[i] += s > 0.0 ? e[i] * target / s : 0.0;
            seg.samples = std::move(x);
            break;
        }
    }
    return seg;
}

std::optional<std::string> check_pattern(const PatternSpec& spec, const TimeSeriesSegment& segment) {
    const std::vector<double>& x = segment.samples;
    const double amp = spec.base_amplitude;
    const auto expected = static_cast<std::size_t>(std::round(spec.duration_s * spec.sample_rate_hz));
    if (spec.pattern == Pattern::Missing) {
        if (x.size() < expected) return std::nullopt;
        return "missing: sample count is not below the expected count";
    }
    if (x.size() != expected) return "sample count differs from duration * rate";
    const double s = std_of(x);
    const double m = mean_of(x);
    switch (spec.pattern) {
        case Pattern::Normal:
            if (std::abs(s / amp - 1.0) > 0.05) return "normal: std deviates from base amplitude";
            if (std::abs(m) > 0.05 * amp) return "normal: not zero-mean";
            break;
        case Pattern::Minor:
            if (s > 0.05 * amp) return "minor: std exceeds 0.05 * base amplitude";
            break;
        case Pattern::Outlier: {
            const auto spikes = std::count_if(x.begin(), x.end(), [&](double v) { return std::abs(v) >= 10.0 * amp; });
            if (spikes < 3) return "outlier: fewer than 3 spikes of magnitude >= 10 * std";
            break;
        }
        case Pattern::Square: {
            // 1-D two-means quantization.
            double lo = *std::min_element(x.begin(), x.end());
            double hi = *std::max_element(x.begin(), x.end());
            for (int it = 0; it < 50; ++it) {
                double sl = 0, sh = 0;
                std::size_t nl = 0, nh = 0;
                const double mid = 0.5 * (lo + hi);
                for (double v : x) {
                    if (v < mid) { sl += v; ++nl; } else { sh += v; ++nh; }
                }
                if (nl) lo = sl / static_cast<double>(nl);
                if (nh) hi = sh / static_cast<double>(nh);
            }
            const double tol = 0.01 * std::max(std::abs(lo), std::abs(hi));
            const auto close = std::count_if(x.begin(), x.end(), [&](double v) {
                return std::min(std::abs(v - lo), std::abs(v - hi)) <= tol;
            });
            if (static_cast<double>(close) < 0.95 * static_cast<double>(x.size()))
                return "square: fewer than 95% of samples near two levels";
            break;
        }
        case Pattern::Trend: {
            const double n = static_cast<double>(x.size());
            double st = 0, stt = 0, sx = 0, stx = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double t = static_cast<double>(i) / spec.sample_rate_hz;
                st += t; stt += t * t; sx += x[i]; stx += t * x[i];
            }
            const double slope = (n * stx - st * sx) / (n * stt - st * st);
            if (std::abs(slope) * spec.duration_s < 5.0 * amp) return "trend: ramp smaller than 5 * std";
            if (std::abs(m) > 1e-9 * (1.0 + amp)) return "trend: not mean-centered";
            break;
        }
        case Pattern::Drift: {
            const std::size_t w = std::max<std::size_t>(1, x.size() / 100);
            const double head = std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(w), 0.0) / static_cast<double>(w);
            const double tail = std::accumulate(x.end() - static_cast<std::ptrdiff_t>(w), x.end(), 0.0) / static_cast<double>(w);
            if (std::abs(tail - head) < 5.0 * amp) return "drift: terminal displacement below 5 * std";
            if (std::abs(m) > 1e-9 * (1.0 + amp)) return "drift: not mean-centered";
            break;
        }
        case Pattern::Biased:
            if (std::abs(m) < 5.0 * amp) return "biased: offset below 5 * std";
            break;
        case Pattern::Noise:
            if (s < 3.0 * amp) return "noise: std below 3 * base amplitude";
            break;
        case Pattern::Missing: break;
    }
    return std::nullopt;
}

const std::vector<Pattern>& case_patterns(Case c) {
    static const std::vector<Pattern> one{Pattern::Normal, Pattern::Minor, Pattern::Outlier,
                                          Pattern::Square, Pattern::Trend, Pattern::Drift};
    static const std::vector<Pattern> two{Pattern::Normal, Pattern::Minor, Pattern::Biased, Pattern::Outlier,
                                          Pattern::Noise};
    return c == Case::One ? one : two;
}

const std::vector<std::size_t>& case_original_counts(Case c) {
    static const std::vector<std::size_t> one{13575, 1775, 527, 2996, 5778, 679};
    static const std::vector<std::size_t> two{19454, 6802, 1169, 289, 578};
    return c == Case::One ? one : two;
}

std::vector<std::size_t> scaled_counts(Case c, double scale) {
    if (!(scale > 0.0)) throw ConfigError("scale factor must be positive");
    const auto& original = case_original_counts(c);
    const double total = static_cast<double>(std::accumulate(original.begin(), original.end(), std::size_t{0}));
    const auto target = static_cast<std::size_t>(std::llround(total * scale));
    std::vector<std::size_t> out(original.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < original.size(); ++k) {
        const double exact = static_cast<double>(original[k]) * scale;
        out[k] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) ++out[remainders[i].second];
    return out;
}

std::vector<std::size_t> counts_for(Case c, const std::vector<std::pair<Pattern, std::size_t>>& pattern_counts) {
    const auto& patterns = case_patterns(c);
    std::vector<std::size_t> counts(patterns.size(), 0);
    for (const auto& [p, n] : pattern_counts) {
        const auto it = std::find(patterns.begin(), patterns.end(), p);
        if (it == patterns.end()) {
            throw ConfigError(std::string("pattern '") + to_string(p) + "' is not part of case " +
                              std::to_string(static_cast<int>(c)));
        }
        counts[static_cast<std::size_t>(it - patterns.begin())] += n;
    }
    return counts;
}

double case_default_amplitude(Case c) { return c == Case::One ? 0.12 : 5.0; }
double case_range_min(Case c) { return c == Case::One ? -1.0 : -50.0; }
double case_range_max(Case c) { return c == Case::One ? 1.0 : 50.0; }

PatternSpec dataset_segment_spec(Case c, std::size_t label, std::size_t index, std::uint64_t seed,
                                 const DatasetOptions& options) {
    const auto& patterns = case_patterns(c);
    PatternSpec spec;
    spec.pattern = label < patterns.size() ? patterns[label] : Pattern::Missing;
    spec.sample_rate_hz = options.sample_rate_hz;
    spec.duration_s = options.duration_s;
    spec.range_min = options.range_min.value_or(case_range_min(c));
    spec.range_max = options.range_max.value_or(case_range_max(c));
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(c)).split(label).split(index);
    const double nominal = options.base_amplitude.value_or(case_default_amplitude(c));
    const double jitter = std::log1p(options.amplitude_jitter);
    spec.base_amplitude = nominal * std::exp(rng.uniform(-jitter, jitter));
    spec.seed = rng.next_u64();
    return spec;
}

std::vector<LabeledSample> gen_dataset(Case c, const std::vector<std::size_t>& counts, std::uint64_t seed,
                                       const DatasetOptions& options) {
    const auto& patterns = case_patterns(c);
    if (counts.size() != patterns.size()) {
        throw ConfigError("case " + std::to_string(static_cast<int>(c)) + " has " + std::to_string(patterns.size()) +
                          " patterns but " + std::to_string(counts.size()) + " counts were given");
    }
    std::vector<TimeSeriesSegment> segments;
    std::vector<int> labels;
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0}) + options.missing_count;
    segments.reserve(total);
    std::uint32_t channel = 0;
    auto push = [&](std::size_t label, std::size_t i) {
        TimeSeriesSegment seg = gen_segment(dataset_segment_spec(c, label, i, seed, options));
        seg.channel_id = channel;
        seg.hour_index = static_cast<std::uint32_t>(i);
        segments.push_back(std::move(seg));
        labels.push_back(static_cast<int>(label));
    };
    for (std::size_t k = 0; k < counts.size(); ++k, ++channel)
        for (std::size_t i = 0; i < counts[k]; ++i) push(k, i);
    // Missing segments are screened by point count before reduction.
    for (std::size_t i = 0; i < options.missing_count; ++i) push(patterns.size(), i);

    std::vector<TimeSeriesSegment> kept;
    std::vector<int> kept_labels;
    kept.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (detect_missing(segments[i])) continue;
        kept.push_back(std::move(segments[i]));
        kept_labels.push_back(labels[i]);
    }
    std::vector<FeatureVector> features = parallel::ierfh_batch(kept);
    std::vector<LabeledSample> out;
    out.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) out.push_back({std::move(features[i]), kept_labels[i]});
    return out;
}

}  // namespace shmssl
