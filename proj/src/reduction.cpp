#include "shmssl/reduction.hpp"

#include "binary_io.hpp"
#include "shmssl/error.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

namespace shmssl {

std::size_t TimeSeriesSegment::expected_count() const {
    return static_cast<std::size_t>(std::llround(kSegmentSeconds * sample_rate_hz));
}

std::size_t ierfh_bin(double value, double range_min, double range_max) {
    const double width = (range_max - range_min) / static_cast<double>(kFeatureDim);
    if (value <= range_min) return 0;
    if (value >= range_max) return kFeatureDim - 1;
    const auto bin = static_cast<std::size_t>(std::floor((value - range_min) / width));
    return bin < kFeatureDim ? bin : kFeatureDim - 1;
}

FeatureVector ierfh(const TimeSeriesSegment& segment) {
    if (segment.samples.empty()) {
        throw MissingDataError("ierfh: segment (channel " + std::to_string(segment.channel_id) + ", hour " +
                               std::to_string(segment.hour_index) + ") has no samples");
    }
    if (!(segment.range_min < segment.range_max)) {
        throw ConfigError("ierfh: measurement range must satisfy min < max");
    }
    std::vector<std::size_t> counts(kFeatureDim, 0);
    for (double v : segment.samples) {
        if (!std::isfinite(v)) throw NumericError("ierfh: non-finite sample");
        ++counts[ierfh_bin(v, segment.range_min, segment.range_max)];
    }
    FeatureVector f;
    f.channel_id = segment.channel_id;
    f.hour_index = segment.hour_index;
    f.values.resize(kFeatureDim);
    const double n = static_cast<double>(segment.samples.size());
    for (std::size_t i = 0; i < kFeatureDim; ++i) f.values[i] = 1.0 - static_cast<double>(counts[i]) / n;
    return f;
}

namespace serial {
std::vector<FeatureVector> ierfh_batch(std::span<const TimeSeriesSegment> segments) {
    std::vector<FeatureVector> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(ierfh(s));
    return out;
}
}  // namespace serial

namespace parallel {
std::vector<FeatureVector> ierfh_batch(std::span<const TimeSeriesSegment> segments) {
    std::vector<FeatureVector> out(segments.size());
    std::exception_ptr error;
    const auto n = static_cast<std::int64_t>(segments.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = ierfh(segments[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(shmssl_ierfh_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}
}  // namespace parallel

bool detect_missing(const TimeSeriesSegment& segment) {
    return segment.samples.size() < segment.expected_count();
}

namespace {
constexpr std::string_view kFeatureMagic = "SHMIERFH";
}

void write_features(const std::filesystem::path& path, std::span<const FeatureVector> features,
                    std::span<const int> labels) {
    if (!labels.empty() && labels.size() != features.size()) {
        throw DimensionError("write_features: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(features.size()) + " features");
    }
    detail::ByteWriter w;
    w.raw(kFeatureMagic);
    w.u32(kFeatureFileVersion);
    w.u64(features.size());
    w.u32(static_cast<std::uint32_t>(kFeatureDim));
    w.u32(labels.empty() ? 0u : 1u);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const FeatureVector& f = features[i];
        if (f.values.size() != kFeatureDim) {
            throw DimensionError("write_features: feature " + std::to_string(i) + " has " +
                                 std::to_string(f.values.size()) + " values");
        }
        w.u32(f.channel_id);
        w.u32(f.hour_index);
        w.i32(labels.empty() ? -1 : labels[i]);
        for (double v : f.values) w.f32(static_cast<float>(v));
    }
    detail::write_file(path, w.bytes());
}

FeatureFile read_features(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader r(bytes);
    if (r.remaining() < kFeatureMagic.size() || r.raw(kFeatureMagic.size()) != kFeatureMagic) {
        throw FormatError("'" + path.string() + "' is not a feature file (bad magic)", 0);
    }
    const std::size_t version_at = r.offset();
    if (const auto v = r.u32(); v != kFeatureFileVersion) {
        throw FormatError("unsupported feature file version " + std::to_string(v), version_at);
    }
    const std::uint64_t count = r.u64();
    const std::size_t dim_at = r.offset();
    if (const auto dim = r.u32(); dim != kFeatureDim) {
        throw FormatError("feature dimension " + std::to_string(dim) + " != 512", dim_at);
    }
    const bool labeled = (r.u32() & 1u) != 0;
    const std::uint64_t row_bytes = 12 + 4 * kFeatureDim;
    if (count > r.remaining() / row_bytes) {
        throw FormatError("header declares " + std::to_string(count) + " rows but payload is too short",
                          r.offset());
    }
    FeatureFile file;
    file.features.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        FeatureVector f;
        f.channel_id = r.u32();
        f.hour_index = r.u32();
        const int label = r.i32();
        f.values.resize(kFeatureDim);
        for (double& v : f.values) v = static_cast<double>(r.f32());
        file.features.push_back(std::move(f));
        if (labeled) file.labels.push_back(label);
    }
    if (r.remaining() != 0) {
        throw FormatError(std::to_string(r.remaining()) + " trailing bytes after payload", r.offset());
    }
    return file;
}

void write_segment_csv(const std::filesystem::path& path, const TimeSeriesSegment& segment) {
    std::string text = "time,value\n";
    char buf[64];
    for (std::size_t i = 0; i < segment.samples.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f,%.17g\n", static_cast<double>(i) / segment.sample_rate_hz,
                      segment.samples[i]);
        text += buf;
    }
    detail::write_text(path, text);
}

TimeSeriesSegment read_segment_csv(const std::filesystem::path& path, double range_min, double range_max) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    TimeSeriesSegment s;
    s.range_min = range_min;
    s.range_max = range_max;
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> times;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("time", 0) == 0) continue;
        std::istringstream row(line);
        std::string t_text, v_text;
        if (!std::getline(row, t_text, ',') || !std::getline(row, v_text)) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 'time,value'");
        }
        try {
            times.push_back(std::stod(t_text));
            s.samples.push_back(std::stod(v_text));
        } catch (const std::exception&) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": unparsable number");
        }
    }
    if (times.size() >= 2 && times[1] > times[0]) s.sample_rate_hz = 1.0 / (times[1] - times[0]);
    return s;
}

}  // namespace shmssl
