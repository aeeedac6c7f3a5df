#pragma once

// IMU resampling, 2 s windowing, and window-level feature extraction.
//
// Feature vector layout (fixed order, 18 dims):
//   accel: mean_x mean_y mean_z std_x std_y std_z sma spectral_entropy dominant_freq_hz
//   gyro:  same nine
// Spectral features are computed on the mean-removed magnitude signal
// sqrt(x^2+y^2+z^2) over DFT bins 1..19 (0.5 Hz spacing, DC excluded).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "aedkit/common.hpp"
#include "aedkit/sensorlog.hpp"

namespace aedkit::dsp {

using sensorlog::ActivityLabel;
using sensorlog::ImuSample;

inline constexpr int kTargetHz = 20;
inline constexpr Millis kStepMs = 1000 / kTargetHz; // 50 ms
inline constexpr int kWindowSamples = 2 * kTargetHz; // 40
inline constexpr Millis kWindowMs = 2000;
inline constexpr int kSpectrumBins = kWindowSamples / 2 - 1; // bins 1..19
inline constexpr int kFeatureDim = 18;

struct Vec3 {
    double x = 0, y = 0, z = 0;
    bool operator==(const Vec3&) const = default;
};

struct UniformSeries {
    Millis start_ms = 0;
    Millis step_ms = kStepMs;
    std::vector<Vec3> samples;
};

struct Window {
    Millis start_ms = 0;
    std::array<Vec3, kWindowSamples> samples{};
};

struct FeatureWindow {
    Millis start_ms = 0;
    std::array<double, kFeatureDim> features{};
    std::optional<ActivityLabel> label;
};

inline const std::array<const char*, kFeatureDim> kFeatureNames = {
    "accel_mean_x", "accel_mean_y", "accel_mean_z", "accel_std_x", "accel_std_y", "accel_std_z",
    "accel_sma",    "accel_spectral_entropy",       "accel_dominant_freq_hz",
    "gyro_mean_x",  "gyro_mean_y",  "gyro_mean_z",  "gyro_std_x",  "gyro_std_y",  "gyro_std_z",
    "gyro_sma",     "gyro_spectral_entropy",        "gyro_dominant_freq_hz"};

// Resample onto a uniform 50 ms grid spanning [t0, t1] by linear
// interpolation between neighbouring samples. No extrapolation: the grid is
// clipped to the stream's own extent.
inline UniformSeries resample(std::span<const ImuSample> stream, Millis t0, Millis t1) {
    if (stream.size() < 2) throw ValidationError("resample needs at least 2 samples");
    t0 = std::max(t0, stream.front().t_ms);
    t1 = std::min(t1, stream.back().t_ms);
    if (t1 < t0) throw ValidationError("resample: empty overlap");

    UniformSeries out;
    out.start_ms = t0;
    const std::size_t n = static_cast<std::size_t>((t1 - t0) / kStepMs) + 1;
    out.samples.reserve(n);

    std::size_t hi = 1; // stream[hi-1].t_ms <= t < stream[hi].t_ms
    for (std::size_t k = 0; k < n; ++k) {
        const Millis t = t0 + static_cast<Millis>(k) * kStepMs;
        while (hi + 1 < stream.size() && stream[hi].t_ms <= t) ++hi;
        const ImuSample& a = stream[hi - 1];
        const ImuSample& b = stream[hi];
        double f = 0.0;
        if (b.t_ms != a.t_ms)
            f = static_cast<double>(t - a.t_ms) / static_cast<double>(b.t_ms - a.t_ms);
        f = std::clamp(f, 0.0, 1.0);
        out.samples.push_back({a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, a.z + (b.z - a.z) * f});
    }
    return out;
}

inline UniformSeries resample(std::span<const ImuSample> stream) {
    if (stream.size() < 2) throw ValidationError("resample needs at least 2 samples");
    return resample(stream, stream.front().t_ms, stream.back().t_ms);
}

// Non-overlapping consecutive 2 s windows; a trailing partial window is
// discarded.
inline std::vector<Window> window(const UniformSeries& series) {
    if (series.samples.size() < static_cast<std::size_t>(kWindowSamples))
        throw ValidationError("series shorter than one window");
    std::vector<Window> out;
    const std::size_t count = series.samples.size() / kWindowSamples;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        Window win;
        win.start_ms = series.start_ms + static_cast<Millis>(w) * kWindowMs;
        for (int i = 0; i < kWindowSamples; ++i)
            win.samples[static_cast<std::size_t>(i)] = series.samples[w * kWindowSamples + i];
        out.push_back(win);
    }
    return out;
}

namespace detail {

struct SensorFeatures {
    double mean[3], std[3], sma, entropy, domfreq;
};

inline SensorFeatures sensor_features(const std::array<Vec3, kWindowSamples>& w) {
    SensorFeatures f{};
    constexpr double n = kWindowSamples;

    double sum[3] = {0, 0, 0};
    for (const auto& s : w) {
        sum[0] += s.x;
        sum[1] += s.y;
        sum[2] += s.z;
    }
    for (int a = 0; a < 3; ++a) f.mean[a] = sum[a] / n;

    double sq[3] = {0, 0, 0};
    double sma = 0.0;
    std::array<double, kWindowSamples> mag{};
    for (int i = 0; i < kWindowSamples; ++i) {
        const auto& s = w[static_cast<std::size_t>(i)];
        const double d[3] = {s.x - f.mean[0], s.y - f.mean[1], s.z - f.mean[2]};
        for (int a = 0; a < 3; ++a) sq[a] += d[a] * d[a];
        sma += std::abs(s.x) + std::abs(s.y) + std::abs(s.z);
        mag[static_cast<std::size_t>(i)] = std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
    }
    for (int a = 0; a < 3; ++a) f.std[a] = std::sqrt(sq[a] / n);
    f.sma = sma / n;

    double mag_mean = 0.0;
    for (double m : mag) mag_mean += m;
    mag_mean /= n;
    for (double& m : mag) m -= mag_mean;

    // Direct DFT over bins 1..19; 40 points keep this cheap.
    double power[kSpectrumBins];
    double total = 0.0;
    for (int k = 1; k <= kSpectrumBins; ++k) {
        double re = 0.0, im = 0.0;
        for (int i = 0; i < kWindowSamples; ++i) {
            const double phase = -2.0 * std::numbers::pi * k * i / n;
            re += mag[static_cast<std::size_t>(i)] * std::cos(phase);
            im += mag[static_cast<std::size_t>(i)] * std::sin(phase);
        }
        power[k - 1] = re * re + im * im;
        total += power[k - 1];
    }

    if (total <= 0.0) {
        f.entropy = 0.0;
        f.domfreq = 0.0;
        return f;
    }
    double h = 0.0;
    int best = 0;
    for (int k = 0; k < kSpectrumBins; ++k) {
        const double p = power[k] / total;
        if (p > 0.0) h -= p * std::log(p);
        if (power[k] > power[best]) best = k; // ties resolve to the lowest bin
    }
    f.entropy = std::clamp(h / std::log(static_cast<double>(kSpectrumBins)), 0.0, 1.0);
    f.domfreq = 0.5 * (best + 1);
    return f;
}

} // namespace detail

// Both windows must share start_ms (aligned grids).
inline FeatureWindow extract_features(const Window& accel_win, const Window& gyro_win) {
    if (accel_win.start_ms != gyro_win.start_ms)
        throw ValidationError("accel/gyro windows not aligned");
    const auto fa = detail::sensor_features(accel_win.samples);
    const auto fg = detail::sensor_features(gyro_win.samples);
    FeatureWindow out;
    out.start_ms = accel_win.start_ms;
    out.features = {fa.mean[0], fa.mean[1], fa.mean[2], fa.std[0], fa.std[1], fa.std[2],
                    fa.sma,     fa.entropy, fa.domfreq,
                    fg.mean[0], fg.mean[1], fg.mean[2], fg.std[0], fg.std[1], fg.std[2],
                    fg.sma,     fg.entropy, fg.domfreq};
    return out;
}

// Full pipeline for one trip: resample both IMU streams on their common
// span, window, and extract per-window features.
inline std::vector<FeatureWindow> feature_windows(std::span<const ImuSample> accel,
                                                  std::span<const ImuSample> gyro) {
    if (accel.size() < 2 || gyro.size() < 2)
        throw ValidationError("feature_windows: streams too short");
    const Millis t0 = std::max(accel.front().t_ms, gyro.front().t_ms);
    const Millis t1 = std::min(accel.back().t_ms, gyro.back().t_ms);
    const UniformSeries sa = resample(accel, t0, t1);
    const UniformSeries sg = resample(gyro, t0, t1);
    const auto wa = window(sa);
    const auto wg = window(sg);
    std::vector<FeatureWindow> out;
    const std::size_t n = std::min(wa.size(), wg.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(extract_features(wa[i], wg[i]));
    return out;
}

// Attach ground-truth labels from 1 Hz label rows: each window takes the
// majority label of the seconds it covers; a tie goes to the earliest
// covered second. Windows with no covering label stay unlabeled.
inline void attach_labels(std::vector<FeatureWindow>& windows,
                          std::span<const sensorlog::LabelSample> labels) {
    for (auto& w : windows) {
        int moving = 0, pausing = 0;
        std::optional<ActivityLabel> first;
        for (const auto& l : labels) {
            if (l.t_ms < w.start_ms || l.t_ms >= w.start_ms + kWindowMs) continue;
            if (!first) first = l.label;
            (l.label == ActivityLabel::moving ? moving : pausing)++;
        }
        if (moving + pausing == 0) continue;
        if (moving > pausing) w.label = ActivityLabel::moving;
        else if (pausing > moving) w.label = ActivityLabel::pausing;
        else w.label = *first;
    }
}

// Feature matrix CSV: start_t_ms, 18 feature columns, optional label.
inline std::string features_csv_header() {
    std::string h = "start_t_ms";
    for (const char* name : kFeatureNames) {
        h += ',';
        h += name;
    }
    h += ",label";
    return h;
}

inline std::string features_to_csv(std::span<const FeatureWindow> windows) {
    csv::Writer w(features_csv_header());
    for (const auto& fw : windows) {
        w.field(fw.start_ms);
        for (double v : fw.features) w.field(v);
        w.field(fw.label ? sensorlog::to_string(*fw.label) : std::string{});
        w.end_row();
    }
    return w.str();
}

} // namespace aedkit::dsp
