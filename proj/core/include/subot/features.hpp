#pragma once

#include <array>
#include <span>
#include <string_view>

#include "subot/types.hpp"

namespace subot {

inline constexpr std::size_t kFeatureCount = 19;

/// Column names in extraction order.
const std::array<std::string_view, kFeatureCount>& feature_names();

/// Time and frequency domain statistics of one magnitude window.
///
/// Order: mean, std, min, max, median, p25, p75, iqr, skewness, kurtosis
/// (excess), zero-crossing rate, mean-crossing rate, signal magnitude area,
/// rms, spectral energy, spectral entropy, dominant frequency (Hz),
/// dominant-frequency magnitude, spectral centroid (Hz).
///
/// Spectral features use the one-sided DFT (bins 0..n/2, DC included).
/// Throws WindowTooShort when fewer than 2 samples are given.
std::array<double, kFeatureCount> extract_features(std::span<const double> window, double sampling_rate);

struct WindowingOptions {
    std::size_t window_length = 128;
    double overlap = 0.5;
    double sampling_rate = 50.0;
};

/// Sliding-window features over a multi-sensor recording.
///
/// `recording` holds one time step per row and 3 consecutive columns per
/// sensor (x, y, z). Each window yields 19 features per sensor, computed on
/// the per-sensor magnitude, so the result has 19 * (cols / 3) columns.
Matrix extract_recording_features(const Matrix& recording, const WindowingOptions& options);

}  // namespace subot
