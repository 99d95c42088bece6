#include "subot/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "subot/datamodel.hpp"
#include "subot/error.hpp"

namespace subot {

const std::array<std::string_view, kFeatureCount>& feature_names() {
    static const std::array<std::string_view, kFeatureCount> names = {
        "mean",          "std",          "min",        "max",
        "median",        "p25",          "p75",        "iqr",
        "skewness",      "kurtosis",     "zcr",        "mcr",
        "sma",           "rms",          "spec_energy", "spec_entropy",
        "dom_freq",      "dom_freq_mag", "spec_centroid",
    };
    return names;
}

namespace {

// Linear interpolation between closest ranks on a sorted sample.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double crossing_rate(std::span<const double> x, double level) {
    std::size_t crossings = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if ((x[i - 1] < level) != (x[i] < level)) ++crossings;
    }
    return static_cast<double>(crossings) / static_cast<double>(x.size() - 1);
}

}  // namespace

std::array<double, kFeatureCount> extract_features(std::span<const double> window, double sampling_rate) {
    if (window.size() < 2) throw Error(ErrorKind::WindowTooShort, "feature windows need at least 2 samples");
    if (!(sampling_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "sampling rate must be > 0");
    const auto n = static_cast<double>(window.size());

    double sum = 0.0, abs_sum = 0.0, sq_sum = 0.0;
    for (double v : window) {
        sum += v;
        abs_sum += std::abs(v);
        sq_sum += v * v;
    }
    const double mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : window) {
        const double dv = v - mean;
        const double dv2 = dv * dv;
        m2 += dv2;
        m3 += dv2 * dv;
        m4 += dv2 * dv2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double stddev = std::sqrt(m2);
    // Shape statistics are undefined for a flat window; report them as 0.
    const bool flat = stddev <= 1e-12 * std::max(1.0, std::abs(mean));
    const double skewness = flat ? 0.0 : m3 / (m2 * stddev);
    const double kurtosis = flat ? 0.0 : m4 / (m2 * m2) - 3.0;

    std::vector<double> sorted(window.begin(), window.end());
    std::sort(sorted.begin(), sorted.end());
    const double p25 = quantile(sorted, 0.25);
    const double p75 = quantile(sorted, 0.75);

    Eigen::FFT<double> fft;
    std::vector<double> signal(window.begin(), window.end());
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, signal);
    const std::size_t bins = window.size() / 2 + 1;
    const double bin_hz = sampling_rate / n;

    double power_sum = 0.0, mag_sum = 0.0, weighted_freq = 0.0;
    std::size_t dominant = 0;
    double dominant_power = -1.0;
    std::vector<double> power(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double mag = std::abs(spectrum[k]);
        power[k] = mag * mag;
        power_sum += power[k];
        mag_sum += mag;
        weighted_freq += static_cast<double>(k) * bin_hz * mag;
        if (power[k] > dominant_power) {
            dominant_power = power[k];
            dominant = k;
        }
    }
    double entropy = 0.0;
    if (power_sum > 0.0) {
        for (double p : power) {
            const double q = p / power_sum;
            if (q > 0.0) entropy -= q * std::log(q);
        }
    }

    return {
        mean,
        stddev,
        sorted.front(),
        sorted.back(),
        quantile(sorted, 0.5),
        p25,
        p75,
        p75 - p25,
        skewness,
        kurtosis,
        crossing_rate(window, 0.0),
        crossing_rate(window, mean),
        abs_sum / n,
        std::sqrt(sq_sum / n),
        power_sum / n,
        entropy,
        static_cast<double>(dominant) * bin_hz,
        std::sqrt(dominant_power) / n,
        mag_sum > 0.0 ? weighted_freq / mag_sum : 0.0,
    };
}

Matrix extract_recording_features(const Matrix& recording, const WindowingOptions& options) {
    if (recording.cols() == 0 || recording.cols() % 3 != 0) {
        throw Error(ErrorKind::DimensionMismatch, "recordings need 3 columns (x, y, z) per sensor");
    }
    const auto sensors = recording.cols() / 3;
    const auto starts =
        sliding_window_starts(static_cast<std::size_t>(recording.rows()), options.window_length, options.overlap);
    if (starts.empty()) throw Error(ErrorKind::WindowTooShort, "recording shorter than one window");

    const auto w = static_cast<Eigen::Index>(options.window_length);
    Matrix out(static_cast<Eigen::Index>(starts.size()), sensors * static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t wi = 0; wi < starts.size(); ++wi) {
        const auto start = static_cast<Eigen::Index>(starts[wi]);
        for (Eigen::Index s = 0; s < sensors; ++s) {
            const RawSignalWindow raw(recording.block(start, 3 * s, w, 3),
                                      s % 2 == 0 ? SensorKind::Accelerometer : SensorKind::Gyroscope);
            const Vector magnitude = combine_axes(raw);
            const auto feats = extract_features(std::span<const double>(magnitude.data(), magnitude.size()),
                                                options.sampling_rate);
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                out(static_cast<Eigen::Index>(wi), s * static_cast<Eigen::Index>(kFeatureCount) +
                                                       static_cast<Eigen::Index>(f)) = feats[f];
            }
        }
    }
    return out;
}

}  // namespace subot
