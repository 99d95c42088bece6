#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "subot/types.hpp"

namespace subot {

/// Feature matrix (one row per sample) with optional dense class labels.
///
/// Labels, when present, are dense ids in [0, class_count) and every id
/// occurs at least once. `label_values()[id]` is the value the id stood for
/// in the input file, so results can be written back in the caller's labels.
class LabeledDataset {
public:
    LabeledDataset() = default;
    explicit LabeledDataset(Matrix features);
    LabeledDataset(Matrix features, std::vector<int> labels, int class_count,
                   std::vector<std::int64_t> label_values = {});

    const Matrix& features() const noexcept { return features_; }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(features_.rows()); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }

    bool has_labels() const noexcept { return labels_.has_value(); }
    /// Throws InvalidArgument when the dataset is unlabeled.
    const std::vector<int>& labels() const;
    int class_count() const noexcept { return class_count_; }
    const std::vector<std::int64_t>& label_values() const noexcept { return label_values_; }

    /// Rows in the given order. Labeled subsets must still cover every class.
    LabeledDataset subset(std::span<const std::size_t> rows) const;
    LabeledDataset without_labels() const;
    /// Same labels, new features (e.g. after normalization). Row count must match.
    LabeledDataset with_features(Matrix features) const;

    /// Row indices of each class, in ascending order.
    std::vector<std::vector<std::size_t>> rows_by_class() const;

private:
    void validate() const;

    Matrix features_;
    std::optional<std::vector<int>> labels_;
    int class_count_ = 0;
    std::vector<std::int64_t> label_values_;
};

enum class HeaderMode { None, Present, Auto };

struct CsvOptions {
    bool has_labels = true;
    HeaderMode header = HeaderMode::None;
};

/// Numeric CSV, comma separated, label (an integer) in the last column.
/// Labels are remapped to dense ids in ascending order of their values.
LabeledDataset load_dataset_csv(const std::filesystem::path& path, const CsvOptions& options = {});
LabeledDataset load_dataset_csv(const std::filesystem::path& path, bool has_labels);

/// Writes a header row (f0..f{d-1}[,label]) followed by one row per sample.
/// Labels are written using the dataset's original label values.
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& dataset);

/// Re-expresses `dataset`'s labels in the dense id space of `reference_values`
/// (typically the source domain's `label_values()`).
LabeledDataset align_labels(const LabeledDataset& dataset, const std::vector<std::int64_t>& reference_values);

enum class SensorKind { Accelerometer, Gyroscope };

/// `w` consecutive 3-axis readings of one sensor; w >= 2.
class RawSignalWindow {
public:
    RawSignalWindow(Matrix samples, SensorKind kind);

    const Matrix& samples() const noexcept { return samples_; }
    SensorKind sensor_kind() const noexcept { return kind_; }
    std::size_t length() const noexcept { return static_cast<std::size_t>(samples_.rows()); }

private:
    Matrix samples_;
    SensorKind kind_;
};

/// Per-sample magnitude sqrt(x^2 + y^2 + z^2).
Vector combine_axes(const RawSignalWindow& window);

/// Start offsets of full windows of `window_length` samples with the given
/// fractional overlap in [0, 1).
std::vector<std::size_t> sliding_window_starts(std::size_t signal_length, std::size_t window_length, double overlap);

struct ToyComponent {
    std::vector<double> mean;
    std::vector<double> cov_diag;
    int count = 0;
    int label = 0;
};

struct ToyConfig {
    std::vector<ToyComponent> source;
    std::vector<ToyComponent> target;
    std::uint64_t rng_seed = 0;

    void validate() const;

    /// Two classes over three 2-D components (class 0 owns two of them). The
    /// target reuses the components with means shifted by `offset`, variances
    /// scaled by 1.5 and a different class balance.
    static ToyConfig default_config(std::uint64_t seed = 0);
};

struct DomainPair {
    LabeledDataset source;
    LabeledDataset target;
};

/// Samples every component independently; deterministic per `rng_seed`.
/// Target labels are ground truth kept for evaluation only.
DomainPair generate_toy(const ToyConfig& config);

struct TargetSplit {
    LabeledDataset validation;
    LabeledDataset test;
    std::vector<std::size_t> validation_rows;
    std::vector<std::size_t> test_rows;
};

/// Disjoint partition with |validation| = round(fraction * n), stratified
/// by class when labels are present. Throws DegenerateSplit when either side
/// would be empty or miss a class.
TargetSplit split_target(const LabeledDataset& target, double fraction, std::uint64_t rng_seed);

}  // namespace subot
