#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subot/datamodel.hpp"
#include "subot/gmm.hpp"
#include "subot/ot.hpp"
#include "subot/types.hpp"

namespace subot {

/// Adaptation method. SotCenter / SotGaussian are the substructure methods
/// (center or diagonal-Gaussian representation); Otda is the sample-level
/// transport baseline and NearestNeighbor plain source->target 1NN.
enum class Method { SotCenter, SotGaussian, Otda, NearestNeighbor };

std::string_view to_string(Method method);
/// Accepts "sot_c", "sot_g", "otda" and "nn".
Method parse_method(std::string_view name);

struct AdaptationConfig {
    Method variant = Method::SotCenter;
    /// Target substructure count; 0 selects 4 * class_count.
    int k_t = 0;
    KRange k_range{1, 8};
    OtParams ot;
    int restarts = 5;
    std::uint64_t rng_seed = 0;
    bool normalize = true;
    EmOptions em;

    /// k_t resolved against the source class count.
    int resolved_k_t(int class_count) const noexcept { return k_t > 0 ? k_t : 4 * class_count; }
    void validate(int class_count) const;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct Evaluation {
    double accuracy = 0.0;
    /// confusion[truth][predicted] counts.
    std::vector<std::vector<std::size_t>> confusion;
};

struct AdaptationResult {
    Method method = Method::SotCenter;
    /// Dense class id (in the source's id space) for every target row.
    std::vector<int> predicted_labels;

    // Substructure methods only.
    std::vector<int> substructure_labels;
    std::vector<int> target_assignment;
    std::vector<int> source_substructure_labels;
    std::vector<ClassSelection> source_selections;
    std::optional<SubstructureSet> source_substructures;
    std::optional<SubstructureSet> target_substructures;

    Coupling coupling;
    Vector source_weights;
    Matrix mapped_sources;
    std::vector<std::size_t> fallback_rows;
    std::vector<StageTiming> timings;
    std::optional<Evaluation> evaluation;
    std::vector<std::int64_t> label_values;

    double stage_seconds(std::string_view stage) const noexcept;
    double total_seconds() const noexcept;
};

/// Per-feature z-score fitted on one matrix; zero-variance features keep
/// scale 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Matrix& data);
    Matrix apply(const Matrix& data) const;
};

/// Label of the Euclidean-nearest training row, ties to the lowest index.
std::vector<int> nn_classify(const Matrix& train_points, std::span<const int> train_labels,
                             const Matrix& query_points);

/// Row i gets substructure_labels[assignment[i]].
std::vector<int> propagate_labels(std::span<const int> substructure_labels, std::span<const int> assignment);

Evaluation evaluate_accuracy(std::span<const int> predicted, std::span<const int> truth, int class_count);

/// Pre-fitted substructures, e.g. loaded from a cache file. Either side may
/// be absent and is then fitted as usual.
struct PrecomputedSubstructures {
    std::optional<SourceSubstructures> source;
    std::optional<TargetSubstructures> target;
};

/// Substructural OT adaptation: per-class source mixtures chosen by BIC, a
/// k_t-component target mixture, substructure costs, closed-form source
/// weights, group-lasso coupling, barycentric mapping of the source
/// substructures, 1NN labeling of target substructures and propagation to
/// their rows. Target labels, if present, are used for evaluation only.
AdaptationResult sot_adapt(const LabeledDataset& source, const LabeledDataset& target, const AdaptationConfig& config,
                           const PrecomputedSubstructures* precomputed = nullptr);

/// Sample-level OT baseline: uniform masses on raw rows, squared Euclidean
/// cost, group-lasso coupling, barycentric mapping of the source rows and
/// 1NN from the mapped source rows to the target rows.
AdaptationResult otda_baseline(const LabeledDataset& source, const LabeledDataset& target, const OtParams& ot,
                               bool normalize = true);

/// 1NN trained on the source rows, applied to the target rows.
AdaptationResult nn_baseline(const LabeledDataset& source, const LabeledDataset& target, bool normalize = true);

/// Dispatches on `config.variant`.
AdaptationResult run_adaptation(const LabeledDataset& source, const LabeledDataset& target,
                                const AdaptationConfig& config);

}  // namespace subot
