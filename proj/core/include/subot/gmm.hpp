#pragma once

#include <cstdint>
#include <vector>

#include "subot/components.hpp"
#include "subot/datamodel.hpp"
#include "subot/types.hpp"

namespace subot {

inline constexpr double kCovarianceFloor = 1e-6;

/// A component backed by fewer effective samples than this has no estimable
/// variance; only the floor keeps it from becoming singular.
inline constexpr double kMinComponentSupport = 2.0;

struct EmOptions {
    double cov_floor = kCovarianceFloor;
    /// Stop when |ll - ll_prev| < tol * |ll_prev|.
    double tol = 1e-7;
    int max_iter = 300;
    int kmeans_max_iter = 100;
};

struct KMeansResult {
    Matrix centroids;
    std::vector<int> assignment;
    int iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment is
/// stable or `max_iter` is reached. Ties go to the lowest centroid index.
KMeansResult kmeans_init(const Matrix& data, int k, std::uint64_t seed, int max_iter = 100);

struct MixtureModel {
    std::vector<GaussianComponent> components;
    double log_likelihood = 0.0;
    std::size_t sample_count = 0;

    /// Log-likelihood after initialization and after every EM iteration.
    std::vector<double> log_likelihood_trace;
    int iterations = 0;
    bool converged = false;
    /// Set when the data had fewer distinct rows than requested components;
    /// the model then holds one component per distinct row.
    bool degenerate = false;

    std::size_t dims() const noexcept;
    /// components * 2d + components - 1 (diagonal covariances).
    std::size_t free_parameter_count() const noexcept;
    /// Some component's weight * sample_count is below kMinComponentSupport.
    bool collapsed() const noexcept;
};

/// Diagonal-covariance EM initialized from kmeans_init. Variances are
/// floored at `options.cov_floor` in every M-step.
MixtureModel em_fit(const Matrix& data, int k, std::uint64_t seed, const EmOptions& options = {});

/// n x k posterior responsibilities; each row sums to 1.
Matrix responsibilities(const MixtureModel& model, const Matrix& data);
double log_likelihood(const MixtureModel& model, const Matrix& data);
/// Argmax responsibility per row, ties to the lowest component index.
std::vector<int> hard_assign(const MixtureModel& model, const Matrix& data);

/// -2 ln L + free_parameter_count * ln(sample_count).
double compute_bic(const MixtureModel& model);

struct KRange {
    int lo = 1;
    int hi = 8;
};

struct BicCandidate {
    int k = 0;
    double bic = 0.0;
    double log_likelihood = 0.0;
    bool collapsed = false;
};

struct ClassSelection {
    int label = 0;
    int selected_k = 0;
    std::vector<BicCandidate> candidates;
};

struct SourceSubstructures {
    SubstructureSet set;
    std::vector<ClassSelection> selections;
};

/// Per-class mixtures with K chosen by minimum BIC over `k_range` (best of
/// `restarts` EM runs per K). Collapsed fits are passed over while a
/// non-collapsed restart or candidate exists. Components are concatenated class by class and
/// labeled with their class; masses start uniform.
SourceSubstructures fit_source_substructures(const LabeledDataset& source, KRange k_range, int restarts,
                                             std::uint64_t seed, const EmOptions& options = {});

struct TargetSubstructures {
    SubstructureSet set;
    /// Component index of every target row.
    std::vector<int> assignment;
    MixtureModel model;
};

/// One mixture with `k_t` components over all target rows; masses 1/k_t.
TargetSubstructures fit_target_substructures(const LabeledDataset& target, int k_t, int restarts,
                                             std::uint64_t seed, const EmOptions& options = {});

/// K in `k_range` minimizing BIC on `data` (a hint for choosing k_t).
int suggest_component_count(const Matrix& data, KRange k_range, int restarts, std::uint64_t seed,
                            const EmOptions& options = {});

}  // namespace subot
