#include "subot/pipeline.hpp"

#include <chrono>
#include <limits>
#include <utility>

#include "subot/error.hpp"
#include "subot/substructure.hpp"

namespace subot {

std::string_view to_string(Method method) {
    switch (method) {
    case Method::SotCenter: return "sot_c";
    case Method::SotGaussian: return "sot_g";
    case Method::Otda: return "otda";
    case Method::NearestNeighbor: return "nn";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "sot_c") return Method::SotCenter;
    if (name == "sot_g") return Method::SotGaussian;
    if (name == "otda") return Method::Otda;
    if (name == "nn") return Method::NearestNeighbor;
    throw Error(ErrorKind::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

void AdaptationConfig::validate(int class_count) const {
    ot.validate();
    if (k_t < 0) throw Error(ErrorKind::InvalidConfig, "k_t must be >= 0 (0 selects the default)");
    if (resolved_k_t(class_count) < class_count) {
        throw Error(ErrorKind::InvalidConfig, "k_t must be at least the number of classes");
    }
    if (k_range.lo < 1 || k_range.hi < k_range.lo) throw Error(ErrorKind::InvalidConfig, "invalid k range");
    if (restarts < 1) throw Error(ErrorKind::InvalidConfig, "restarts must be >= 1");
}

double AdaptationResult::stage_seconds(std::string_view stage) const noexcept {
    for (const auto& t : timings) {
        if (t.stage == stage) return t.seconds;
    }
    return 0.0;
}

double AdaptationResult::total_seconds() const noexcept {
    double total = 0.0;
    for (const auto& t : timings) total += t.seconds;
    return total;
}

Standardizer Standardizer::fit(const Matrix& data) {
    Standardizer s;
    s.mean = data.colwise().mean();
    const Matrix centered = data.rowwise() - s.mean;
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(data.rows())).cwiseSqrt();
    for (Eigen::Index c = 0; c < s.scale.size(); ++c) {
        if (!(s.scale[c] > 0.0)) s.scale[c] = 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& data) const {
    if (data.cols() != mean.size()) throw Error(ErrorKind::DimensionMismatch, "feature count differs from the fit");
    return (data.rowwise() - mean).array().rowwise() / scale.array();
}

std::vector<int> nn_classify(const Matrix& train_points, std::span<const int> train_labels,
                             const Matrix& query_points) {
    if (train_points.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "1NN needs at least one training point");
    if (train_labels.size() != static_cast<std::size_t>(train_points.rows())) {
        throw Error(ErrorKind::LengthMismatch, "one label per training point expected");
    }
    if (train_points.cols() != query_points.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "training and query points differ in dimension");
    }
    std::vector<int> out(static_cast<std::size_t>(query_points.rows()));
    for (Eigen::Index q = 0; q < query_points.rows(); ++q) {
        Eigen::Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < train_points.rows(); ++t) {
            const double d = (train_points.row(t) - query_points.row(q)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = t;
            }
        }
        out[static_cast<std::size_t>(q)] = train_labels[static_cast<std::size_t>(best)];
    }
    return out;
}

std::vector<int> propagate_labels(std::span<const int> substructure_labels, std::span<const int> assignment) {
    std::vector<int> out(assignment.size());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const int a = assignment[i];
        if (a < 0 || static_cast<std::size_t>(a) >= substructure_labels.size()) {
            throw Error(ErrorKind::InvalidArgument, "assignment refers to an unknown substructure");
        }
        out[i] = substructure_labels[static_cast<std::size_t>(a)];
    }
    return out;
}

Evaluation evaluate_accuracy(std::span<const int> predicted, std::span<const int> truth, int class_count) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorKind::LengthMismatch, "predicted and true labels differ in length");
    }
    if (truth.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to evaluate");
    Evaluation e;
    e.confusion.assign(static_cast<std::size_t>(class_count), std::vector<std::size_t>(static_cast<std::size_t>(class_count), 0));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= class_count || predicted[i] < 0 || predicted[i] >= class_count) {
            throw Error(ErrorKind::InvalidArgument, "label outside [0, class_count)");
        }
        if (predicted[i] == truth[i]) ++hits;
        ++e.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    e.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
    return e;
}

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}

    template <typename F>
    decltype(auto) run(std::string stage, F&& fn) {
        const auto start = std::chrono::steady_clock::now();
        auto record = [&] {
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            sink_.push_back({stage, elapsed.count()});
        };
        try {
            if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
                fn();
                record();
            } else {
                decltype(auto) value = fn();
                record();
                return value;
            }
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(stage, e);
        }
    }

private:
    std::vector<StageTiming>& sink_;
};

struct PreparedDomains {
    LabeledDataset source;
    LabeledDataset target;
};

PreparedDomains prepare(const LabeledDataset& source, const LabeledDataset& target, bool normalize) {
    if (!source.has_labels()) throw Error(ErrorKind::InvalidArgument, "source domain must be labeled");
    if (source.dims() != target.dims()) throw Error(ErrorKind::DimensionMismatch, "domains differ in feature count");
    LabeledDataset aligned = target.has_labels() ? align_labels(target, source.label_values()) : target;
    if (!normalize) return {source, std::move(aligned)};
    const Standardizer z = Standardizer::fit(source.features());
    return {source.with_features(z.apply(source.features())), aligned.with_features(z.apply(aligned.features()))};
}

void attach_evaluation(AdaptationResult& result, const LabeledDataset& target, int class_count) {
    if (target.has_labels()) {
        result.evaluation = evaluate_accuracy(result.predicted_labels, target.labels(), class_count);
    }
}

}  // namespace

AdaptationResult sot_adapt(const LabeledDataset& source, const LabeledDataset& target, const AdaptationConfig& config,
                           const PrecomputedSubstructures* precomputed) {
    if (config.variant != Method::SotCenter && config.variant != Method::SotGaussian) {
        throw Error(ErrorKind::InvalidConfig, "sot_adapt runs only sot_c or sot_g");
    }
    AdaptationResult result;
    result.method = config.variant;
    StageClock clock(result.timings);

    clock.run("validate", [&] {
        if (!source.has_labels()) throw Error(ErrorKind::InvalidArgument, "source domain must be labeled");
        config.validate(source.class_count());
    });
    const int class_count = source.class_count();
    const int k_t = config.resolved_k_t(class_count);
    result.label_values = source.label_values();

    const PreparedDomains domains = clock.run("normalize", [&] { return prepare(source, target, config.normalize); });

    // 1. Per-class source mixtures, K by BIC.
    SourceSubstructures src = clock.run("source_gmm", [&] {
        if (precomputed && precomputed->source) {
            if (precomputed->source->set.dims() != domains.source.dims()) {
                throw Error(ErrorKind::DimensionMismatch, "cached source substructures differ in dimension");
            }
            return *precomputed->source;
        }
        return fit_source_substructures(domains.source, config.k_range, config.restarts,
                                        derive_seed(config.rng_seed, 1), config.em);
    });
    // 2. Target mixture with k_t components.
    TargetSubstructures tgt = clock.run("target_gmm", [&] {
        if (precomputed && precomputed->target) {
            if (precomputed->target->set.dims() != domains.target.dims() ||
                precomputed->target->assignment.size() != domains.target.rows()) {
                throw Error(ErrorKind::DimensionMismatch, "cached target substructures do not fit the target");
            }
            return *precomputed->target;
        }
        return fit_target_substructures(domains.target, k_t, config.restarts, derive_seed(config.rng_seed, 2),
                                        config.em);
    });
    const std::vector<int> class_of_row = src.set.class_labels();

    // 3. Substructure costs.
    const bool gaussian = config.variant == Method::SotGaussian;
    const CostMatrix cost = clock.run("cost", [&] {
        return gaussian ? cost_matrix_gaussian(src.set, tgt.set) : cost_matrix_center(src.set, tgt.set);
    });

    // 4. Source weights from the target-only constrained problem.
    const PartialOtResult weighting =
        clock.run("weighting", [&] { return partial_ot_source_weights(cost, tgt.set.masses(), config.ot.lambda1); });
    src.set.set_masses(weighting.source_weights);

    // 5. Group-lasso coupling.
    result.coupling = clock.run("coupling", [&] {
        return gcg_solve(cost, src.set.masses(), tgt.set.masses(), class_of_row, config.ot);
    });

    // 6. Barycentric images of the source substructures.
    const Matrix target_repr = gaussian ? tgt.set.gaussian_features() : tgt.set.centers();
    BarycentricMap mapped = clock.run("mapping", [&] { return barycentric_map(result.coupling, target_repr, cost); });

    // 7. Label target substructures by 1NN against the mapped sources.
    result.substructure_labels =
        clock.run("classify", [&] { return nn_classify(mapped.mapped, class_of_row, target_repr); });

    // 8. Every target row takes its substructure's label.
    result.predicted_labels =
        clock.run("propagate", [&] { return propagate_labels(result.substructure_labels, tgt.assignment); });

    result.target_assignment = std::move(tgt.assignment);
    result.source_substructure_labels = class_of_row;
    result.source_selections = std::move(src.selections);
    result.source_weights = src.set.masses();
    result.mapped_sources = std::move(mapped.mapped);
    result.fallback_rows = std::move(mapped.fallback_rows);
    result.source_substructures = std::move(src.set);
    result.target_substructures = std::move(tgt.set);
    attach_evaluation(result, domains.target, class_count);
    return result;
}

AdaptationResult otda_baseline(const LabeledDataset& source, const LabeledDataset& target, const OtParams& ot,
                               bool normalize) {
    AdaptationResult result;
    result.method = Method::Otda;
    StageClock clock(result.timings);
    clock.run("validate", [&] { ot.validate(); });
    const PreparedDomains domains = clock.run("normalize", [&] { return prepare(source, target, normalize); });
    result.label_values = source.label_values();
    const int class_count = source.class_count();
    const auto ns = static_cast<Eigen::Index>(domains.source.rows());
    const auto nt = static_cast<Eigen::Index>(domains.target.rows());

    const CostMatrix cost = clock.run("cost", [&] {
        return CostMatrix{pairwise_sq_euclidean(domains.source.features(), domains.target.features()),
                          CostKind::SampleEuclidean};
    });
    const Vector w_s = Vector::Constant(ns, 1.0 / static_cast<double>(ns));
    const Vector w_t = Vector::Constant(nt, 1.0 / static_cast<double>(nt));
    const auto& labels = domains.source.labels();
    result.coupling = clock.run("coupling", [&] { return gcg_solve(cost, w_s, w_t, labels, ot); });
    BarycentricMap mapped =
        clock.run("mapping", [&] { return barycentric_map(result.coupling, domains.target.features(), cost); });
    result.predicted_labels =
        clock.run("classify", [&] { return nn_classify(mapped.mapped, labels, domains.target.features()); });
    result.source_weights = w_s;
    result.mapped_sources = std::move(mapped.mapped);
    result.fallback_rows = std::move(mapped.fallback_rows);
    attach_evaluation(result, domains.target, class_count);
    return result;
}

AdaptationResult nn_baseline(const LabeledDataset& source, const LabeledDataset& target, bool normalize) {
    AdaptationResult result;
    result.method = Method::NearestNeighbor;
    StageClock clock(result.timings);
    const PreparedDomains domains = clock.run("normalize", [&] { return prepare(source, target, normalize); });
    result.label_values = source.label_values();
    result.predicted_labels = clock.run("classify", [&] {
        return nn_classify(domains.source.features(), domains.source.labels(), domains.target.features());
    });
    attach_evaluation(result, domains.target, source.class_count());
    return result;
}

AdaptationResult run_adaptation(const LabeledDataset& source, const LabeledDataset& target,
                                const AdaptationConfig& config) {
    switch (config.variant) {
    case Method::SotCenter:
    case Method::SotGaussian: return sot_adapt(source, target, config);
    case Method::Otda: return otda_baseline(source, target, config.ot, config.normalize);
    case Method::NearestNeighbor: return nn_baseline(source, target, config.normalize);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown method");
}

}  // namespace subot
