#include "subot/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "subot/error.hpp"

namespace subot {

namespace {

constexpr double kMinWeight = 1e-300;

void check_k(const Matrix& data, int k) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "component count must be >= 1");
    if (static_cast<Eigen::Index>(k) > data.rows()) {
        throw Error(ErrorKind::KExceedsN,
                    "k=" + std::to_string(k) + " exceeds the number of rows (" + std::to_string(data.rows()) + ")");
    }
    if (data.cols() < 1) throw Error(ErrorKind::InvalidArgument, "data needs at least one column");
    if (!data.allFinite()) throw Error(ErrorKind::NonFiniteValue, "data contains non-finite entries");
}

// Number of distinct rows, counting no further than `cap`.
std::size_t distinct_rows(const Matrix& data, std::size_t cap) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < data.cols(); ++c) {
            if (data(a, c) != data(b, c)) return data(a, c) < data(b, c);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t count = order.empty() ? 0 : 1;
    for (std::size_t i = 1; i < order.size() && count < cap; ++i) {
        if (less(order[i - 1], order[i])) ++count;
    }
    return count;
}

int nearest_centroid(const Matrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& x, double* best_out) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (best_out) *best_out = best_d;
    return best;
}

// n x k matrix of log(w_k) + log N(x_i | mu_k, diag(v_k)).
Matrix weighted_log_densities(const std::vector<GaussianComponent>& comps, const Matrix& data) {
    const Eigen::Index n = data.rows();
    const auto k = static_cast<Eigen::Index>(comps.size());
    Matrix out(n, k);
    const double log_two_pi = std::log(2.0 * std::numbers::pi);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& c = comps[static_cast<std::size_t>(j)];
        const Eigen::RowVectorXd inv_var = c.cov_diag.transpose().array().inverse();
        const double log_norm = std::log(std::max(c.weight, kMinWeight)) -
                                0.5 * (static_cast<double>(data.cols()) * log_two_pi + c.cov_diag.array().log().sum());
        const Eigen::RowVectorXd mu = c.mean.transpose();
        out.col(j) = ((data.rowwise() - mu).array().square().rowwise() * inv_var.array()).rowwise().sum().matrix() *
                         -0.5 +
                     Vector::Constant(n, log_norm);
    }
    return out;
}

// Normalizes rows of log densities in place into responsibilities and
// returns the total log-likelihood.
double normalize_rows(Matrix& logp) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
        const double m = logp.row(i).maxCoeff();
        const double lse = m + std::log((logp.row(i).array() - m).exp().sum());
        logp.row(i) = (logp.row(i).array() - lse).exp();
        total += lse;
    }
    return total;
}

void m_step(const Matrix& data, const Matrix& resp, std::vector<GaussianComponent>& comps, double floor) {
    const auto n = static_cast<double>(data.rows());
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < comps.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        const double nk = resp.col(col).sum();
        auto& c = comps[j];
        if (nk > 0.0) {
            c.mean = (data.transpose() * resp.col(col)) / nk;
            const Eigen::RowVectorXd mu = c.mean.transpose();
            c.cov_diag = ((data.rowwise() - mu).array().square().matrix().transpose() * resp.col(col)) / nk;
            c.cov_diag = c.cov_diag.cwiseMax(floor);
        }
        c.weight = std::max(nk / n, kMinWeight);
        weight_sum += c.weight;
    }
    for (auto& c : comps) c.weight /= weight_sum;
}

std::vector<GaussianComponent> init_from_kmeans(const Matrix& data, const KMeansResult& km, double floor) {
    const auto k = km.centroids.rows();
    const auto d = data.cols();
    std::vector<GaussianComponent> comps(static_cast<std::size_t>(k));
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    Matrix sq(k, d);
    sq.setZero();
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const auto a = km.assignment[static_cast<std::size_t>(i)];
        counts[static_cast<std::size_t>(a)] += 1.0;
        sq.row(a) += (data.row(i) - km.centroids.row(a)).array().square().matrix();
    }
    // Pooled within-cluster variance stands in for clusters too small to
    // estimate their own.
    Eigen::RowVectorXd pooled = sq.colwise().sum() / static_cast<double>(data.rows());
    pooled = pooled.cwiseMax(floor);
    for (Eigen::Index j = 0; j < k; ++j) {
        auto& c = comps[static_cast<std::size_t>(j)];
        const double cnt = counts[static_cast<std::size_t>(j)];
        c.mean = km.centroids.row(j).transpose();
        if (cnt >= 2.0) {
            c.cov_diag = (sq.row(j) / cnt).transpose().cwiseMax(floor);
        } else {
            c.cov_diag = pooled.transpose();
        }
        c.weight = std::max(cnt, 1.0) / static_cast<double>(data.rows());
    }
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    for (auto& c : comps) c.weight /= total;
    return comps;
}

// Highest likelihood over the restarts. With `avoid_collapse`, any
// non-collapsed fit beats every collapsed one.
MixtureModel best_of_restarts(const Matrix& data, int k, int restarts, std::uint64_t seed, const EmOptions& options,
                              bool avoid_collapse = false) {
    MixtureModel best;
    bool have = false;
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        MixtureModel m = em_fit(data, k, derive_seed(seed, r), options);
        const bool better = avoid_collapse && m.collapsed() != best.collapsed()
                                ? !m.collapsed()
                                : m.log_likelihood > best.log_likelihood;
        if (!have || better) {
            best = std::move(m);
            have = true;
        }
    }
    return best;
}

}  // namespace

KMeansResult kmeans_init(const Matrix& data, int k, std::uint64_t seed, int max_iter) {
    check_k(data, k);
    const Eigen::Index n = data.rows();
    std::mt19937_64 rng(seed);
    KMeansResult result;
    result.centroids.resize(k, data.cols());

    // k-means++ seeding.
    std::vector<double> mindist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    Eigen::Index chosen = first(rng);
    result.centroids.row(0) = data.row(chosen);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = (data.row(i) - result.centroids.row(c - 1)).squaredNorm();
            auto& md = mindist[static_cast<std::size_t>(i)];
            md = std::min(md, d);
            total += md;
        }
        if (!(total > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "fewer distinct rows than requested centroids");
        }
        std::uniform_real_distribution<double> pick(0.0, total);
        const double target = pick(rng);
        double acc = 0.0;
        chosen = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double md = mindist[static_cast<std::size_t>(i)];
            if (md <= 0.0) continue;
            acc += md;
            chosen = i;
            if (acc >= target) break;
        }
        result.centroids.row(c) = data.row(chosen);
    }

    // Lloyd iterations.
    result.assignment.assign(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = nearest_centroid(result.centroids, data.row(i), nullptr);
            if (a != result.assignment[static_cast<std::size_t>(i)]) {
                result.assignment[static_cast<std::size_t>(i)] = a;
                changed = true;
            }
        }
        result.iterations = it + 1;
        if (!changed) break;
        Matrix sums = Matrix::Zero(k, data.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto a = result.assignment[static_cast<std::size_t>(i)];
            sums.row(a) += data.row(i);
            ++counts[static_cast<std::size_t>(a)];
        }
        for (int c = 0; c < k; ++c) {
            // Empty clusters keep their previous centroid.
            if (counts[static_cast<std::size_t>(c)] > 0) {
                result.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
    }
    return result;
}

std::size_t MixtureModel::dims() const noexcept {
    return components.empty() ? 0 : static_cast<std::size_t>(components.front().mean.size());
}

std::size_t MixtureModel::free_parameter_count() const noexcept {
    const std::size_t k = components.size();
    return k == 0 ? 0 : k * 2 * dims() + k - 1;
}

bool MixtureModel::collapsed() const noexcept {
    const auto n = static_cast<double>(sample_count);
    return std::any_of(components.begin(), components.end(),
                       [n](const GaussianComponent& c) { return c.weight * n < kMinComponentSupport; });
}

MixtureModel em_fit(const Matrix& data, int k, std::uint64_t seed, const EmOptions& options) {
    check_k(data, k);
    MixtureModel model;
    model.sample_count = static_cast<std::size_t>(data.rows());

    const std::size_t distinct = distinct_rows(data, static_cast<std::size_t>(k));
    int effective_k = k;
    if (distinct < static_cast<std::size_t>(k)) {
        model.degenerate = true;
        effective_k = static_cast<int>(distinct);
    }

    const KMeansResult km = kmeans_init(data, effective_k, seed, options.kmeans_max_iter);
    model.components = init_from_kmeans(data, km, options.cov_floor);

    Matrix resp = weighted_log_densities(model.components, data);
    double ll = normalize_rows(resp);
    model.log_likelihood_trace.push_back(ll);
    for (int it = 0; it < options.max_iter; ++it) {
        m_step(data, resp, model.components, options.cov_floor);
        resp = weighted_log_densities(model.components, data);
        const double next = normalize_rows(resp);
        model.log_likelihood_trace.push_back(next);
        model.iterations = it + 1;
        const double change = std::abs(next - ll);
        ll = next;
        if (change < options.tol * std::max(std::abs(ll), 1e-300)) {
            model.converged = true;
            break;
        }
    }
    model.log_likelihood = ll;
    if (!std::isfinite(ll)) throw Error(ErrorKind::NumericalUnderflow, "EM produced a non-finite log-likelihood");
    return model;
}

Matrix responsibilities(const MixtureModel& model, const Matrix& data) {
    Matrix resp = weighted_log_densities(model.components, data);
    normalize_rows(resp);
    return resp;
}

double log_likelihood(const MixtureModel& model, const Matrix& data) {
    Matrix resp = weighted_log_densities(model.components, data);
    return normalize_rows(resp);
}

std::vector<int> hard_assign(const MixtureModel& model, const Matrix& data) {
    // Log densities order the same way as responsibilities, without the
    // rounding that exponentiation introduces near ties.
    const Matrix logp = weighted_log_densities(model.components, data);
    std::vector<int> out(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < logp.cols(); ++j) {
            if (logp(i, j) > logp(i, best)) best = j;
        }
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

double compute_bic(const MixtureModel& model) {
    return -2.0 * model.log_likelihood +
           static_cast<double>(model.free_parameter_count()) * std::log(static_cast<double>(model.sample_count));
}

SourceSubstructures fit_source_substructures(const LabeledDataset& source, KRange k_range, int restarts,
                                             std::uint64_t seed, const EmOptions& options) {
    if (k_range.lo < 1 || k_range.hi < k_range.lo) throw Error(ErrorKind::InvalidArgument, "invalid k range");
    const auto groups = source.rows_by_class();
    SourceSubstructures out;
    std::vector<GaussianComponent> all;
    for (std::size_t cls = 0; cls < groups.size(); ++cls) {
        const auto& rows = groups[cls];
        if (rows.size() < static_cast<std::size_t>(k_range.lo)) {
            throw Error(ErrorKind::ClassTooSmall, "class " + std::to_string(cls) + " has " +
                                                      std::to_string(rows.size()) + " rows, fewer than k_min=" +
                                                      std::to_string(k_range.lo));
        }
        Matrix x(static_cast<Eigen::Index>(rows.size()), source.features().cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = source.features().row(static_cast<Eigen::Index>(rows[i]));
        }
        const int hi = std::min<int>(k_range.hi, static_cast<int>(rows.size()));
        ClassSelection selection;
        selection.label = static_cast<int>(cls);
        MixtureModel best;
        double best_bic = std::numeric_limits<double>::infinity();
        for (int k = k_range.lo; k <= hi; ++k) {
            MixtureModel m = best_of_restarts(x, k, restarts, derive_seed(seed, cls, k), options, true);
            // A degenerate fit has fewer components than asked for and
            // duplicates a smaller K already evaluated.
            if (m.degenerate && k > k_range.lo) break;
            const double bic = compute_bic(m);
            const bool collapsed = m.collapsed();
            selection.candidates.push_back({static_cast<int>(m.components.size()), bic, m.log_likelihood, collapsed});
            const bool better = collapsed != best.collapsed() && !best.components.empty() ? !collapsed : bic < best_bic;
            if (best.components.empty() || better) {
                best_bic = bic;
                best = std::move(m);
            }
        }
        selection.selected_k = static_cast<int>(best.components.size());
        for (auto& c : best.components) {
            c.class_label = static_cast<int>(cls);
            all.push_back(std::move(c));
        }
        out.selections.push_back(std::move(selection));
    }
    out.set = SubstructureSet::uniform(std::move(all), DomainTag::Source);
    return out;
}

TargetSubstructures fit_target_substructures(const LabeledDataset& target, int k_t, int restarts,
                                             std::uint64_t seed, const EmOptions& options) {
    check_k(target.features(), k_t);
    TargetSubstructures out;
    out.model = best_of_restarts(target.features(), k_t, restarts, seed, options);
    out.assignment = hard_assign(out.model, target.features());
    auto comps = out.model.components;
    for (auto& c : comps) c.class_label.reset();
    out.set = SubstructureSet::uniform(std::move(comps), DomainTag::Target);
    return out;
}

int suggest_component_count(const Matrix& data, KRange k_range, int restarts, std::uint64_t seed,
                            const EmOptions& options) {
    if (k_range.lo < 1 || k_range.hi < k_range.lo) throw Error(ErrorKind::InvalidArgument, "invalid k range");
    int best_k = k_range.lo;
    double best_bic = std::numeric_limits<double>::infinity();
    bool best_collapsed = true;
    const int hi = std::min<int>(k_range.hi, static_cast<int>(data.rows()));
    for (int k = k_range.lo; k <= hi; ++k) {
        const MixtureModel m = best_of_restarts(data, k, restarts, derive_seed(seed, k), options, true);
        if (m.degenerate && k > k_range.lo) break;
        const double bic = compute_bic(m);
        const bool collapsed = m.collapsed();
        if (collapsed != best_collapsed ? !collapsed : bic < best_bic) {
            best_bic = bic;
            best_k = static_cast<int>(m.components.size());
            best_collapsed = collapsed;
        }
    }
    return best_k;
}

}  // namespace subot
