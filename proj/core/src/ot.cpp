#include "subot/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "subot/error.hpp"

namespace subot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_probability(const Vector& v, const char* name) {
    if (v.size() == 0) throw Error(ErrorKind::InvalidArgument, std::string(name) + " is empty");
    if (!v.allFinite() || (v.array() < 0.0).any()) {
        throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be finite and nonnegative");
    }
    if (std::abs(v.sum() - 1.0) > 1e-8) {
        throw Error(ErrorKind::InvalidArgument, std::string(name) + " must sum to 1");
    }
}

void check_cost(const Matrix& cost, const Vector& a, const Vector& b) {
    if (cost.rows() != a.size() || cost.cols() != b.size()) {
        throw Error(ErrorKind::DimensionMismatch, "cost shape does not match the marginals");
    }
    if (!cost.allFinite()) throw Error(ErrorKind::NonFiniteValue, "cost matrix has non-finite entries");
}

std::vector<Eigen::Index> positive_support(const Vector& v) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] > 0.0) idx.push_back(i);
    }
    return idx;
}

struct LogSinkhornState {
    Vector f;
    Vector g;
    int iterations = 0;
};

// Sinkhorn on a problem whose marginals are strictly positive.
void run_log_sinkhorn(const Matrix& cost, const Vector& a, const Vector& b, double lambda,
                      const SinkhornOptions& options, LogSinkhornState& state) {
    const Eigen::Index n = cost.rows();
    const Eigen::Index m = cost.cols();
    const Eigen::ArrayXd log_a = a.array().log();
    const Eigen::ArrayXd log_b = b.array().log();
    const double inv_lambda = 1.0 / lambda;

    Eigen::ArrayXd row_lse(n);
    Eigen::ArrayXd col_max(m);
    Eigen::ArrayXd col_sum(m);
    Eigen::ArrayXd scaled(m);
    state.iterations = 0;
    for (int it = 0; it < options.max_iter; ++it) {
        // Row log-sum-exp with the current g; doubles as the row-marginal check.
        double residual = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            scaled = (state.g.array() - cost.row(i).transpose().array()) * inv_lambda;
            const double mx = scaled.maxCoeff();
            row_lse[i] = mx + std::log((scaled - mx).exp().sum());
            residual = std::max(residual, std::abs(std::exp(state.f[i] * inv_lambda + row_lse[i]) - a[i]));
        }
        if (it > 0 && residual < options.tol) break;
        state.f = lambda * (log_a - row_lse).matrix();

        col_max.setConstant(-kInf);
        for (Eigen::Index i = 0; i < n; ++i) {
            col_max = col_max.max((state.f[i] - cost.row(i).transpose().array()) * inv_lambda);
        }
        col_sum.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            col_sum += ((state.f[i] - cost.row(i).transpose().array()) * inv_lambda - col_max).exp();
        }
        state.g = lambda * (log_b - col_max - col_sum.log()).matrix();
        state.iterations = it + 1;
    }
}

double max_marginal_residual(const Matrix& plan, const Vector& a, const Vector& b) {
    const double rows = (plan.rowwise().sum() - a).cwiseAbs().maxCoeff();
    const double cols = (plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
    return std::max(rows, cols);
}

}  // namespace

Coupling Coupling::from_plan(Matrix plan) {
    Coupling c;
    c.row_marginal = plan.rowwise().sum();
    c.col_marginal = plan.colwise().sum().transpose();
    c.plan = std::move(plan);
    return c;
}

void OtParams::validate() const {
    if (!(lambda1 > 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda1 must be > 0");
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda must be > 0");
    if (!(eta >= 0.0)) throw Error(ErrorKind::InvalidConfig, "eta must be >= 0");
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "tol must be > 0");
    if (max_outer < 1 || max_sinkhorn < 1) throw Error(ErrorKind::InvalidConfig, "iteration caps must be >= 1");
}

double neg_entropy(const Matrix& plan) {
    double h = 0.0;
    const double* p = plan.data();
    for (Eigen::Index i = 0; i < plan.size(); ++i) {
        if (p[i] > 0.0) h += p[i] * std::log(p[i]);
    }
    return h;
}

SinkhornResult sinkhorn_solve(const Matrix& cost, const Vector& a, const Vector& b, double lambda,
                              const SinkhornOptions& options, const DualPotentials* warm_start) {
    check_probability(a, "source marginal");
    check_probability(b, "target marginal");
    check_cost(cost, a, b);
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be > 0");

    const auto rows = positive_support(a);
    const auto cols = positive_support(b);
    const bool full = rows.size() == static_cast<std::size_t>(a.size()) &&
                      cols.size() == static_cast<std::size_t>(b.size());

    Matrix sub_cost;
    Vector sub_a, sub_b;
    if (!full) {
        sub_cost = cost(rows, cols);
        sub_a = a(rows);
        sub_b = b(cols);
    }
    const Matrix& c = full ? cost : sub_cost;
    const Vector& sa = full ? a : sub_a;
    const Vector& sb = full ? b : sub_b;

    LogSinkhornState state;
    state.f = Vector::Zero(sa.size());
    state.g = Vector::Zero(sb.size());
    if (warm_start && warm_start->g.size() == b.size()) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double v = warm_start->g[cols[j]];
            state.g[static_cast<Eigen::Index>(j)] = std::isfinite(v) ? v : 0.0;
        }
    }
    run_log_sinkhorn(c, sa, sb, lambda, options, state);

    Matrix plan = Matrix::Zero(a.size(), b.size());
    DualPotentials potentials{Vector::Constant(a.size(), -kInf), Vector::Constant(b.size(), -kInf)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto si = static_cast<Eigen::Index>(i);
        potentials.f[rows[i]] = state.f[si];
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto sj = static_cast<Eigen::Index>(j);
            plan(rows[i], cols[j]) = std::exp((state.f[si] + state.g[sj] - c(si, sj)) / lambda);
        }
    }
    for (std::size_t j = 0; j < cols.size(); ++j) potentials.g[cols[j]] = state.g[static_cast<Eigen::Index>(j)];

    SinkhornResult result;
    result.coupling = Coupling::from_plan(std::move(plan));
    result.coupling.iterations = state.iterations;
    result.coupling.marginal_residual = max_marginal_residual(result.coupling.plan, a, b);
    result.coupling.converged = result.coupling.marginal_residual < options.tol;
    result.coupling.objective_trace.push_back((result.coupling.plan.array() * cost.array()).sum() +
                                              lambda * neg_entropy(result.coupling.plan));
    result.potentials = std::move(potentials);
    return result;
}

Coupling sinkhorn(const CostMatrix& cost, const Vector& w_s, const Vector& w_t, double lambda, double tol,
                  int max_iter) {
    return sinkhorn_solve(cost.values, w_s, w_t, lambda, SinkhornOptions{tol, max_iter}).coupling;
}

PartialOtResult partial_ot_source_weights(const CostMatrix& cost, const Vector& w_t, double lambda1) {
    check_probability(w_t, "target marginal");
    if (!(lambda1 > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda1 must be > 0");
    if (cost.cols() != w_t.size()) throw Error(ErrorKind::DimensionMismatch, "cost columns differ from w_t length");
    if (cost.rows() < 1) throw Error(ErrorKind::InvalidArgument, "cost matrix has no rows");
    if (!cost.values.allFinite()) throw Error(ErrorKind::NonFiniteValue, "cost matrix has non-finite entries");

    // pi0 = exp(-C / lambda1 - 1) rescaled per column to mass w_t,j. The
    // scaling makes each column a softmax, evaluated in the log domain so a
    // column never underflows as a whole.
    Matrix plan(cost.rows(), cost.cols());
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
        const Eigen::ArrayXd log_pi0 = -cost.values.col(j).array() / lambda1 - 1.0;
        const double mx = log_pi0.maxCoeff();
        const Eigen::ArrayXd shifted = (log_pi0 - mx).exp();
        const double column_sum = shifted.sum();
        if (!(column_sum > 0.0) || !std::isfinite(column_sum)) {
            throw Error(ErrorKind::NumericalUnderflow, "column " + std::to_string(j) + " of pi0 vanished");
        }
        plan.col(j) = (shifted * (w_t[j] / column_sum)).matrix();
    }
    PartialOtResult result;
    result.plan = Coupling::from_plan(std::move(plan));
    result.plan.objective_trace.push_back((result.plan.plan.array() * cost.values.array()).sum() +
                                          lambda1 * neg_entropy(result.plan.plan));
    result.plan.marginal_residual = (result.plan.col_marginal - w_t).cwiseAbs().maxCoeff();
    result.source_weights = result.plan.row_marginal;
    return result;
}

double group_lasso_value(const Matrix& plan, std::span<const int> class_of_row) {
    if (class_of_row.size() != static_cast<std::size_t>(plan.rows())) {
        throw Error(ErrorKind::LengthMismatch, "class_of_row must have one entry per plan row");
    }
    int classes = 0;
    for (int c : class_of_row) {
        if (c < 0) throw Error(ErrorKind::InvalidArgument, "class ids must be >= 0");
        classes = std::max(classes, c + 1);
    }
    double total = 0.0;
    std::vector<double> sq(static_cast<std::size_t>(classes));
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
        std::fill(sq.begin(), sq.end(), 0.0);
        for (Eigen::Index i = 0; i < plan.rows(); ++i) {
            sq[static_cast<std::size_t>(class_of_row[static_cast<std::size_t>(i)])] += plan(i, j) * plan(i, j);
        }
        for (double s : sq) total += std::sqrt(s);
    }
    return total;
}

Matrix group_lasso_gradient(const Matrix& plan, std::span<const int> class_of_row) {
    if (class_of_row.size() != static_cast<std::size_t>(plan.rows())) {
        throw Error(ErrorKind::LengthMismatch, "class_of_row must have one entry per plan row");
    }
    int classes = 0;
    for (int c : class_of_row) classes = std::max(classes, c + 1);
    Matrix grad = Matrix::Zero(plan.rows(), plan.cols());
    std::vector<double> norm(static_cast<std::size_t>(classes));
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
        std::fill(norm.begin(), norm.end(), 0.0);
        for (Eigen::Index i = 0; i < plan.rows(); ++i) {
            norm[static_cast<std::size_t>(class_of_row[static_cast<std::size_t>(i)])] += plan(i, j) * plan(i, j);
        }
        for (double& v : norm) v = std::sqrt(v);
        for (Eigen::Index i = 0; i < plan.rows(); ++i) {
            const double nrm = norm[static_cast<std::size_t>(class_of_row[static_cast<std::size_t>(i)])];
            if (nrm > 0.0) grad(i, j) = plan(i, j) / nrm;
        }
    }
    return grad;
}

double gcg_objective(const Matrix& plan, const Matrix& cost, std::span<const int> class_of_row, double lambda,
                     double eta) {
    double value = (plan.array() * cost.array()).sum() + lambda * neg_entropy(plan);
    if (eta > 0.0) value += eta * group_lasso_value(plan, class_of_row);
    return value;
}

namespace {

// Golden-section minimization of a convex function on [0, 1]; the endpoints
// are compared as well so a boundary minimum is never missed.
template <typename F>
std::pair<double, double> golden_section(F&& phi, double phi0) {
    constexpr double inv_phi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = phi(x1);
    double f2 = phi(x2);
    while (hi - lo > 1e-7) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = phi(x2);
        }
    }
    std::pair<double, double> best = f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
    const double f_one = phi(1.0);
    if (f_one < best.second) best = {1.0, f_one};
    if (phi0 <= best.second) best = {0.0, phi0};
    return best;
}

}  // namespace

Coupling gcg_solve(const CostMatrix& cost, const Vector& w_s, const Vector& w_t, std::span<const int> class_of_row,
                   const OtParams& params) {
    params.validate();
    if (class_of_row.size() != static_cast<std::size_t>(cost.rows())) {
        throw Error(ErrorKind::LengthMismatch, "class_of_row must have one entry per source row");
    }
    const SinkhornOptions inner{params.tol, params.max_sinkhorn};
    SinkhornResult start = sinkhorn_solve(cost.values, w_s, w_t, params.lambda, inner);
    if (params.eta == 0.0) return std::move(start.coupling);

    const Matrix& c = cost.values;
    Matrix plan = std::move(start.coupling.plan);
    DualPotentials potentials = std::move(start.potentials);
    bool inner_converged = start.coupling.converged;
    double value = gcg_objective(plan, c, class_of_row, params.lambda, params.eta);
    std::vector<double> trace{value};
    bool converged = false;
    int outer = 0;
    for (; outer < params.max_outer; ++outer) {
        const Matrix linearized = c + params.eta * group_lasso_gradient(plan, class_of_row);
        SinkhornResult step = sinkhorn_solve(linearized, w_s, w_t, params.lambda, inner, &potentials);
        inner_converged = inner_converged && step.coupling.converged;
        potentials = std::move(step.potentials);
        const Matrix direction = step.coupling.plan - plan;

        const double linear0 = (plan.array() * c.array()).sum();
        const double linear_slope = (direction.array() * c.array()).sum();
        auto phi = [&](double alpha) {
            const Matrix candidate = plan + alpha * direction;
            return linear0 + alpha * linear_slope + params.lambda * neg_entropy(candidate) +
                   params.eta * group_lasso_value(candidate, class_of_row);
        };
        const auto [alpha, next] = golden_section(phi, value);
        if (alpha == 0.0) {
            converged = true;
            break;
        }
        plan += alpha * direction;
        const double change = value - next;
        value = next;
        trace.push_back(value);
        if (change <= params.tol * std::max(std::abs(value), 1e-300)) {
            converged = true;
            ++outer;
            break;
        }
    }

    Coupling result = Coupling::from_plan(std::move(plan));
    result.objective_trace = std::move(trace);
    result.iterations = outer;
    result.marginal_residual = max_marginal_residual(result.plan, w_s, w_t);
    result.converged = converged && inner_converged;
    return result;
}

namespace {

BarycentricMap map_rows(const Coupling& coupling, const Matrix& target_repr, const CostMatrix* fallback) {
    const Matrix& plan = coupling.plan;
    if (plan.cols() != target_repr.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "plan columns differ from target representation rows");
    }
    if (fallback && (fallback->rows() != plan.rows() || fallback->cols() != plan.cols())) {
        throw Error(ErrorKind::DimensionMismatch, "fallback cost shape differs from the plan");
    }
    BarycentricMap out;
    out.mapped = plan * target_repr;
    const Vector mass = plan.rowwise().sum();
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
        if (mass[i] > 0.0) {
            out.mapped.row(i) /= mass[i];
            continue;
        }
        if (!fallback) throw Error(ErrorKind::ZeroMassRow, "plan row " + std::to_string(i) + " carries no mass");
        Eigen::Index nearest = 0;
        fallback->values.row(i).minCoeff(&nearest);
        out.mapped.row(i) = target_repr.row(nearest);
        out.fallback_rows.push_back(static_cast<std::size_t>(i));
    }
    return out;
}

}  // namespace

BarycentricMap barycentric_map(const Coupling& plan, const Matrix& target_repr) {
    return map_rows(plan, target_repr, nullptr);
}

BarycentricMap barycentric_map(const Coupling& plan, const Matrix& target_repr, const CostMatrix& fallback_cost) {
    return map_rows(plan, target_repr, &fallback_cost);
}

}  // namespace subot
