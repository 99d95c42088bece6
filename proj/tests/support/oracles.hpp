#pragma once

// Reference computations used only by the tests. Each one follows a route
// that is independent of the library code it is compared against.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace subot::oracle {

/// |X_k| for k = 0..n/2 by the O(n^2) DFT definition.
inline std::vector<double> dft_magnitudes(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out[k] = std::abs(acc);
    }
    return out;
}

/// Plain-domain Sinkhorn matrix scaling, fixed iteration count.
inline Eigen::MatrixXd plain_sinkhorn(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                      double lambda, int iterations) {
    const Eigen::MatrixXd kernel = (-cost / lambda).array().exp();
    Eigen::VectorXd u = Eigen::VectorXd::Ones(a.size());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(b.size());
    for (int it = 0; it < iterations; ++it) {
        u = a.array() / (kernel * v).array();
        v = b.array() / (kernel.transpose() * u).array();
    }
    return u.asDiagonal() * kernel * v.asDiagonal();
}

/// Entropic transport with only the column marginal and the box/total-mass
/// constraints pi 1 <= 1, 1^T pi 1 = 1, solved by cyclic KL (Bregman)
/// projections starting from exp(-C / lambda - 1).
inline Eigen::MatrixXd column_constrained_entropic(const Eigen::MatrixXd& cost, const Eigen::VectorXd& w_t,
                                                   double lambda, int sweeps) {
    Eigen::MatrixXd pi = (-cost.array() / lambda - 1.0).exp();
    for (int s = 0; s < sweeps; ++s) {
        // Column marginal.
        const Eigen::RowVectorXd col = pi.colwise().sum();
        for (Eigen::Index j = 0; j < pi.cols(); ++j) pi.col(j) *= w_t[j] / col[j];
        // Row upper bounds.
        for (Eigen::Index i = 0; i < pi.rows(); ++i) {
            const double r = pi.row(i).sum();
            if (r > 1.0) pi.row(i) /= r;
        }
        // Total mass.
        pi /= pi.sum();
    }
    return pi;
}

/// Inverse standard normal CDF by bisection on erfc.
inline double normal_quantile(double u) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
        (cdf < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// W2^2 between diagonal Gaussians as a sum of 1-D transports, each the
/// integral over u of (Q_s(u) - Q_t(u))^2 with Q the quantile function,
/// evaluated by the midpoint rule.
inline double w2_sq_diagonal_gaussians(const Eigen::VectorXd& m_s, const Eigen::VectorXd& v_s,
                                       const Eigen::VectorXd& m_t, const Eigen::VectorXd& v_t, int nodes) {
    double total = 0.0;
    for (Eigen::Index f = 0; f < m_s.size(); ++f) {
        double acc = 0.0;
        for (int k = 0; k < nodes; ++k) {
            const double z = normal_quantile((k + 0.5) / nodes);
            const double diff = (m_s[f] + std::sqrt(v_s[f]) * z) - (m_t[f] + std::sqrt(v_t[f]) * z);
            acc += diff * diff;
        }
        total += acc / nodes;
    }
    return total;
}

/// General Bures trace formula tr(A + B - 2 (A^1/2 B A^1/2)^1/2).
inline double bures_trace_formula(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::MatrixXd root_a = a.sqrt();
    const Eigen::MatrixXd inner = root_a * b * root_a;
    return (a + b - 2.0 * inner.sqrt()).trace();
}

/// sum_i log sum_k w_k N(x_i | mu_k, diag(v_k)) without log-sum-exp.
inline double mixture_log_likelihood(const Eigen::MatrixXd& data, const std::vector<Eigen::VectorXd>& means,
                                     const std::vector<Eigen::VectorXd>& vars, const std::vector<double>& weights) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        double p = 0.0;
        for (std::size_t k = 0; k < means.size(); ++k) {
            double dens = weights[k];
            for (Eigen::Index f = 0; f < data.cols(); ++f) {
                const double d = data(i, f) - means[k][f];
                dens *= std::exp(-0.5 * d * d / vars[k][f]) / std::sqrt(2.0 * std::numbers::pi * vars[k][f]);
            }
            p += dens;
        }
        ll += std::log(p);
    }
    return ll;
}

}  // namespace subot::oracle
