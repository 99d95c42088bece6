#pragma once

#include <span>
#include <vector>

#include "subot/substructure.hpp"
#include "subot/types.hpp"

namespace subot {

/// Transport plan between k_s source and k_t target masses.
///
/// `row_marginal` / `col_marginal` are the plan's actual row and column sums.
/// `objective_trace` holds the solver objective after initialization and
/// after every outer iteration (a single entry for one-shot solvers).
struct Coupling {
    Matrix plan;
    Vector row_marginal;
    Vector col_marginal;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = true;
    /// Max absolute deviation of the plan's marginals from the requested ones.
    double marginal_residual = 0.0;

    static Coupling from_plan(Matrix plan);
    double total_mass() const { return plan.sum(); }
};

struct OtParams {
    /// Entropic weight of the source weighting step.
    double lambda1 = 1.0;
    /// Entropic weight of the mapping step.
    double lambda = 1.0;
    /// Group-lasso weight.
    double eta = 0.5;
    int max_outer = 50;
    int max_sinkhorn = 5000;
    /// Sinkhorn marginal tolerance and relative objective tolerance of GCG.
    double tol = 1e-9;

    void validate() const;
};

// Sinkhorn ------------------------------------------------------------------

/// Dual potentials (f, g) of the entropic problem; the plan is
/// exp((f_i + g_j - C_ij) / lambda). Rows/columns with zero mass hold -inf.
struct DualPotentials {
    Vector f;
    Vector g;
};

struct SinkhornOptions {
    double tol = 1e-9;
    int max_iter = 5000;
};

struct SinkhornResult {
    Coupling coupling;
    DualPotentials potentials;
};

/// Entropic OT, argmin <pi, C> + lambda * sum pi log pi subject to both
/// marginals, by Sinkhorn iterations on log-domain potentials. Stops when
/// the row marginal violation drops below `tol` (columns are matched exactly
/// after every sweep). Non-convergence is reported through
/// `coupling.converged` with the last iterate.
SinkhornResult sinkhorn_solve(const Matrix& cost, const Vector& a, const Vector& b, double lambda,
                              const SinkhornOptions& options = {}, const DualPotentials* warm_start = nullptr);

Coupling sinkhorn(const CostMatrix& cost, const Vector& w_s, const Vector& w_t, double lambda, double tol = 1e-9,
                  int max_iter = 5000);

/// sum_ij pi_ij log pi_ij with 0 log 0 = 0.
double neg_entropy(const Matrix& plan);

// Source weighting ----------------------------------------------------------

struct PartialOtResult {
    Vector source_weights;
    Coupling plan;
};

/// Closed-form entropic partial OT with only the target marginal fixed:
/// every column of the plan is w_t,j * softmax_i(-C_ij / lambda1), and the
/// source weights are the plan's row sums.
PartialOtResult partial_ot_source_weights(const CostMatrix& cost, const Vector& w_t, double lambda1);

// Group lasso ---------------------------------------------------------------

/// sum_j sum_class || pi(rows of class, j) ||_2.
double group_lasso_value(const Matrix& plan, std::span<const int> class_of_row);

/// Gradient of group_lasso_value; zero on groups whose norm is zero.
Matrix group_lasso_gradient(const Matrix& plan, std::span<const int> class_of_row);

/// <pi, C> + lambda * neg_entropy(pi) + eta * group_lasso_value(pi).
double gcg_objective(const Matrix& plan, const Matrix& cost, std::span<const int> class_of_row, double lambda,
                     double eta);

/// Group-lasso regularized entropic OT by generalized conditional gradient.
///
/// Each outer step linearizes the group term at the current plan, solves
/// the entropic problem with cost C + eta * grad, and moves along the
/// segment toward that solution with a golden-section line search on the
/// full objective. eta = 0 returns the plain Sinkhorn plan.
Coupling gcg_solve(const CostMatrix& cost, const Vector& w_s, const Vector& w_t, std::span<const int> class_of_row,
                   const OtParams& params);

// Mapping -------------------------------------------------------------------

struct BarycentricMap {
    Matrix mapped;
    /// Rows with zero plan mass that were copied from their cheapest target.
    std::vector<std::size_t> fallback_rows;
};

/// diag(pi 1)^-1 pi P_t. Throws ZeroMassRow when a plan row has no mass.
BarycentricMap barycentric_map(const Coupling& plan, const Matrix& target_repr);

/// As above, but a zero-mass row copies the target row with the lowest cost.
BarycentricMap barycentric_map(const Coupling& plan, const Matrix& target_repr, const CostMatrix& fallback_cost);

}  // namespace subot
