#pragma once

#include <filesystem>

#include "subot/components.hpp"
#include "subot/types.hpp"

namespace subot {

enum class CostKind { Center, Gaussian, SampleEuclidean };

/// k_s x k_t nonnegative, finite pairwise costs.
struct CostMatrix {
    Matrix values;
    CostKind kind = CostKind::Center;

    Eigen::Index rows() const noexcept { return values.rows(); }
    Eigen::Index cols() const noexcept { return values.cols(); }
};

/// Squared Euclidean distance between rows of `a` and rows of `b`.
Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b);

/// ||z_s,i - z_t,j||^2 between component means.
CostMatrix cost_matrix_center(const SubstructureSet& source, const SubstructureSet& target);

/// Squared Bures distance between diagonal covariances given by their
/// diagonals: sum_f (sqrt(r_s,f) - sqrt(r_t,f))^2.
double bures_diag_sq(const Vector& r_s, const Vector& r_t);

/// Squared 2-Wasserstein distance between diagonal Gaussians:
/// ||z_s - z_t||^2 + bures_diag_sq(r_s, r_t), computed as the squared
/// distance between concatenated (z, sqrt(r)) features.
CostMatrix cost_matrix_gaussian(const SubstructureSet& source, const SubstructureSet& target);

/// Writes the matrix as CSV with a header row (t0..t{k_t-1}).
void write_cost_csv(const std::filesystem::path& path, const CostMatrix& cost);

}  // namespace subot
