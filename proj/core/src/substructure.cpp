#include "subot/substructure.hpp"

#include <cmath>
#include <fstream>

#include "subot/error.hpp"

namespace subot {

// SubstructureSet -------------------------------------------------------------

SubstructureSet::SubstructureSet(std::vector<GaussianComponent> components, Vector masses, DomainTag tag)
    : components_(std::move(components)), masses_(std::move(masses)), tag_(tag) {
    validate();
}

SubstructureSet SubstructureSet::uniform(std::vector<GaussianComponent> components, DomainTag tag) {
    const auto k = static_cast<Eigen::Index>(components.size());
    Vector masses = Vector::Constant(k, k > 0 ? 1.0 / static_cast<double>(k) : 0.0);
    return SubstructureSet(std::move(components), std::move(masses), tag);
}

std::size_t SubstructureSet::dims() const noexcept {
    return components_.empty() ? 0 : static_cast<std::size_t>(components_.front().mean.size());
}

void SubstructureSet::set_masses(Vector masses) {
    std::swap(masses_, masses);
    try {
        validate();
    } catch (...) {
        std::swap(masses_, masses);
        throw;
    }
}

void SubstructureSet::validate() const {
    if (components_.empty()) throw Error(ErrorKind::InvalidArgument, "substructure set is empty");
    if (masses_.size() != static_cast<Eigen::Index>(components_.size())) {
        throw Error(ErrorKind::LengthMismatch, "mass vector length differs from component count");
    }
    if (!masses_.allFinite() || (masses_.array() < 0.0).any()) {
        throw Error(ErrorKind::InvalidArgument, "masses must be finite and nonnegative");
    }
    if (std::abs(masses_.sum() - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "masses must sum to 1");
    const auto d = components_.front().mean.size();
    for (const auto& c : components_) {
        if (c.mean.size() != d || c.cov_diag.size() != d) {
            throw Error(ErrorKind::DimensionMismatch, "components disagree on dimension");
        }
        if ((c.cov_diag.array() < 0.0).any()) throw Error(ErrorKind::NegativeVariance, "negative variance");
    }
}

std::vector<int> SubstructureSet::class_labels() const {
    std::vector<int> out;
    out.reserve(components_.size());
    for (const auto& c : components_) {
        if (!c.class_label) throw Error(ErrorKind::InvalidArgument, "component has no class label");
        out.push_back(*c.class_label);
    }
    return out;
}

Matrix SubstructureSet::centers() const {
    Matrix out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dims()));
    for (std::size_t i = 0; i < size(); ++i) out.row(static_cast<Eigen::Index>(i)) = components_[i].mean.transpose();
    return out;
}

Matrix SubstructureSet::gaussian_features() const {
    const auto d = static_cast<Eigen::Index>(dims());
    Matrix out(static_cast<Eigen::Index>(size()), 2 * d);
    for (std::size_t i = 0; i < size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out.row(r).head(d) = components_[i].mean.transpose();
        out.row(r).tail(d) = components_[i].cov_diag.cwiseSqrt().transpose();
    }
    return out;
}

// Costs -----------------------------------------------------------------------

Matrix pairwise_sq_euclidean(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw Error(ErrorKind::DimensionMismatch, "point sets differ in dimension");
    // Direct differences rather than the |a|^2 + |b|^2 - 2ab expansion so that
    // identical points cost exactly zero.
    Matrix out(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        out.row(i) = (b.rowwise() - a.row(i)).rowwise().squaredNorm().transpose();
    }
    return out;
}

CostMatrix cost_matrix_center(const SubstructureSet& source, const SubstructureSet& target) {
    if (source.dims() != target.dims()) throw Error(ErrorKind::DimensionMismatch, "substructure dimensions differ");
    return {pairwise_sq_euclidean(source.centers(), target.centers()), CostKind::Center};
}

double bures_diag_sq(const Vector& r_s, const Vector& r_t) {
    if (r_s.size() != r_t.size()) throw Error(ErrorKind::DimensionMismatch, "variance vectors differ in length");
    if ((r_s.array() < 0.0).any() || (r_t.array() < 0.0).any()) {
        throw Error(ErrorKind::NegativeVariance, "variances must be nonnegative");
    }
    return (r_s.cwiseSqrt() - r_t.cwiseSqrt()).squaredNorm();
}

CostMatrix cost_matrix_gaussian(const SubstructureSet& source, const SubstructureSet& target) {
    if (source.dims() != target.dims()) throw Error(ErrorKind::DimensionMismatch, "substructure dimensions differ");
    return {pairwise_sq_euclidean(source.gaussian_features(), target.gaussian_features()), CostKind::Gaussian};
}

void write_cost_csv(const std::filesystem::path& path, const CostMatrix& cost) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
    out.precision(17);
    for (Eigen::Index j = 0; j < cost.cols(); ++j) out << (j ? "," : "") << 't' << j;
    out << '\n';
    for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        for (Eigen::Index j = 0; j < cost.cols(); ++j) out << (j ? "," : "") << cost.values(i, j);
        out << '\n';
    }
}

}  // namespace subot
