#pragma once

#include <optional>
#include <vector>

#include "subot/types.hpp"

namespace subot {

/// One substructure: a diagonal Gaussian with its mixing weight inside the
/// mixture it came from. Source components carry the class they were fit on.
struct GaussianComponent {
    Vector mean;
    Vector cov_diag;
    double weight = 1.0;
    std::optional<int> class_label;
};

enum class DomainTag { Source, Target };

/// Ordered substructures of one domain plus the probability mass placed on
/// each of them by the transport problems.
class SubstructureSet {
public:
    SubstructureSet() = default;
    SubstructureSet(std::vector<GaussianComponent> components, Vector masses, DomainTag tag);

    /// Masses 1/k on every component.
    static SubstructureSet uniform(std::vector<GaussianComponent> components, DomainTag tag);

    const std::vector<GaussianComponent>& components() const noexcept { return components_; }
    const Vector& masses() const noexcept { return masses_; }
    DomainTag domain_tag() const noexcept { return tag_; }
    std::size_t size() const noexcept { return components_.size(); }
    std::size_t dims() const noexcept;

    void set_masses(Vector masses);

    /// Class id of every component; throws InvalidArgument if one is unlabeled.
    std::vector<int> class_labels() const;

    /// k x d matrix of means.
    Matrix centers() const;
    /// k x 2d matrix of concatenated (mean, sqrt(cov_diag)) features.
    Matrix gaussian_features() const;

private:
    void validate() const;

    std::vector<GaussianComponent> components_;
    Vector masses_;
    DomainTag tag_ = DomainTag::Source;
};

}  // namespace subot
