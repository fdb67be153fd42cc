#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fireflow/rng.hpp"
#include "fireflow/state.hpp"

namespace fireflow {

/// One 2D Gaussian component: weight, mean, and a symmetric positive
/// definite covariance given row-major as {c00, c01, c10, c11}.
struct GaussianComponent {
    double weight = 1.0;
    std::array<double, 2> mean{0.0, 0.0};
    std::array<double, 4> cov{1.0, 0.0, 0.0, 1.0};
};

/// A 2D Gaussian mixture. Weights must be positive and sum to 1 within
/// 1e-12; covariances must be symmetric positive definite (checked at
/// construction, where the Cholesky factors are precomputed).
class GaussianMixture {
  public:
    explicit GaussianMixture(std::vector<GaussianComponent> components);

    /// One draw, consuming the caller's stream: one uniform for the
    /// component, two normals through its Cholesky factor.
    StateVec sample(Rng& rng) const;

    /// n i.i.d. draws, deterministic per seed. Each sample uses its own
    /// derived stream, so the parallel and serial variants agree bitwise.
    std::vector<StateVec> sample_n(int n, std::uint64_t seed) const;
    std::vector<StateVec> sample_n_serial(int n, std::uint64_t seed) const;

    int components() const { return static_cast<int>(comps_.size()); }
    const GaussianComponent& component(int i) const { return comps_[i]; }

  private:
    std::vector<GaussianComponent> comps_;
    std::vector<double> cum_weights_;
    std::vector<std::array<double, 3>> chol_;  // {l00, l10, l11} per component
};

}  // namespace fireflow
