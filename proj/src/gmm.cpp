#include "fireflow/gmm.hpp"

#include <cmath>
#include <stdexcept>

#include "fireflow/parallel.hpp"

namespace fireflow {

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : comps_(std::move(components)) {
    if (comps_.empty()) throw std::invalid_argument("GaussianMixture: no components");
    double total = 0.0;
    for (const auto& c : comps_) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("GaussianMixture: weight must be > 0");
        if (c.cov[1] != c.cov[2]) {
            throw std::invalid_argument("GaussianMixture: covariance not symmetric");
        }
        // 2x2 Cholesky; existence is the SPD check.
        const double a = c.cov[0], b = c.cov[1], d = c.cov[3];
        if (!(a > 0.0) || !(a * d - b * b > 0.0)) {
            throw std::invalid_argument("GaussianMixture: covariance not positive definite");
        }
        const double l00 = std::sqrt(a);
        const double l10 = b / l00;
        const double l11 = std::sqrt(d - l10 * l10);
        chol_.push_back({l00, l10, l11});
        total += c.weight;
        cum_weights_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("GaussianMixture: weights must sum to 1");
    }
    cum_weights_.back() = 1.0;
}

StateVec GaussianMixture::sample(Rng& rng) const {
    const double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < cum_weights_.size() && u >= cum_weights_[k]) ++k;
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const auto& L = chol_[k];
    const auto& mu = comps_[k].mean;
    return {mu[0] + L[0] * z0, mu[1] + L[1] * z0 + L[2] * z1};
}

std::vector<StateVec> GaussianMixture::sample_n(int n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample_n: n must be >= 1");
    std::vector<StateVec> out(n);
    parallel_for(n, [&](int i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        out[i] = sample(rng);
    });
    return out;
}

std::vector<StateVec> GaussianMixture::sample_n_serial(int n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample_n_serial: n must be >= 1");
    std::vector<StateVec> out(n);
    serial_for(n, [&](int i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        out[i] = sample(rng);
    });
    return out;
}

}  // namespace fireflow
