#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fireflow {

/// A point X_t in R^d. Dimension is the vector length and stays constant
/// along a trajectory; all components must be finite.
using StateVec = std::vector<double>;

inline bool all_finite(const StateVec& v) {
    for (double c : v) {
        if (!std::isfinite(c)) return false;
    }
    return true;
}

inline double l2_norm(const StateVec& v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

inline double l2_distance(const StateVec& a, const StateVec& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("l2_distance: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// a*x + y
inline StateVec axpy(double a, const StateVec& x, const StateVec& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("axpy: dimension mismatch");
    }
    StateVec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
    return out;
}

inline StateVec sub(const StateVec& a, const StateVec& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("sub: dimension mismatch");
    }
    StateVec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline void ensure_finite(const StateVec& v, const std::string& what) {
    if (!all_finite(v)) {
        throw std::invalid_argument(what + ": non-finite component");
    }
}

inline void ensure_dim(const StateVec& v, int dim, const std::string& what) {
    if (static_cast<int>(v.size()) != dim) {
        throw std::invalid_argument(what + ": expected dim " + std::to_string(dim) +
                                    ", got " + std::to_string(v.size()));
    }
}

}  // namespace fireflow
