#include "fireflow/field.hpp"

#include <cmath>
#include <cstdio>

namespace fireflow {

AnalyticField AnalyticField::constant(StateVec c) {
    if (c.empty()) throw std::invalid_argument("constant field: empty vector");
    ensure_finite(c, "constant field");
    AnalyticField f(AnalyticKind::Constant, static_cast<int>(c.size()));
    f.constant_ = std::move(c);
    f.lipschitz_ = 0.0;
    return f;
}

AnalyticField AnalyticField::linear_scalar(double a, int dim) {
    if (dim < 1) throw std::invalid_argument("linear field: dim must be >= 1");
    if (!std::isfinite(a)) throw std::invalid_argument("linear field: non-finite rate");
    AnalyticField f(AnalyticKind::LinearScalar, dim);
    f.rate_ = a;
    f.lipschitz_ = std::abs(a);
    return f;
}

AnalyticField AnalyticField::time_poly(std::vector<double> coeffs, int dim) {
    if (dim < 1) throw std::invalid_argument("timeonly field: dim must be >= 1");
    if (coeffs.empty() || coeffs.size() > 5) {
        throw std::invalid_argument("timeonly field: polynomial degree must be <= 4");
    }
    ensure_finite(coeffs, "timeonly field");
    AnalyticField f(AnalyticKind::TimeOnly, dim);
    f.coeffs_ = std::move(coeffs);
    f.lipschitz_ = 0.0;
    return f;
}

StateVec AnalyticField::evaluate(const StateVec& x, double t) const {
    check_input(x, t);
    switch (kind_) {
        case AnalyticKind::Constant:
            return constant_;
        case AnalyticKind::LinearScalar: {
            StateVec out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = rate_ * x[i];
            return out;
        }
        case AnalyticKind::TimeOnly: {
            // Horner evaluation of p(t), broadcast to every component.
            double p = 0.0;
            for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) p = p * t + *it;
            return StateVec(x.size(), p);
        }
    }
    throw std::logic_error("unreachable");
}

StateVec AnalyticField::exact_solution(const StateVec& x0, double t0, double t1) const {
    ensure_dim(x0, dim_, "exact_solution");
    ensure_finite(x0, "exact_solution");
    switch (kind_) {
        case AnalyticKind::Constant: {
            StateVec out(x0.size());
            for (std::size_t i = 0; i < x0.size(); ++i) out[i] = x0[i] + constant_[i] * (t1 - t0);
            return out;
        }
        case AnalyticKind::LinearScalar: {
            const double g = std::exp(rate_ * (t1 - t0));
            StateVec out(x0.size());
            for (std::size_t i = 0; i < x0.size(); ++i) out[i] = x0[i] * g;
            return out;
        }
        case AnalyticKind::TimeOnly: {
            // Antiderivative increment: P(t1)-P(t0), P = sum c_k t^{k+1}/(k+1).
            auto antideriv = [this](double t) {
                double acc = 0.0;
                for (int k = static_cast<int>(coeffs_.size()) - 1; k >= 0; --k) {
                    acc = acc * t + coeffs_[k] / (k + 1);
                }
                return acc * t;
            };
            const double inc = antideriv(t1) - antideriv(t0);
            StateVec out(x0.size());
            for (std::size_t i = 0; i < x0.size(); ++i) out[i] = x0[i] + inc;
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

std::string AnalyticField::describe() const {
    char buf[64];
    switch (kind_) {
        case AnalyticKind::Constant: {
            std::string s = "constant(";
            for (std::size_t i = 0; i < constant_.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%g", constant_[i]);
                if (i) s += ",";
                s += buf;
            }
            return s + ")";
        }
        case AnalyticKind::LinearScalar:
            std::snprintf(buf, sizeof(buf), "linear(a=%g)", rate_);
            return buf;
        case AnalyticKind::TimeOnly: {
            std::string s = "timeonly(";
            for (std::size_t i = 0; i < coeffs_.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%g", coeffs_[i]);
                if (i) s += ",";
                s += buf;
            }
            return s + ")";
        }
    }
    return "?";
}

}  // namespace fireflow
