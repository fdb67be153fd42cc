#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fireflow/state.hpp"

namespace fireflow {

/// Drift v(X, t) of the flow ODE dX_t = v(X_t, t) dt on t in [0, 1].
///
/// Implementations are deterministic in (x, t), immutable after construction,
/// and safe to share across concurrent trajectory runs. One call to
/// evaluate() is one NFE; counting is done per run by the integration
/// drivers (and audited by CountingField), never globally.
class VelocityField {
  public:
    virtual ~VelocityField() = default;

    virtual int dim() const = 0;

    /// Drift at (x, t). Output dimension equals input dimension.
    /// Rejects dimension mismatches and non-finite inputs.
    virtual StateVec evaluate(const StateVec& x, double t) const = 0;

  protected:
    /// Shared input validation. Allows 1e-9 slack on the time bounds so that
    /// rounded step endpoints (t + dt) are not spuriously rejected.
    void check_input(const StateVec& x, double t) const {
        ensure_dim(x, dim(), "VelocityField::evaluate");
        ensure_finite(x, "VelocityField::evaluate");
        if (!(t >= -1e-9 && t <= 1.0 + 1e-9)) {
            throw std::invalid_argument("VelocityField::evaluate: t outside [0,1]: t=" +
                                        std::to_string(t));
        }
    }
};

/// Wraps a field and counts evaluations. Used by tests and instrumentation
/// to audit that a run's reported NFE equals the exact number of evaluate
/// calls. One wrapper per run; the counter is not synchronized.
class CountingField final : public VelocityField {
  public:
    explicit CountingField(const VelocityField& inner) : inner_(&inner) {}

    int dim() const override { return inner_->dim(); }

    StateVec evaluate(const StateVec& x, double t) const override {
        ++count_;
        return inner_->evaluate(x, t);
    }

    long long count() const { return count_; }
    void reset() { count_ = 0; }

  private:
    const VelocityField* inner_;
    mutable long long count_ = 0;
};

enum class AnalyticKind { Constant, LinearScalar, TimeOnly };

/// Reference fields with closed-form solutions, used as oracles by every
/// error measurement. Three kinds:
///   Constant(c):      v(x,t) = c,        exact X(t1) = x0 + c*(t1-t0)
///   LinearScalar(a):  v(x,t) = a*x,      exact X(t1) = x0*exp(a*(t1-t0))
///   TimeOnly(p):      v(x,t) = p(t),     exact X(t1) = x0 + P(t1) - P(t0)
/// with p a polynomial of degree <= 4 applied to every component.
///
/// The Lipschitz constant in x is stored, not estimated: |a| for
/// LinearScalar, 0 otherwise.
class AnalyticField final : public VelocityField {
  public:
    static AnalyticField constant(StateVec c);
    static AnalyticField linear_scalar(double a, int dim = 1);
    static AnalyticField time_poly(std::vector<double> coeffs, int dim = 1);

    int dim() const override { return dim_; }
    StateVec evaluate(const StateVec& x, double t) const override;

    /// Closed-form solution of the flow from (x0, t0) to t1.
    StateVec exact_solution(const StateVec& x0, double t0, double t1) const;

    AnalyticKind kind() const { return kind_; }
    double lipschitz() const { return lipschitz_; }

    /// Human-readable identifier, e.g. "linear(a=-1)".
    std::string describe() const;

  private:
    AnalyticField(AnalyticKind kind, int dim) : kind_(kind), dim_(dim) {}

    AnalyticKind kind_;
    int dim_;
    double lipschitz_ = 0.0;
    StateVec constant_;            // Constant
    double rate_ = 0.0;            // LinearScalar
    std::vector<double> coeffs_;   // TimeOnly, c0 + c1 t + ... (degree <= 4)
};

}  // namespace fireflow
