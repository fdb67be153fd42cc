#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fireflow/field.hpp"
#include "fireflow/state.hpp"

namespace fireflow {

/// Weights and biases of the learned drift network v_theta(x, t).
/// Input is the concatenation (x, t) of size d+1, output has size d.
/// Hidden layers use tanh, the output layer is linear. All math is f64.
struct Mlp {
    std::vector<int> layer_sizes;               // {d+1, h1, ..., d}
    std::vector<std::vector<double>> weights;   // per layer, row-major [out][in]
    std::vector<std::vector<double>> biases;    // per layer

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int layers() const { return static_cast<int>(weights.size()); }
    std::size_t parameter_count() const;

    /// Xavier-uniform weights from a seeded stream, zero biases.
    static Mlp xavier_init(const std::vector<int>& sizes, std::uint64_t seed);

    void validate() const;  // shape consistency + finite parameters
};

/// Parameter-shaped gradient buffers.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const Mlp& m);
    void add(const Gradients& other);  // fixed-order elementwise accumulate
    void scale(double s);
};

/// Network output for input (x, t). Deterministic; smooth in both arguments.
StateVec mlp_forward(const Mlp& m, const StateVec& x, double t);

/// A regression batch: inputs (x_b, t_b) and targets, mean-squared-error
/// objective (1/B) sum_b ||target_b - f(x_b, t_b)||^2.
struct Batch {
    std::vector<StateVec> x;
    std::vector<double> t;
    std::vector<StateVec> target;

    int size() const { return static_cast<int>(x.size()); }
};

/// Exact reverse-mode gradient of the batch MSE. Returns the loss value.
///
/// Accumulation walks fixed-size sample blocks and reduces block sums in
/// index order, so the result is bitwise identical for any worker count.
/// mlp_gradient runs blocks in parallel; mlp_gradient_serial is the
/// reference twin with identical arithmetic.
double mlp_gradient(const Mlp& m, const Batch& batch, Gradients& out);
double mlp_gradient_serial(const Mlp& m, const Batch& batch, Gradients& out);

/// Loss only, same blocked summation order as the gradient path.
double mlp_loss(const Mlp& m, const Batch& batch);

/// Adam moment accumulators. Shapes mirror the parameters.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

    static AdamState init(const Mlp& m, double lr);
};

/// Standard bias-corrected Adam update, in place. Deterministic.
void adam_step(Mlp& m, const Gradients& g, AdamState& opt);

/// Checkpoint JSON: format-version field, layer sizes, activation name,
/// row-major weight and bias arrays. Loading rejects unknown versions.
std::string checkpoint_to_json(const Mlp& m);
Mlp checkpoint_from_json(const std::string& json_text);
void save_checkpoint(const Mlp& m, const std::string& path);
Mlp load_checkpoint(const std::string& path);

/// Adapter exposing a trained network as a VelocityField.
class MlpField final : public VelocityField {
  public:
    explicit MlpField(Mlp net);

    int dim() const override { return net_.output_dim(); }
    StateVec evaluate(const StateVec& x, double t) const override;
    const Mlp& net() const { return net_; }

  private:
    Mlp net_;
};

}  // namespace fireflow
