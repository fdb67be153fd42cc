#include "fireflow/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fireflow/parallel.hpp"
#include "fireflow/rng.hpp"
#include "json.hpp"

namespace fireflow {

namespace {

// Canonical sample-block size for batch reductions. Fixed (not tied to the
// worker count) so the summation order never changes.
constexpr int kBlock = 32;

constexpr int kCheckpointVersion = 1;

}  // namespace

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

Mlp Mlp::xavier_init(const std::vector<int>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output layer");
    for (int s : sizes) {
        if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
    }
    Mlp m;
    m.layer_sizes = sizes;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& v : w) v = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

void Mlp::validate() const {
    if (layer_sizes.size() < 2 || weights.size() != layer_sizes.size() - 1 ||
        biases.size() != weights.size()) {
        throw std::invalid_argument("Mlp: inconsistent layer bookkeeping");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const std::size_t rows = static_cast<std::size_t>(layer_sizes[l + 1]);
        const std::size_t cols = static_cast<std::size_t>(layer_sizes[l]);
        if (weights[l].size() != rows * cols || biases[l].size() != rows) {
            throw std::invalid_argument("Mlp: weight/bias shape mismatch at layer " +
                                        std::to_string(l));
        }
        for (double v : weights[l]) {
            if (!std::isfinite(v)) throw std::invalid_argument("Mlp: non-finite weight");
        }
        for (double v : biases[l]) {
            if (!std::isfinite(v)) throw std::invalid_argument("Mlp: non-finite bias");
        }
    }
}

Gradients Gradients::zeros_like(const Mlp& m) {
    Gradients g;
    g.weights.reserve(m.weights.size());
    g.biases.reserve(m.biases.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        g.weights.emplace_back(m.weights[l].size(), 0.0);
        g.biases.emplace_back(m.biases[l].size(), 0.0);
    }
    return g;
}

void Gradients::add(const Gradients& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
}

void Gradients::scale(double s) {
    for (auto& w : weights)
        for (double& v : w) v *= s;
    for (auto& b : biases)
        for (double& v : b) v *= s;
}

namespace {

// Layer activations for one sample; index 0 is the input (x, t).
struct ForwardPass {
    std::vector<std::vector<double>> act;
};

void forward_into(const Mlp& m, const StateVec& x, double t, ForwardPass& fp) {
    const int depth = m.layers();
    fp.act.resize(depth + 1);
    auto& input = fp.act[0];
    input.resize(x.size() + 1);
    for (std::size_t i = 0; i < x.size(); ++i) input[i] = x[i];
    input.back() = t;

    for (int l = 0; l < depth; ++l) {
        const int rows = m.layer_sizes[l + 1];
        const int cols = m.layer_sizes[l];
        const std::vector<double>& w = m.weights[l];
        const std::vector<double>& b = m.biases[l];
        const std::vector<double>& in = fp.act[l];
        std::vector<double>& out = fp.act[l + 1];
        out.resize(rows);
        const bool hidden = l + 1 < depth;
        for (int r = 0; r < rows; ++r) {
            double z = b[r];
            const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) z += wr[c] * in[c];
            out[r] = hidden ? std::tanh(z) : z;
        }
    }
}

// Backprop of d(loss)/d(output) = delta through the network, accumulating
// parameter gradients for one sample into g.
void backward_accumulate(const Mlp& m, const ForwardPass& fp, std::vector<double> delta,
                         Gradients& g) {
    const int depth = m.layers();
    for (int l = depth - 1; l >= 0; --l) {
        const int rows = m.layer_sizes[l + 1];
        const int cols = m.layer_sizes[l];
        const std::vector<double>& in = fp.act[l];
        std::vector<double>& gw = g.weights[l];
        std::vector<double>& gb = g.biases[l];
        for (int r = 0; r < rows; ++r) {
            const double d = delta[r];
            gb[r] += d;
            double* gwr = gw.data() + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) gwr[c] += d * in[c];
        }
        if (l == 0) break;
        const std::vector<double>& w = m.weights[l];
        std::vector<double> prev(cols, 0.0);
        for (int r = 0; r < rows; ++r) {
            const double d = delta[r];
            const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) prev[c] += d * wr[c];
        }
        // tanh' through the stored activation: 1 - a^2
        const std::vector<double>& a = fp.act[l];
        for (int c = 0; c < cols; ++c) prev[c] *= (1.0 - a[c] * a[c]);
        delta = std::move(prev);
    }
}

// Loss and gradient for one contiguous sample block, in sample order.
double block_gradient(const Mlp& m, const Batch& batch, int begin, int end, Gradients& g) {
    ForwardPass fp;
    double loss = 0.0;
    const double inv_b = 1.0 / batch.size();
    const int out_dim = m.output_dim();
    std::vector<double> delta(out_dim);
    for (int b = begin; b < end; ++b) {
        forward_into(m, batch.x[b], batch.t[b], fp);
        const std::vector<double>& out = fp.act.back();
        double sample = 0.0;
        for (int k = 0; k < out_dim; ++k) {
            const double r = out[k] - batch.target[b][k];
            sample += r * r;
            delta[k] = 2.0 * inv_b * r;
        }
        loss += sample;
        backward_accumulate(m, fp, delta, g);
    }
    return loss;
}

double gradient_impl(const Mlp& m, const Batch& batch, Gradients& out, bool parallel) {
    m.validate();
    if (batch.size() == 0) throw std::invalid_argument("mlp_gradient: empty batch");
    if (static_cast<int>(batch.t.size()) != batch.size() ||
        static_cast<int>(batch.target.size()) != batch.size()) {
        throw std::invalid_argument("mlp_gradient: ragged batch");
    }

    const int n = batch.size();
    const int blocks = (n + kBlock - 1) / kBlock;
    std::vector<Gradients> partial(blocks);
    std::vector<double> partial_loss(blocks, 0.0);

    auto body = [&](int blk) {
        partial[blk] = Gradients::zeros_like(m);
        const int begin = blk * kBlock;
        const int end = begin + kBlock < n ? begin + kBlock : n;
        partial_loss[blk] = block_gradient(m, batch, begin, end, partial[blk]);
    };
    if (parallel) {
        parallel_for(blocks, body);
    } else {
        serial_for(blocks, body);
    }

    out = std::move(partial[0]);
    double loss = partial_loss[0];
    for (int blk = 1; blk < blocks; ++blk) {
        out.add(partial[blk]);
        loss += partial_loss[blk];
    }
    return loss / n;
}

}  // namespace

StateVec mlp_forward(const Mlp& m, const StateVec& x, double t) {
    m.validate();
    if (static_cast<int>(x.size()) + 1 != m.input_dim()) {
        throw std::invalid_argument("mlp_forward: input dim mismatch");
    }
    ensure_finite(x, "mlp_forward");
    ForwardPass fp;
    forward_into(m, x, t, fp);
    return fp.act.back();
}

double mlp_gradient(const Mlp& m, const Batch& batch, Gradients& out) {
    return gradient_impl(m, batch, out, true);
}

double mlp_gradient_serial(const Mlp& m, const Batch& batch, Gradients& out) {
    return gradient_impl(m, batch, out, false);
}

double mlp_loss(const Mlp& m, const Batch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("mlp_loss: empty batch");
    const int n = batch.size();
    const int blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(blocks, [&](int blk) {
        ForwardPass fp;
        const int begin = blk * kBlock;
        const int end = begin + kBlock < n ? begin + kBlock : n;
        double acc = 0.0;
        for (int b = begin; b < end; ++b) {
            forward_into(m, batch.x[b], batch.t[b], fp);
            const std::vector<double>& out = fp.act.back();
            for (std::size_t k = 0; k < out.size(); ++k) {
                const double r = out[k] - batch.target[b][k];
                acc += r * r;
            }
        }
        partial[blk] = acc;
    });
    double loss = 0.0;
    for (double p : partial) loss += p;
    return loss / n;
}

AdamState AdamState::init(const Mlp& m, double lr) {
    AdamState s;
    s.lr = lr;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        s.m_w.emplace_back(m.weights[l].size(), 0.0);
        s.v_w.emplace_back(m.weights[l].size(), 0.0);
        s.m_b.emplace_back(m.biases[l].size(), 0.0);
        s.v_b.emplace_back(m.biases[l].size(), 0.0);
    }
    return s;
}

void adam_step(Mlp& m, const Gradients& g, AdamState& opt) {
    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    auto update = [&](std::vector<double>& p, const std::vector<double>& grad,
                      std::vector<double>& mo, std::vector<double>& vo) {
        if (p.size() != grad.size()) throw std::invalid_argument("adam_step: shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            mo[i] = opt.beta1 * mo[i] + (1.0 - opt.beta1) * grad[i];
            vo[i] = opt.beta2 * vo[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
            const double mhat = mo[i] / bc1;
            const double vhat = vo[i] / bc2;
            p[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    };
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        update(m.weights[l], g.weights[l], opt.m_w[l], opt.v_w[l]);
        update(m.biases[l], g.biases[l], opt.m_b[l], opt.v_b[l]);
    }
}

std::string checkpoint_to_json(const Mlp& m) {
    m.validate();
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["layer_sizes"] = m.layer_sizes;
    j["activation"] = "tanh";
    j["weights"] = m.weights;
    j["biases"] = m.biases;
    return j.dump(2);
}

Mlp checkpoint_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    if (!j.contains("format_version") || j["format_version"].get<int>() != kCheckpointVersion) {
        throw std::invalid_argument("checkpoint: unknown format_version");
    }
    if (j.value("activation", "") != "tanh") {
        throw std::invalid_argument("checkpoint: unsupported activation");
    }
    Mlp m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    m.validate();
    return m;
}

void save_checkpoint(const Mlp& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out << checkpoint_to_json(m) << "\n";
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

MlpField::MlpField(Mlp net) : net_(std::move(net)) {
    net_.validate();
    if (net_.input_dim() != net_.output_dim() + 1) {
        throw std::invalid_argument("MlpField: input dim must be output dim + 1 (x concat t)");
    }
}

StateVec MlpField::evaluate(const StateVec& x, double t) const {
    check_input(x, t);
    return mlp_forward(net_, x, t);
}

}  // namespace fireflow
