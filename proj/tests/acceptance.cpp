// Acceptance suite: one timed pass/fail line per criterion, nonzero exit if
// any fail. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "fireflow/config.hpp"
#include "fireflow/field.hpp"
#include "fireflow/gmm.hpp"
#include "fireflow/metrics.hpp"
#include "fireflow/mlp.hpp"
#include "fireflow/rng.hpp"
#include "fireflow/solvers.hpp"
#include "fireflow/train.hpp"

using namespace fireflow;

namespace {

int failures = 0;

class Criterion {
  public:
    explicit Criterion(int number, std::string title)
        : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

    void expect(bool ok, const std::string& detail) {
        if (!ok) {
            pass_ = false;
            problems_ += (problems_.empty() ? "" : "; ") + detail;
        } else {
            notes_ += (notes_.empty() ? "" : "; ") + detail;
        }
    }

    ~Criterion() {
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::printf("criterion %d %s  %s: %s  [%.1f s]\n", number_, pass_ ? "PASS" : "FAIL",
                    title_.c_str(), pass_ ? notes_.c_str() : problems_.c_str(), sec);
        std::fflush(stdout);
        if (!pass_) ++failures;
    }

  private:
    int number_;
    std::string title_;
    std::string notes_, problems_;
    bool pass_ = true;
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// Canonical training setups. The stock pair is the library default; the fan
// pair (close sources splitting into a wide fan of tight modes) is the
// straightness experiment preset, where solver differences at NFE=20 are
// measurable.
const char* kFanPi0 = "0.5@-8,1.5@0.15,0,0.15;0.5@-8,-1.5@0.15,0,0.15";
const char* kFanPi1 =
    "0.25@8,-9@0.15,0,0.15;0.25@8,-3@0.15,0,0.15;0.25@8,3@0.15,0,0.15;0.25@8,9@0.15,0,0.15";

TrainConfig canonical_config(std::uint64_t seed, int iters) {
    TrainConfig cfg;
    cfg.dim = 2;
    cfg.hidden = {64, 64, 64};
    cfg.batch_size = 128;
    cfg.iters = iters;
    cfg.lr = 1e-3;
    cfg.seed = seed;
    return cfg;
}

double mean_straightness(const VelocityField& field, const std::vector<StateVec>& starts,
                         SolverKind kind, int nfe_budget) {
    const int steps = kind == SolverKind::Euler      ? nfe_budget
                      : kind == SolverKind::FireFlow ? nfe_budget - 1
                                                     : nfe_budget / 2;
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, steps);
    double acc = 0.0;
    int defined = 0;
    for (const StateVec& x0 : starts) {
        const Trajectory t = integrate(field, x0, grid, kind);
        const auto s = straightness(t);
        if (s) {
            acc += *s;
            ++defined;
        }
    }
    return defined > 0 ? acc / defined : 0.0;
}

void criterion_1_nfe_accounting() {
    Criterion c(1, "NFE accounting (exact)");
    const auto lin = AnalyticField::linear_scalar(-1.0);

    {
        CountingField counted(lin);
        const Trajectory gen =
            integrate(counted, {1.0}, TimeGrid::uniform(0.0, 1.0, 10), SolverKind::FireFlow);
        c.expect(gen.nfe_total == 11 && counted.count() == 11,
                 fmt("generation N=10 -> NFE %lld", gen.nfe_total));
    }
    for (int n : {8, 15}) {
        CountingField counted(lin);
        const TimeGrid down = TimeGrid::uniform(1.0, 0.0, n);
        const Trajectory inv = invert(counted, {1.0}, down);
        const Trajectory rec = reconstruct(counted, inv.endpoint(), down.reversed());
        const long long total = inv.nfe_total + rec.nfe_total;
        c.expect(total == 2 * n + 2 && counted.count() == total,
                 fmt("invert+reconstruct N=%d -> NFE %lld", n, total));
    }
    for (int n : {1, 7, 64}) {
        CountingField counted(lin);
        const Trajectory ff =
            integrate(counted, {1.0}, TimeGrid::uniform(0.0, 1.0, n), SolverKind::FireFlow);
        c.expect(ff.nfe_total == n + 1 && counted.count() == n + 1,
                 fmt("N=%d -> N+1", n));
    }
}

void criterion_2_order_recovery() {
    Criterion c(2, "order recovery");
    const auto lin = AnalyticField::linear_scalar(-1.0);
    const StateVec x0{1.0};
    const StateVec exact = lin.exact_solution(x0, 0.0, 1.0);
    for (SolverKind kind :
         {SolverKind::Euler, SolverKind::Midpoint, SolverKind::Heun, SolverKind::FireFlow}) {
        ErrorSeries s;
        s.solver = kind;
        for (int n : {4, 8, 16, 32, 64, 128}) {
            const Trajectory t = integrate(lin, x0, TimeGrid::uniform(0.0, 1.0, n), kind);
            s.dt.push_back(1.0 / n);
            s.error.push_back(l2_distance(t.endpoint(), exact));
        }
        const OrderEstimate e = estimate_order(s);
        const double target = kind == SolverKind::Euler ? 1.0 : 2.0;
        const double tol = kind == SolverKind::Euler ? 0.15 : 0.2;
        c.expect(!e.degenerate && std::abs(e.slope - target) <= tol && e.r_squared >= 0.98,
                 fmt("%s slope %.3f r2 %.4f", solver_name(kind), e.slope, e.r_squared));
    }
}

// Trains the canonical model (library-default mixtures and train config,
// seed 1024) inside the criterion's own timer and returns it for reuse.
Mlp criterion_3_velocity_reuse() {
    Criterion c(3, "velocity-reuse bound");
    const TrainResult canonical = train_rectified_flow(
        canonical_config(1024, 3000), IndependentCoupling(default_pi0(), default_pi1()));
    {
        const auto lin = AnalyticField::linear_scalar(-1.0);
        ErrorSeries s;
        for (int n : {4, 8, 16, 32, 64, 128}) {
            const auto samples =
                velocity_reuse_error(lin, {1.0}, TimeGrid::uniform(0.0, 1.0, n));
            double worst = 0.0;
            for (const auto& v : samples) worst = std::max(worst, v.error);
            s.dt.push_back(1.0 / n);
            s.error.push_back(worst);
        }
        const OrderEstimate e = estimate_order(s);
        c.expect(!e.degenerate && std::abs(e.slope - 1.0) <= 0.3,
                 fmt("analytic slope %.3f", e.slope));
    }
    {
        const MlpField field(canonical.net);
        const auto data = default_pi1().sample_n(100, 20250116);
        auto mean_reuse = [&](int steps) {
            const TimeGrid grid = TimeGrid::uniform(1.0, 0.0, steps);
            double acc = 0.0;
            long long count = 0;
            for (const StateVec& x : data) {
                for (const auto& v : velocity_reuse_error(field, x, grid)) {
                    acc += v.error;
                    ++count;
                }
            }
            return acc / count;
        };
        const double ratio = mean_reuse(10) / mean_reuse(20);
        c.expect(ratio >= 1.4 && ratio <= 2.8, fmt("trained halving ratio %.2f", ratio));
    }
    return canonical.net;
}

void criterion_4_perturbation() {
    Criterion c(4, "perturbation propagation");
    {
        const auto contractive = AnalyticField::linear_scalar(1.0);  // reverse drift -x
        const PerturbationReport rep = perturbation_propagation(contractive, {2.0}, {0.1});
        const double expected = 0.1 * std::exp(-1.0);  // 0.03679
        c.expect(std::abs(rep.delta_0 - expected) <= 0.01 * expected && rep.satisfied,
                 fmt("contractive delta_0 %.5f (expect %.5f)", rep.delta_0, expected));
    }
    {
        const auto expansive = AnalyticField::linear_scalar(-1.0);  // reverse drift +x
        const PerturbationReport rep = perturbation_propagation(expansive, {1.0}, {0.1});
        c.expect(!rep.satisfied && rep.delta_0 > rep.bound,
                 fmt("expansive violation reported: delta_0 %.4f > bound %.4f", rep.delta_0,
                     rep.bound));
    }
}

void criterion_5_nfe_parity() {
    Criterion c(5, "NFE-parity reconstruction superiority");
    const GaussianMixture pi0 = default_pi0();
    const GaussianMixture pi1 = default_pi1();
    for (std::uint64_t seed : {1024ull, 1025ull, 1026ull}) {
        const TrainConfig cfg = canonical_config(seed, 3000);
        const TrainResult rect1 = train_rectified_flow(cfg, IndependentCoupling(pi0, pi1));
        const ReflowResult rect2 = reflow(rect1.net, pi0, cfg, 4096, 100);
        const MlpField field(rect2.retrained.net);
        const auto data = pi1.sample_n(1000, derive_seed(seed, 0x65766131ull));
        const ReconstructionStats ff = round_trip_error(field, data, 8, SolverKind::FireFlow);
        const ReconstructionStats eu = round_trip_error(field, data, 9, SolverKind::Euler);
        c.expect(ff.nfe_per_sample == 18 && eu.nfe_per_sample == 18 &&
                     ff.mean_err < eu.mean_err && ff.diverged == 0 && eu.diverged == 0,
                 fmt("seed %llu: fireflow %.5f < euler %.5f @ NFE 18",
                     static_cast<unsigned long long>(seed), ff.mean_err, eu.mean_err));
    }
}

void criterion_6_straightness() {
    Criterion c(6, "straightness ordering");
    const GaussianMixture pi0 = parse_mixture(kFanPi0);
    const GaussianMixture pi1 = parse_mixture(kFanPi1);
    const TrainConfig cfg = canonical_config(1024, 6000);
    const TrainResult rect1 = train_rectified_flow(cfg, IndependentCoupling(pi0, pi1));
    const ReflowResult rect2 = reflow(rect1.net, pi0, cfg, 4096, 100);
    const MlpField field1(rect1.net);
    const MlpField field2(rect2.retrained.net);
    const auto starts = pi0.sample_n(1000, derive_seed(1024, 0x73747261ull));

    const double ff2 = mean_straightness(field2, starts, SolverKind::FireFlow, 20);
    const double eu2 = mean_straightness(field2, starts, SolverKind::Euler, 20);
    c.expect(ff2 <= eu2, fmt("2-rectified: fireflow %.5f <= euler %.5f", ff2, eu2));

    for (SolverKind kind :
         {SolverKind::Euler, SolverKind::Midpoint, SolverKind::Heun, SolverKind::FireFlow}) {
        const double s1 = mean_straightness(field1, starts, kind, 20);
        const double s2 = kind == SolverKind::FireFlow ? ff2
                          : kind == SolverKind::Euler  ? eu2
                                                       : mean_straightness(field2, starts, kind, 20);
        c.expect(s2 <= s1, fmt("%s: 2-rect %.5f <= 1-rect %.5f", solver_name(kind), s2, s1));
    }
}

void criterion_7_constant_exactness() {
    Criterion c(7, "constant-drift exactness");
    const auto con = AnalyticField::constant({1.0, -2.0});
    const StateVec x0{0.25, 0.5};
    double worst = 0.0;
    for (int n : {1, 5, 20}) {
        for (const TimeGrid& grid : {TimeGrid::uniform(0.0, 1.0, n), TimeGrid::uniform(1.0, 0.0, n)}) {
            const StateVec exact = con.exact_solution(x0, grid.point(0), grid.point(n));
            for (SolverKind kind : {SolverKind::Euler, SolverKind::Midpoint, SolverKind::Heun,
                                    SolverKind::FireFlow}) {
                worst = std::max(worst,
                                 l2_distance(integrate(con, x0, grid, kind).endpoint(), exact));
            }
        }
    }
    c.expect(worst <= 1e-12, fmt("all solvers, worst endpoint error %.2e", worst));

    const TimeGrid down = TimeGrid::uniform(1.0, 0.0, 8);
    const Trajectory inv = invert(con, x0, down);
    const Trajectory rec = reconstruct(con, inv.endpoint(), down.reversed());
    const double rt = l2_distance(rec.endpoint(), x0);
    c.expect(rt <= 1e-12, fmt("round-trip error %.2e", rt));
}

void criterion_8_gradients() {
    Criterion c(8, "gradient correctness and training determinism");
    double worst_rel = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Mlp m = Mlp::xavier_init({3, 8, 8, 2}, seed);
        Rng rng(seed * 1000 + 7);
        Batch batch;
        for (int i = 0; i < 8; ++i) {
            batch.x.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
            batch.t.push_back(rng.uniform());
            batch.target.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        }
        Gradients g;
        mlp_gradient(m, batch, g);
        const double h = 1e-5;
        for (int layer = 0; layer < m.layers(); ++layer) {
            for (std::size_t idx = 0; idx < m.weights[layer].size(); idx += 7) {
                Mlp lo = m, hi = m;
                lo.weights[layer][idx] -= h;
                hi.weights[layer][idx] += h;
                const double fd = (mlp_loss(hi, batch) - mlp_loss(lo, batch)) / (2.0 * h);
                const double ad = g.weights[layer][idx];
                worst_rel = std::max(
                    worst_rel, std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-6}));
            }
        }
    }
    c.expect(worst_rel <= 1e-4, fmt("worst FD relative error %.2e over 20 seeds", worst_rel));

    TrainConfig cfg = canonical_config(42, 150);
    cfg.batch_size = 64;
    const IndependentCoupling src(default_pi0(), default_pi1());
    const TrainResult a = train_rectified_flow(cfg, src);
    const TrainResult b = train_rectified_flow(cfg, src);
    c.expect(checkpoint_to_json(a.net) == checkpoint_to_json(b.net),
             "identical seeds give bit-identical checkpoints");
}

void criterion_9_distribution_transport(const Mlp& canonical_net) {
    Criterion c(9, "distribution transport at equal NFE");
    const MlpField field(canonical_net);
    const GaussianMixture pi0 = default_pi0();
    const GaussianMixture pi1 = default_pi1();
    for (std::uint64_t eval_seed : {11ull, 12ull, 13ull}) {
        const auto starts = pi0.sample_n(2000, derive_seed(eval_seed, 0x73746172ull));
        const auto fresh = pi1.sample_n(2000, derive_seed(eval_seed, 0x66726573ull));
        auto generate = [&](SolverKind kind, int steps) {
            const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, steps);
            std::vector<StateVec> out(starts.size());
            for (std::size_t i = 0; i < starts.size(); ++i) {
                out[i] = integrate(field, starts[i], grid, kind).endpoint();
            }
            return out;
        };
        const double ed_ff = energy_distance(generate(SolverKind::FireFlow, 19), fresh);
        const double ed_eu = energy_distance(generate(SolverKind::Euler, 20), fresh);
        c.expect(ed_ff <= ed_eu, fmt("seed %llu: fireflow %.4f <= euler %.4f @ NFE 20",
                                     static_cast<unsigned long long>(eval_seed), ed_ff, ed_eu));
    }
}

}  // namespace

int main() {
    std::printf("fireflow acceptance suite\n");

    criterion_1_nfe_accounting();
    criterion_2_order_recovery();
    const Mlp canonical_net = criterion_3_velocity_reuse();  // shared with criterion 9
    criterion_4_perturbation();
    criterion_5_nfe_parity();
    criterion_6_straightness();
    criterion_7_constant_exactness();
    criterion_8_gradients();
    criterion_9_distribution_transport(canonical_net);

    if (failures == 0) {
        std::printf("all 9 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", failures);
    return 1;
}
