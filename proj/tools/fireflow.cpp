// Command-line harness around the fireflow library: training runs,
// convergence/reconstruction/straightness experiments, perturbation and
// energy-distance reports. Every run is reproducible from its echoed config
// and master seed; CSVs are the record, SVGs are conveniences.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fireflow/config.hpp"
#include "fireflow/csv.hpp"
#include "fireflow/field.hpp"
#include "fireflow/gmm.hpp"
#include "fireflow/grid.hpp"
#include "fireflow/metrics.hpp"
#include "fireflow/mlp.hpp"
#include "fireflow/parallel.hpp"
#include "fireflow/rng.hpp"
#include "fireflow/solvers.hpp"
#include "fireflow/svg.hpp"
#include "fireflow/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fireflow;

namespace {

const char* kDefaultPi0 = "0.5@-8,3;0.5@-8,-3";
const char* kDefaultPi1 = "0.3333333333333333@8,-4;0.3333333333333333@8,0;0.3333333333333334@8,4";

// ---------------------------------------------------------------------------
// option plumbing: defaults < config file < explicit CLI flags
// ---------------------------------------------------------------------------

class OptionSet {
  public:
    void bind(CLI::Option* opt, const std::string& key,
              std::function<void(const std::string&)> set, std::function<std::string()> get) {
        entries_.push_back({opt, key, std::move(set), std::move(get)});
    }

    void apply_config(const KeyValueConfig& cfg) {
        for (auto& e : entries_) {
            if (e.opt->count() == 0 && cfg.has(e.key)) e.set(cfg.get(e.key));
        }
    }

    KeyValueConfig effective() const {
        KeyValueConfig out;
        for (const auto& e : entries_) out.set(e.key, e.get());
        return out;
    }

  private:
    struct Entry {
        CLI::Option* opt;
        std::string key;
        std::function<void(const std::string&)> set;
        std::function<std::string()> get;
    };
    std::vector<Entry> entries_;
};

void bind_str(OptionSet& set, CLI::Option* opt, const std::string& key, std::string& target) {
    set.bind(opt, key, [&target](const std::string& v) { target = v; },
             [&target] { return target; });
}

void bind_int(OptionSet& set, CLI::Option* opt, const std::string& key, int& target) {
    set.bind(opt, key, [&target](const std::string& v) { target = std::stoi(v); },
             [&target] { return std::to_string(target); });
}

void bind_u64(OptionSet& set, CLI::Option* opt, const std::string& key, std::uint64_t& target) {
    set.bind(opt, key, [&target](const std::string& v) { target = std::stoull(v); },
             [&target] { return std::to_string(target); });
}

void bind_double(OptionSet& set, CLI::Option* opt, const std::string& key, double& target) {
    set.bind(opt, key, [&target](const std::string& v) { target = std::stod(v); },
             [&target] { return g17(target); });
}

void bind_flag(OptionSet& set, CLI::Option* opt, const std::string& key, bool& target) {
    set.bind(opt, key,
             [&target](const std::string& v) { target = (v == "1" || v == "true" || v == "yes"); },
             [&target] { return target ? std::string("true") : std::string("false"); });
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) throw std::invalid_argument(what + ": empty entry");
        out.push_back(std::stoi(cur));
        cur.clear();
    };
    for (char c : s) {
        if (c == ',') {
            flush();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    flush();
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) throw std::invalid_argument(what + ": empty entry");
        out.push_back(std::stod(cur));
        cur.clear();
    };
    for (char c : s) {
        if (c == ',') {
            flush();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------
// run context: output directory, config echo, report assembly
// ---------------------------------------------------------------------------

class RunContext {
  public:
    RunContext(const std::string& command, const std::string& out_dir, const OptionSet& opts)
        : out_(out_dir), start_(std::chrono::steady_clock::now()) {
        if (out_.empty()) throw std::invalid_argument("--out is required");
        fs::create_directories(out_);
        KeyValueConfig echo = opts.effective();
        echo.set("command", command);
        std::ofstream cfg(out_ / "config.txt", std::ios::binary);
        cfg << echo.dump();
        if (!cfg) throw std::runtime_error("cannot write config echo");
        summary_["command"] = command;
    }

    fs::path path(const std::string& name) const { return out_ / name; }

    std::string artifact(const std::string& name) {
        artifacts_.push_back((out_ / name).string());
        return (out_ / name).string();
    }

    json& summary() { return summary_; }

    void finish(long long nfe_total) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        summary_["artifacts"] = artifacts_;
        summary_["nfe_total"] = nfe_total;
        summary_["wall_clock_sec"] = wall;
        std::ofstream out(out_ / "summary.json", std::ios::binary);
        out << summary_.dump(2) << "\n";
        if (!out) throw std::runtime_error("cannot write summary.json");
        std::printf("%s: wrote %zu artifacts to %s (%.2f s)\n",
                    summary_["command"].get<std::string>().c_str(), artifacts_.size() + 2,
                    out_.string().c_str(), wall);
    }

  private:
    fs::path out_;
    std::chrono::steady_clock::time_point start_;
    json summary_;
    std::vector<std::string> artifacts_;
};

// Resolves either an analytic --field or a --checkpoint into a field.
struct FieldChoice {
    std::unique_ptr<VelocityField> field;
    bool is_model = false;
    std::string id;
};

FieldChoice resolve_field(const std::string& field_spec, const std::string& checkpoint, int dim) {
    FieldChoice out;
    if (!checkpoint.empty()) {
        out.field = std::make_unique<MlpField>(load_checkpoint(checkpoint));
        out.is_model = true;
        out.id = "checkpoint:" + checkpoint;
        return out;
    }
    auto f = parse_field(field_spec, dim);
    out.id = f->describe();
    out.field = std::move(f);
    return out;
}

// Evaluation points at the data end of the flow: pi1 draws for trained
// models, a seeded unit-spread cloud for analytic fields of any dimension.
std::vector<StateVec> data_samples(const FieldChoice& choice, const std::string& pi1_spec, int n,
                                   std::uint64_t seed) {
    if (choice.is_model) return parse_mixture(pi1_spec).sample_n(n, seed);
    const int d = choice.field->dim();
    std::vector<StateVec> out(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, i));
        StateVec x(d);
        for (int k = 0; k < d; ++k) x[k] = 1.0 + 0.5 * rng.normal();
        out[i] = x;
    }
    return out;
}

std::vector<SolverKind> solver_selection(const std::string& solver) {
    if (solver.empty() || solver == "all") {
        return {SolverKind::Euler, SolverKind::Midpoint, SolverKind::Heun, SolverKind::FireFlow};
    }
    return {solver_from_name(solver)};
}

int steps_for_nfe_budget(SolverKind kind, int nfe) {
    switch (kind) {
        case SolverKind::Euler:
            if (nfe < 1) throw std::invalid_argument("NFE budget too small for euler");
            return nfe;
        case SolverKind::Midpoint:
        case SolverKind::Heun:
            if (nfe < 2 || nfe % 2 != 0) {
                throw std::invalid_argument("NFE budget must be even and >= 2 for " +
                                            std::string(solver_name(kind)));
            }
            return nfe / 2;
        case SolverKind::FireFlow:
            if (nfe < 2) throw std::invalid_argument("NFE budget too small for fireflow");
            return nfe - 1;
    }
    throw std::logic_error("unreachable");
}

const char* solver_color(SolverKind k) {
    switch (k) {
        case SolverKind::Euler: return "#d62728";
        case SolverKind::Midpoint: return "#2ca02c";
        case SolverKind::Heun: return "#9467bd";
        case SolverKind::FireFlow: return "#1f77b4";
    }
    return "#000000";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainCmd {
    std::string config_path, out_dir;
    std::string pi0 = kDefaultPi0;
    std::string pi1 = kDefaultPi1;
    std::string hidden = "64,64,64";
    int iters = 3000;
    int batch = 128;
    double lr = 1e-3;
    std::uint64_t seed = 1024;
    bool run_reflow = false;
    int reflow_pairs = 4096;
    int reflow_steps = 100;
    int workers = 0;
    OptionSet opts;
};

void write_loss_csv(const std::vector<double>& curve, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"iter", "loss"});
    for (std::size_t i = 0; i < curve.size(); ++i) csv.row({std::to_string(i), g17(curve[i])});
    csv.close();
}

void run_train(TrainCmd& c) {
    set_worker_count(c.workers);
    RunContext ctx("train", c.out_dir, c.opts);

    TrainConfig cfg;
    cfg.dim = 2;
    cfg.hidden = parse_int_list(c.hidden, "hidden");
    cfg.batch_size = c.batch;
    cfg.iters = c.iters;
    cfg.lr = c.lr;
    cfg.seed = c.seed;

    const GaussianMixture pi0 = parse_mixture(c.pi0);
    const GaussianMixture pi1 = parse_mixture(c.pi1);

    const TrainResult r1 = train_rectified_flow(cfg, IndependentCoupling(pi0, pi1));
    save_checkpoint(r1.net, ctx.artifact("checkpoint.json"));
    write_loss_csv(r1.loss_curve, ctx.artifact("loss.csv"));
    ctx.summary()["initial_loss"] = r1.loss_curve.front();
    ctx.summary()["final_loss"] = r1.loss_curve.back();

    // Empirical constant-velocity statistic along sampled paths; reported,
    // never asserted.
    {
        const int n_paths = 200;
        const MlpField field(r1.net);
        const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 20);
        const auto starts = pi0.sample_n(n_paths, derive_seed(c.seed, 0x76737461ull));
        CsvWriter csv(ctx.artifact("vstats.csv"));
        csv.row({"sample", "velocity_variation"});
        double mean = 0.0;
        for (int i = 0; i < n_paths; ++i) {
            const Trajectory traj = integrate(field, starts[i], grid, SolverKind::Euler);
            double acc = 0.0;
            StateVec prev = field.evaluate(traj.states[0], traj.times[0]);
            for (int s = 1; s <= traj.steps(); ++s) {
                StateVec cur = field.evaluate(traj.states[s], traj.times[s]);
                acc += l2_distance(cur, prev);
                prev = std::move(cur);
            }
            const double v = acc / traj.steps();
            csv.row({std::to_string(i), g17(v)});
            mean += v;
        }
        csv.close();
        ctx.summary()["velocity_variation_mean"] = mean / n_paths;
    }

    long long nfe = 0;
    if (c.run_reflow) {
        const ReflowResult rf = reflow(r1.net, pi0, cfg, c.reflow_pairs, c.reflow_steps);
        nfe += static_cast<long long>(c.reflow_pairs) * (c.reflow_steps + 1);
        write_coupling_csv(rf.coupling, ctx.artifact("coupling.csv"));
        save_checkpoint(rf.retrained.net, ctx.artifact("checkpoint_reflow.json"));
        write_loss_csv(rf.retrained.loss_curve, ctx.artifact("loss_reflow.csv"));
        ctx.summary()["reflow_final_loss"] = rf.retrained.loss_curve.back();
        ctx.summary()["reflow_pairs"] = c.reflow_pairs;
    }

    {
        SvgPlotSpec spec;
        spec.title = "training loss";
        spec.xlabel = "iteration";
        spec.ylabel = "loss";
        spec.log_y = true;
        SvgSeries s;
        s.label = "loss";
        for (std::size_t i = 0; i < r1.loss_curve.size(); ++i) {
            s.x.push_back(static_cast<double>(i));
            s.y.push_back(r1.loss_curve[i]);
        }
        write_svg_plot(spec, {s}, ctx.artifact("loss.svg"));
    }
    ctx.finish(nfe);
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

struct ConvergenceCmd {
    std::string config_path, out_dir;
    std::string field_spec = "linear:-1";
    std::string checkpoint;
    std::string solver;  // empty = all
    std::string schedule = "uniform";
    std::string ladder = "4,8,16,32,64,128";
    std::string x0 = "1";
    std::string pi0 = kDefaultPi0;
    int dim = 1;
    int samples = 16;
    std::uint64_t seed = 1024;
    int workers = 0;
    OptionSet opts;
};

void run_convergence(ConvergenceCmd& c) {
    set_worker_count(c.workers);
    RunContext ctx("convergence", c.out_dir, c.opts);

    const FieldChoice choice = resolve_field(c.field_spec, c.checkpoint, c.dim);
    const std::vector<int> ladder = parse_int_list(c.ladder, "ladder");

    // Start states and reference endpoints. Analytic fields use the exact
    // closed form; trained models use a fine midpoint reference.
    std::vector<StateVec> starts;
    std::vector<StateVec> reference;
    if (choice.is_model) {
        starts = parse_mixture(c.pi0).sample_n(c.samples, c.seed);
        reference.resize(starts.size());
        const TimeGrid fine = TimeGrid::uniform(0.0, 1.0, 4096);
        parallel_for(static_cast<int>(starts.size()), [&](int i) {
            reference[i] = integrate(*choice.field, starts[i], fine, SolverKind::Midpoint).endpoint();
        });
    } else {
        const auto* analytic = dynamic_cast<const AnalyticField*>(choice.field.get());
        StateVec x0 = parse_double_list(c.x0, "x0");
        ensure_dim(x0, choice.field->dim(), "convergence x0");
        starts = {x0};
        reference = {analytic->exact_solution(x0, 0.0, 1.0)};
    }

    long long nfe_total = 0;
    CsvWriter csv(ctx.artifact("order.csv"));
    csv.row({"solver", "N", "dt", "error", "nfe"});
    std::vector<SvgSeries> series;
    json estimates;

    for (SolverKind kind : solver_selection(c.solver)) {
        ErrorSeries errs;
        errs.solver = kind;
        errs.field_id = choice.id;
        SvgSeries svg;
        svg.label = solver_name(kind);
        svg.color = solver_color(kind);
        for (int n : ladder) {
            const TimeGrid grid = make_schedule(c.schedule, n, true);
            std::vector<double> per(starts.size(), 0.0);
            long long nfe_run = 0;
            for (std::size_t i = 0; i < starts.size(); ++i) {
                const Trajectory t = integrate(*choice.field, starts[i], grid, kind);
                per[i] = l2_distance(t.endpoint(), reference[i]);
                nfe_run = t.nfe_total;
            }
            double mean = 0.0;
            for (double e : per) mean += e;
            mean /= per.size();
            nfe_total += nfe_run * static_cast<long long>(starts.size());
            const double dt = grid.max_abs_dt();
            errs.dt.push_back(dt);
            errs.error.push_back(mean);
            svg.x.push_back(dt);
            svg.y.push_back(mean);
            csv.row({solver_name(kind), std::to_string(n), g17(dt), g17(mean),
                     std::to_string(nfe_run)});
        }
        const OrderEstimate est = estimate_order(errs);
        estimates[solver_name(kind)] = {{"slope", est.slope},
                                        {"intercept", est.intercept},
                                        {"r_squared", est.r_squared},
                                        {"degenerate", est.degenerate},
                                        {"points_used", est.points_used}};
        series.push_back(std::move(svg));
    }
    csv.close();

    SvgPlotSpec spec;
    spec.title = "global error vs step size (" + choice.id + ")";
    spec.xlabel = "dt";
    spec.ylabel = "endpoint error";
    spec.log_x = true;
    spec.log_y = true;
    write_svg_plot(spec, series, ctx.artifact("order.svg"));

    ctx.summary()["order_estimates"] = estimates;
    ctx.summary()["field"] = choice.id;
    ctx.finish(nfe_total);
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

struct ReconstructCmd {
    std::string config_path, out_dir;
    std::string field_spec = "linear:-1";
    std::string checkpoint;
    std::string solver;
    std::string ladder = "2,4,8,16,32";
    std::string pi1 = kDefaultPi1;
    int dim = 1;
    int samples = 200;
    std::uint64_t seed = 1024;
    int workers = 0;
    OptionSet opts;
};

void run_reconstruct(ReconstructCmd& c) {
    set_worker_count(c.workers);
    RunContext ctx("reconstruct", c.out_dir, c.opts);

    const FieldChoice choice = resolve_field(c.field_spec, c.checkpoint, c.dim);
    const std::vector<int> ladder = parse_int_list(c.ladder, "ladder");
    const std::vector<StateVec> samples = data_samples(choice, c.pi1, c.samples, c.seed);

    long long nfe_total = 0;
    CsvWriter csv(ctx.artifact("recon.csv"));
    csv.row({"solver", "N", "nfe", "mean_err", "p50_err", "p95_err", "diverged"});
    std::vector<SvgSeries> series;
    json per_solver;

    for (SolverKind kind : solver_selection(c.solver)) {
        SvgSeries svg;
        svg.label = solver_name(kind);
        svg.color = solver_color(kind);
        json rows = json::array();
        for (int n : ladder) {
            const ReconstructionStats stats = round_trip_error(*choice.field, samples, n, kind);
            nfe_total += stats.nfe_per_sample * stats.samples;
            csv.row({solver_name(kind), std::to_string(n), std::to_string(stats.nfe_per_sample),
                     g17(stats.mean_err), g17(stats.p50_err), g17(stats.p95_err),
                     std::to_string(stats.diverged)});
            svg.x.push_back(static_cast<double>(stats.nfe_per_sample));
            svg.y.push_back(stats.mean_err);
            rows.push_back({{"N", n},
                            {"nfe", stats.nfe_per_sample},
                            {"mean_err", stats.mean_err},
                            {"diverged", stats.diverged}});
        }
        per_solver[solver_name(kind)] = rows;
        series.push_back(std::move(svg));
    }
    csv.close();

    SvgPlotSpec spec;
    spec.title = "reconstruction error vs NFE (" + choice.id + ")";
    spec.xlabel = "NFE (inversion + reconstruction)";
    spec.ylabel = "mean L2 error";
    spec.log_y = true;
    write_svg_plot(spec, series, ctx.artifact("recon.svg"));

    ctx.summary()["reconstruction"] = per_solver;
    ctx.summary()["field"] = choice.id;
    ctx.summary()["samples"] = c.samples;
    ctx.finish(nfe_total);
}

// ---------------------------------------------------------------------------
// velocity-error
// ---------------------------------------------------------------------------

struct VelocityErrorCmd {
    std::string config_path, out_dir;
    std::string field_spec = "linear:-1";
    std::string checkpoint;
    std::string schedule = "uniform";
    std::string pi1 = kDefaultPi1;
    int dim = 1;
    int steps = 10;
    int samples = 100;
    std::uint64_t seed = 1024;
    int workers = 0;
    OptionSet opts;
};

void run_velocity_error(VelocityErrorCmd& c) {
    set_worker_count(c.workers);
    RunContext ctx("velocity-error", c.out_dir, c.opts);

    const FieldChoice choice = resolve_field(c.field_spec, c.checkpoint, c.dim);
    const std::vector<StateVec> samples = data_samples(choice, c.pi1, c.samples, c.seed);

    CsvWriter csv(ctx.artifact("velocity_error.csv"));
    csv.row({"direction", "steps", "step", "t", "abs_dt", "err"});

    json mean_summary;
    std::map<std::string, std::vector<SvgSeries>> panels;

    for (int steps : {c.steps, 2 * c.steps}) {
        const TimeGrid grid_inv = make_schedule(c.schedule, steps, false);  // data -> noise
        const TimeGrid grid_rec = grid_inv.reversed();

        // per-sample per-step errors, then a fixed-order mean over samples
        std::vector<std::vector<VelocityReuseSample>> inv(samples.size()), rec(samples.size());
        parallel_for(static_cast<int>(samples.size()), [&](int i) {
            inv[i] = velocity_reuse_error(*choice.field, samples[i], grid_inv);
            const Trajectory down = invert(*choice.field, samples[i], grid_inv);
            rec[i] = velocity_reuse_error(*choice.field, down.endpoint(), grid_rec);
        });

        auto emit = [&](const char* direction,
                        const std::vector<std::vector<VelocityReuseSample>>& runs) {
            const std::size_t n_steps = runs[0].size();
            SvgSeries svg;
            svg.label = std::string(direction) + " steps=" + std::to_string(steps);
            svg.color = steps == c.steps ? "#1f77b4" : "#d62728";
            SvgSeries ref;
            ref.label = "dt reference steps=" + std::to_string(steps);
            ref.color = svg.color;
            ref.dashed = true;
            double total = 0.0;
            for (std::size_t s = 0; s < n_steps; ++s) {
                double mean = 0.0;
                for (const auto& run : runs) mean += run[s].error;
                mean /= runs.size();
                total += mean;
                csv.row({direction, std::to_string(steps), std::to_string(runs[0][s].step),
                         g17(runs[0][s].t), g17(std::abs(runs[0][s].dt)), g17(mean)});
                svg.x.push_back(static_cast<double>(runs[0][s].step));
                svg.y.push_back(mean);
                ref.x.push_back(static_cast<double>(runs[0][s].step));
                ref.y.push_back(std::abs(runs[0][s].dt));
            }
            panels[direction].push_back(svg);
            panels[direction].push_back(ref);
            mean_summary[direction][std::to_string(steps)] = total / n_steps;
        };
        emit("inversion", inv);
        emit("reconstruction", rec);
    }
    csv.close();

    for (auto& [direction, series] : panels) {
        SvgPlotSpec spec;
        spec.title = "velocity reuse error per step (" + direction + ")";
        spec.xlabel = "step";
        spec.ylabel = "mean ||v_hat - v||";
        spec.log_y = true;
        write_svg_plot(spec, series, ctx.artifact("velocity_error_" + direction + ".svg"));
    }

    // halving dt should shrink the error roughly linearly
    json ratios;
    for (const char* direction : {"inversion", "reconstruction"}) {
        const double coarse = mean_summary[direction][std::to_string(c.steps)];
        const double fine = mean_summary[direction][std::to_string(2 * c.steps)];
        ratios[direction] = fine > 0.0 ? coarse / fine : 0.0;
    }
    ctx.summary()["mean_error"] = mean_summary;
    ctx.summary()["halving_ratio"] = ratios;
    ctx.summary()["field"] = choice.id;
    ctx.finish(0);
}

// ---------------------------------------------------------------------------
// straightness
// ---------------------------------------------------------------------------

struct StraightnessCmd {
    std::string config_path, out_dir;
    std::string field_spec;
    std::string checkpoint;
    std::string solver;
    std::string pi0 = kDefaultPi0;
    int dim = 1;
    int nfe = 20;
    int samples = 500;
    int dump_trajectories = 0;
    std::uint64_t seed = 1024;
    int workers = 0;
    OptionSet opts;
};

void run_straightness(StraightnessCmd& c) {
    set_worker_count(c.workers);
    RunContext ctx("straightness", c.out_dir, c.opts);

    if (c.field_spec.empty() && c.checkpoint.empty()) c.field_spec = "constant:1,-2";
    const FieldChoice choice = resolve_field(c.field_spec, c.checkpoint, c.dim);

    // Generation starts from the source end: pi0 draws for trained models,
    // a seeded cloud otherwise.
    std::vector<StateVec> starts;
    if (choice.is_model) {
        starts = parse_mixture(c.pi0).sample_n(c.samples, c.seed);
    } else {
        const int d = choice.field->dim();
        starts.resize(c.samples);
        for (int i = 0; i < c.samples; ++i) {
            Rng rng(derive_seed(c.seed, i));
            StateVec x(d);
            for (int k = 0; k < d; ++k) x[k] = 0.5 * rng.normal();
            starts[i] = x;
        }
    }

    long long nfe_total = 0;
    CsvWriter csv(ctx.artifact("straightness.csv"));
    csv.row({"solver", "sample", "straightness"});
    std::vector<SvgSeries> series;
    json per_solver;

    for (SolverKind kind : solver_selection(c.solver)) {
        const int steps = steps_for_nfe_budget(kind, c.nfe);
        const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, steps);
        std::vector<double> values(starts.size(), -1.0);
        parallel_for(static_cast<int>(starts.size()), [&](int i) {
            const Trajectory t = integrate(*choice.field, starts[i], grid, kind);
            const auto s = straightness(t);
            values[i] = s.has_value() ? *s : -1.0;
        });
        for (int i = 0; i < c.dump_trajectories && i < static_cast<int>(starts.size()); ++i) {
            const Trajectory t = integrate(*choice.field, starts[i], grid, kind);
            write_trajectory_csv(t, ctx.artifact(std::string("trajectory_") + solver_name(kind) +
                                                 "_" + std::to_string(i) + ".csv"));
        }
        double mean = 0.0;
        int defined = 0, undefined = 0;
        std::vector<double> sorted;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] < 0.0) {
                ++undefined;
                continue;
            }
            csv.row({solver_name(kind), std::to_string(i), g17(values[i])});
            mean += values[i];
            ++defined;
            sorted.push_back(values[i]);
        }
        if (defined > 0) mean /= defined;
        nfe_total += static_cast<long long>(starts.size()) *
                     (kind == SolverKind::Euler      ? steps
                      : kind == SolverKind::FireFlow ? steps + 1
                                                     : 2 * steps);
        std::sort(sorted.begin(), sorted.end());
        SvgSeries svg;
        svg.label = std::string(solver_name(kind)) + " (N=" + std::to_string(steps) + ")";
        svg.color = solver_color(kind);
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            svg.x.push_back(sorted.empty() ? 0.0 : static_cast<double>(i) / sorted.size());
            svg.y.push_back(sorted[i]);
        }
        series.push_back(std::move(svg));
        per_solver[solver_name(kind)] = {{"mean", mean},
                                         {"steps", steps},
                                         {"nfe", c.nfe},
                                         {"undefined", undefined}};
    }
    csv.close();

    SvgPlotSpec spec;
    spec.title = "trajectory straightness quantiles (NFE=" + std::to_string(c.nfe) + ")";
    spec.xlabel = "quantile";
    spec.ylabel = "chord deviation / chord length";
    write_svg_plot(spec, series, ctx.artifact("straightness.svg"));

    ctx.summary()["straightness"] = per_solver;
    ctx.summary()["field"] = choice.id;
    ctx.finish(nfe_total);
}

// ---------------------------------------------------------------------------
// perturb
// ---------------------------------------------------------------------------

struct PerturbCmd {
    std::string config_path, out_dir;
    std::string field_spec = "linear:1";
    std::string x = "2";
    std::string delta = "0.1";
    double horizon = 1.0;
    int ref_steps = 512;
    int dim = 1;
    int workers = 0;
    OptionSet opts;
};

void run_perturb(PerturbCmd& c) {
    set_worker_count(c.workers);
    RunContext ctx("perturb", c.out_dir, c.opts);

    const auto field = parse_field(c.field_spec, c.dim);
    const StateVec x_T = parse_double_list(c.x, "x");
    const StateVec delta_T = parse_double_list(c.delta, "delta");
    const PerturbationReport rep =
        perturbation_propagation(*field, x_T, delta_T, c.horizon, c.ref_steps);

    // Recompute the pair on the same reference grid for the per-time record.
    const TimeGrid grid = TimeGrid::uniform(c.horizon, 0.0, c.ref_steps);
    StateVec shifted = x_T;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += delta_T[i];
    const Trajectory base = integrate(*field, x_T, grid, SolverKind::Midpoint);
    const Trajectory pert = integrate(*field, shifted, grid, SolverKind::Midpoint);

    CsvWriter csv(ctx.artifact("perturb.csv"));
    csv.row({"t", "delta_norm"});
    SvgSeries curve;
    curve.label = "||delta(t)||";
    for (std::size_t i = 0; i < base.states.size(); ++i) {
        const double d = l2_distance(base.states[i], pert.states[i]);
        csv.row({g17(base.times[i]), g17(d)});
        curve.x.push_back(base.times[i]);
        curve.y.push_back(d);
    }
    csv.close();

    SvgSeries bound_line;
    bound_line.label = "bound e^{-LT}||delta_T||";
    bound_line.color = "#d62728";
    bound_line.dashed = true;
    bound_line.x = {0.0, c.horizon};
    bound_line.y = {rep.bound, rep.bound};

    SvgPlotSpec spec;
    spec.title = "backward perturbation propagation (" + field->describe() + ")";
    spec.xlabel = "t";
    spec.ylabel = "perturbation norm";
    write_svg_plot(spec, {curve, bound_line}, ctx.artifact("perturb.svg"));

    ctx.summary()["report"] = {{"delta_T", rep.delta_T},   {"delta_0", rep.delta_0},
                               {"lipschitz", rep.lipschitz}, {"horizon", rep.horizon},
                               {"bound", rep.bound},       {"satisfied", rep.satisfied}};
    ctx.finish(2LL * 2 * c.ref_steps);
}

// ---------------------------------------------------------------------------
// energy
// ---------------------------------------------------------------------------

struct EnergyCmd {
    std::string config_path, out_dir;
    std::string field_spec;
    std::string checkpoint;
    std::string solver;
    std::string pi0 = kDefaultPi0;
    std::string pi1 = kDefaultPi1;
    int dim = 2;
    int nfe = 20;
    int samples = 2000;
    std::uint64_t seed = 1024;
    int workers = 0;
    OptionSet opts;
};

void run_energy(EnergyCmd& c) {
    set_worker_count(c.workers);
    RunContext ctx("energy", c.out_dir, c.opts);

    if (c.field_spec.empty() && c.checkpoint.empty()) c.field_spec = "constant:1,-2";
    const FieldChoice choice = resolve_field(c.field_spec, c.checkpoint, c.dim);

    const GaussianMixture pi0 = parse_mixture(c.pi0);
    const GaussianMixture pi1 = parse_mixture(c.pi1);
    const auto starts = pi0.sample_n(c.samples, derive_seed(c.seed, 0x70693061ull));
    const auto fresh = pi1.sample_n(c.samples, derive_seed(c.seed, 0x70693162ull));

    long long nfe_total = 0;
    CsvWriter csv(ctx.artifact("energy.csv"));
    csv.row({"solver", "steps", "nfe", "n", "energy_distance"});
    SvgSeries svg;
    svg.label = "energy distance";
    json per_solver;
    int idx = 0;

    for (SolverKind kind : solver_selection(c.solver)) {
        const int steps = steps_for_nfe_budget(kind, c.nfe);
        const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, steps);
        std::vector<StateVec> generated(starts.size());
        parallel_for(static_cast<int>(starts.size()), [&](int i) {
            generated[i] = integrate(*choice.field, starts[i], grid, kind).endpoint();
        });
        const double ed = energy_distance(generated, fresh);
        nfe_total += static_cast<long long>(starts.size()) *
                     (kind == SolverKind::Euler      ? steps
                      : kind == SolverKind::FireFlow ? steps + 1
                                                     : 2 * steps);
        csv.row({solver_name(kind), std::to_string(steps), std::to_string(c.nfe),
                 std::to_string(c.samples), g17(ed)});
        per_solver[solver_name(kind)] = ed;
        svg.x.push_back(static_cast<double>(idx++));
        svg.y.push_back(ed);
    }
    csv.close();

    SvgPlotSpec spec;
    spec.title = "energy distance to fresh target samples (NFE=" + std::to_string(c.nfe) + ")";
    spec.xlabel = "solver index (order as in energy.csv)";
    spec.ylabel = "energy distance";
    write_svg_plot(spec, {svg}, ctx.artifact("energy.svg"));

    ctx.summary()["energy_distance"] = per_solver;
    ctx.summary()["field"] = choice.id;
    ctx.finish(nfe_total);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "fireflow: cached-midpoint rectified-flow solver experiments.\n"
        "Option precedence: defaults < --config file < explicit flags."};
    app.require_subcommand(1);

    TrainCmd train;
    ConvergenceCmd conv;
    ReconstructCmd recon;
    VelocityErrorCmd vel;
    StraightnessCmd str;
    PerturbCmd pert;
    EnergyCmd ener;

    auto add_common = [](CLI::App* cmd, OptionSet& opts, std::string& config_path,
                         std::string& out_dir, int& workers) {
        cmd->add_option("--config", config_path, "key = value config file");
        bind_str(opts, cmd->add_option("--out", out_dir, "output directory (created if missing)"),
                 "out", out_dir);
        bind_int(opts, cmd->add_option("--workers", workers, "worker cap (0 = runtime default)"),
                 "workers", workers);
    };

    {
        auto* cmd = app.add_subcommand("train", "train a rectified flow on 2D mixtures");
        add_common(cmd, train.opts, train.config_path, train.out_dir, train.workers);
        bind_u64(train.opts, cmd->add_option("--seed", train.seed, "master seed"), "seed",
                 train.seed);
        bind_str(train.opts, cmd->add_option("--pi0", train.pi0, "source mixture"), "pi0",
                 train.pi0);
        bind_str(train.opts, cmd->add_option("--pi1", train.pi1, "target mixture"), "pi1",
                 train.pi1);
        bind_str(train.opts, cmd->add_option("--hidden", train.hidden, "hidden layer widths"),
                 "hidden", train.hidden);
        bind_int(train.opts, cmd->add_option("--iters", train.iters, "training iterations"),
                 "iters", train.iters);
        bind_int(train.opts, cmd->add_option("--batch", train.batch, "batch size"), "batch",
                 train.batch);
        bind_double(train.opts, cmd->add_option("--lr", train.lr, "learning rate"), "lr",
                    train.lr);
        bind_flag(train.opts, cmd->add_flag("--reflow", train.run_reflow, "also run re-coupling"),
                  "reflow", train.run_reflow);
        bind_int(train.opts,
                 cmd->add_option("--reflow-pairs", train.reflow_pairs, "model-generated pairs"),
                 "reflow-pairs", train.reflow_pairs);
        bind_int(train.opts,
                 cmd->add_option("--reflow-steps", train.reflow_steps, "pair generation steps"),
                 "reflow-steps", train.reflow_steps);
        cmd->callback([&] {
            if (!train.config_path.empty())
                train.opts.apply_config(KeyValueConfig::parse_file(train.config_path));
            run_train(train);
        });
    }
    {
        auto* cmd = app.add_subcommand("convergence", "order-of-convergence ladder");
        add_common(cmd, conv.opts, conv.config_path, conv.out_dir, conv.workers);
        bind_u64(conv.opts, cmd->add_option("--seed", conv.seed, "master seed"), "seed", conv.seed);
        bind_str(conv.opts, cmd->add_option("--field", conv.field_spec, "analytic field"), "field",
                 conv.field_spec);
        bind_str(conv.opts, cmd->add_option("--checkpoint", conv.checkpoint, "trained model"),
                 "checkpoint", conv.checkpoint);
        bind_str(conv.opts,
                 cmd->add_option("--solver", conv.solver, "euler|midpoint|heun|fireflow|all"),
                 "solver", conv.solver);
        bind_str(conv.opts, cmd->add_option("--schedule", conv.schedule, "uniform|power:gamma"),
                 "schedule", conv.schedule);
        bind_str(conv.opts, cmd->add_option("--ladder", conv.ladder, "step-count ladder"),
                 "ladder", conv.ladder);
        bind_str(conv.opts, cmd->add_option("--x0", conv.x0, "start state (analytic)"), "x0",
                 conv.x0);
        bind_str(conv.opts, cmd->add_option("--pi0", conv.pi0, "start mixture (checkpoint)"),
                 "pi0", conv.pi0);
        bind_int(conv.opts, cmd->add_option("--dim", conv.dim, "field dimension"), "dim",
                 conv.dim);
        bind_int(conv.opts, cmd->add_option("--samples", conv.samples, "checkpoint start count"),
                 "samples", conv.samples);
        cmd->callback([&] {
            if (!conv.config_path.empty())
                conv.opts.apply_config(KeyValueConfig::parse_file(conv.config_path));
            run_convergence(conv);
        });
    }
    {
        auto* cmd = app.add_subcommand("reconstruct", "invert+reconstruct error sweep");
        add_common(cmd, recon.opts, recon.config_path, recon.out_dir, recon.workers);
        bind_u64(recon.opts, cmd->add_option("--seed", recon.seed, "master seed"), "seed",
                 recon.seed);
        bind_str(recon.opts, cmd->add_option("--field", recon.field_spec, "analytic field"),
                 "field", recon.field_spec);
        bind_str(recon.opts, cmd->add_option("--checkpoint", recon.checkpoint, "trained model"),
                 "checkpoint", recon.checkpoint);
        bind_str(recon.opts,
                 cmd->add_option("--solver", recon.solver, "euler|midpoint|heun|fireflow|all"),
                 "solver", recon.solver);
        bind_str(recon.opts, cmd->add_option("--ladder", recon.ladder, "step-count ladder"),
                 "ladder", recon.ladder);
        bind_str(recon.opts, cmd->add_option("--pi1", recon.pi1, "data mixture (checkpoint)"),
                 "pi1", recon.pi1);
        bind_int(recon.opts, cmd->add_option("--dim", recon.dim, "field dimension"), "dim",
                 recon.dim);
        bind_int(recon.opts, cmd->add_option("--samples", recon.samples, "data sample count"),
                 "samples", recon.samples);
        cmd->callback([&] {
            if (!recon.config_path.empty())
                recon.opts.apply_config(KeyValueConfig::parse_file(recon.config_path));
            run_reconstruct(recon);
        });
    }
    {
        auto* cmd = app.add_subcommand("velocity-error", "cached velocity reuse error per step");
        add_common(cmd, vel.opts, vel.config_path, vel.out_dir, vel.workers);
        bind_u64(vel.opts, cmd->add_option("--seed", vel.seed, "master seed"), "seed", vel.seed);
        bind_str(vel.opts, cmd->add_option("--field", vel.field_spec, "analytic field"), "field",
                 vel.field_spec);
        bind_str(vel.opts, cmd->add_option("--checkpoint", vel.checkpoint, "trained model"),
                 "checkpoint", vel.checkpoint);
        bind_str(vel.opts, cmd->add_option("--schedule", vel.schedule, "uniform|power:gamma"),
                 "schedule", vel.schedule);
        bind_str(vel.opts, cmd->add_option("--pi1", vel.pi1, "data mixture (checkpoint)"), "pi1",
                 vel.pi1);
        bind_int(vel.opts, cmd->add_option("--dim", vel.dim, "field dimension"), "dim", vel.dim);
        bind_int(vel.opts, cmd->add_option("--steps", vel.steps, "base step count (also runs 2x)"),
                 "steps", vel.steps);
        bind_int(vel.opts, cmd->add_option("--samples", vel.samples, "data sample count"),
                 "samples", vel.samples);
        cmd->callback([&] {
            if (!vel.config_path.empty())
                vel.opts.apply_config(KeyValueConfig::parse_file(vel.config_path));
            run_velocity_error(vel);
        });
    }
    {
        auto* cmd = app.add_subcommand("straightness", "trajectory straightness at an NFE budget");
        add_common(cmd, str.opts, str.config_path, str.out_dir, str.workers);
        bind_u64(str.opts, cmd->add_option("--seed", str.seed, "master seed"), "seed", str.seed);
        bind_str(str.opts, cmd->add_option("--field", str.field_spec, "analytic field"), "field",
                 str.field_spec);
        bind_str(str.opts, cmd->add_option("--checkpoint", str.checkpoint, "trained model"),
                 "checkpoint", str.checkpoint);
        bind_str(str.opts,
                 cmd->add_option("--solver", str.solver, "euler|midpoint|heun|fireflow|all"),
                 "solver", str.solver);
        bind_str(str.opts, cmd->add_option("--pi0", str.pi0, "start mixture (checkpoint)"), "pi0",
                 str.pi0);
        bind_int(str.opts, cmd->add_option("--dim", str.dim, "field dimension"), "dim", str.dim);
        bind_int(str.opts, cmd->add_option("--nfe", str.nfe, "per-trajectory NFE budget"), "nfe",
                 str.nfe);
        bind_int(str.opts, cmd->add_option("--samples", str.samples, "trajectory count"),
                 "samples", str.samples);
        bind_int(str.opts,
                 cmd->add_option("--dump-trajectories", str.dump_trajectories,
                                 "write the first K trajectories as CSV"),
                 "dump-trajectories", str.dump_trajectories);
        cmd->callback([&] {
            if (!str.config_path.empty())
                str.opts.apply_config(KeyValueConfig::parse_file(str.config_path));
            run_straightness(str);
        });
    }
    {
        auto* cmd = app.add_subcommand("perturb", "backward perturbation propagation report");
        add_common(cmd, pert.opts, pert.config_path, pert.out_dir, pert.workers);
        bind_str(pert.opts, cmd->add_option("--field", pert.field_spec, "analytic field"), "field",
                 pert.field_spec);
        bind_str(pert.opts, cmd->add_option("--x", pert.x, "endpoint state at t=T"), "x", pert.x);
        bind_str(pert.opts, cmd->add_option("--delta", pert.delta, "perturbation at t=T"), "delta",
                 pert.delta);
        bind_double(pert.opts, cmd->add_option("--T", pert.horizon, "horizon in (0,1]"), "T",
                    pert.horizon);
        bind_int(pert.opts, cmd->add_option("--ref-steps", pert.ref_steps, "reference grid steps"),
                 "ref-steps", pert.ref_steps);
        bind_int(pert.opts, cmd->add_option("--dim", pert.dim, "field dimension"), "dim",
                 pert.dim);
        cmd->callback([&] {
            if (!pert.config_path.empty())
                pert.opts.apply_config(KeyValueConfig::parse_file(pert.config_path));
            run_perturb(pert);
        });
    }
    {
        auto* cmd = app.add_subcommand("energy", "energy distance of generated vs fresh samples");
        add_common(cmd, ener.opts, ener.config_path, ener.out_dir, ener.workers);
        bind_u64(ener.opts, cmd->add_option("--seed", ener.seed, "master seed"), "seed",
                 ener.seed);
        bind_str(ener.opts, cmd->add_option("--field", ener.field_spec, "analytic field"), "field",
                 ener.field_spec);
        bind_str(ener.opts, cmd->add_option("--checkpoint", ener.checkpoint, "trained model"),
                 "checkpoint", ener.checkpoint);
        bind_str(ener.opts,
                 cmd->add_option("--solver", ener.solver, "euler|midpoint|heun|fireflow|all"),
                 "solver", ener.solver);
        bind_str(ener.opts, cmd->add_option("--pi0", ener.pi0, "start mixture"), "pi0", ener.pi0);
        bind_str(ener.opts, cmd->add_option("--pi1", ener.pi1, "target mixture"), "pi1", ener.pi1);
        bind_int(ener.opts, cmd->add_option("--dim", ener.dim, "field dimension"), "dim",
                 ener.dim);
        bind_int(ener.opts, cmd->add_option("--nfe", ener.nfe, "per-trajectory NFE budget"),
                 "nfe", ener.nfe);
        bind_int(ener.opts, cmd->add_option("--samples", ener.samples, "sample count per side"),
                 "samples", ener.samples);
        cmd->callback([&] {
            if (!ener.config_path.empty())
                ener.opts.apply_config(KeyValueConfig::parse_file(ener.config_path));
            run_energy(ener);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
