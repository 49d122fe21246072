#include "stflow/experiment.hpp"

#include "stflow/drift.hpp"
#include "stflow/errors.hpp"
#include "stflow/monte_carlo.hpp"
#include "stflow/output.hpp"
#include "stflow/parallel.hpp"
#include "stflow/pde.hpp"
#include "stflow/sde_flow.hpp"
#include "stflow/transport.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>

#ifndef STFLOW_VERSION
#define STFLOW_VERSION "unknown"
#endif

namespace stflow {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Writer {
    fs::path dir;
    std::string hash;
    std::vector<std::string> files;

    void csv(const std::string& name, const Table& t) {
        write_file(dir / name, to_csv(t, hash));
        files.push_back((dir / name).string());
    }
    void summary(const std::string& name, json j) {
        j["config_hash"] = hash;
        write_file(dir / name, j.dump(2) + "\n");
        files.push_back((dir / name).string());
    }
};

Grid make_grid(const ExperimentConfig& c) { return Grid(c.grid.d, c.grid.L, c.grid.n, c.grid.periodic); }
TimeGrid make_time(const ExperimentConfig& c) { return TimeGrid::from_dt(c.time.s, c.time.T, c.time.dt); }

FlowOptions flow_options(const ExperimentConfig& c) {
    FlowOptions o;
    o.s = c.time.s;
    o.T = c.time.T;
    o.dt = c.time.dt;
    o.M = c.mc.M;
    o.seed = c.seed;
    o.master_dt = c.time.master_dt;
    return o;
}

MomentOptions moment_options(const ExperimentConfig& c, int point = 0) {
    MomentOptions o;
    o.point = point;
    o.bootstrap = c.mc.bootstrap;
    o.seed = c.seed;
    return o;
}

json to_json(const MomentEstimate& m) {
    return {{"label", m.label}, {"p", m.p}, {"estimate", m.estimate}, {"ci", m.ci}, {"M", m.M}};
}

std::vector<std::string> coord_columns(int d, const std::string& prefix) {
    std::vector<std::string> c;
    for (int i = 1; i <= d; ++i) c.push_back(prefix + std::to_string(i));
    return c;
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

// At most nine evenly spaced levels, always including the first and last.
std::vector<int> snapshot_levels(int steps) {
    std::vector<int> k;
    for (int j = 0; j <= 8; ++j) {
        const int l = static_cast<int>(std::lround(static_cast<double>(j) * steps / 8));
        if (k.empty() || l != k.back()) k.push_back(l);
    }
    return k;
}

InitialDatum datum(const std::string& name) {
    if (name == "sine") return [](const Vec& x) { return std::sin(x(0)); };
    if (name == "cosine") return [](const Vec& x) { return std::cos(x(0)); };
    if (name == "gaussian") return [](const Vec& x) { return std::exp(-x.squaredNorm()); };
    if (name == "step") return [](const Vec& x) { return x(0) > 0.0 ? 1.0 : 0.0; };
    throw ValidationError("transport.datum", "unknown datum '" + name + "'");
}

FieldFn source(const std::string& name) {
    if (name == "one") return [](double, const Vec&) { return Vec::Constant(1, 1.0); };
    if (name == "sine") return [](double, const Vec& x) { return Vec::Constant(1, std::sin(x(0))); };
    if (name == "holder-sine")
        return [](double, const Vec& x) {
            const double s = std::sin(x(0));
            return Vec::Constant(1, std::copysign(std::sqrt(std::abs(s)), s));
        };
    throw ValidationError("pde.source", "unknown source '" + name + "'");
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

void run_pde_solve(const ExperimentConfig& c, Writer& w) {
    const Grid g = make_grid(c);
    const TimeGrid tg = make_time(c);
    const DriftSpec b = build_drift(c);
    const GridFunction f = sample(g, tg, 1, source(c.pde.source));
    PicardOptions opt;
    opt.tol = c.pde.tol;
    opt.max_iter = c.pde.max_iter;
    const MildSolution sol = solve_mild(f, sample_drift(b, g, tg), opt);

    const int d = g.d;
    std::vector<std::string> cols{"t"};
    cols = cols + coord_columns(d, "x") + std::vector<std::string>{"u"} + coord_columns(d, "du_x");
    for (int a = 1; a <= d; ++a) cols.push_back("d2u_x" + std::to_string(a) + "x" + std::to_string(a));
    Table t(cols);
    for (int k : snapshot_levels(tg.steps)) {
        const auto u = sol.u.slice(k, 0);
        std::vector<std::vector<double>> du, d2u;
        for (int a = 0; a < d; ++a) {
            du.push_back(diff(g, u, a));
            d2u.push_back(diff2(g, u, a, a));
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::vector<std::string> row{cell(tg.time(k))};
            const Vec x = g.point(i);
            for (int a = 0; a < d; ++a) row.push_back(cell(x(a)));
            row.push_back(cell(u[i]));
            for (int a = 0; a < d; ++a) row.push_back(cell(du[a][i]));
            for (int a = 0; a < d; ++a) row.push_back(cell(d2u[a][i]));
            t.add(std::move(row));
        }
    }
    w.csv("pde-solve.csv", t);

    // Modulus of the second derivative at the final time; null when the grid is too coarse
    // for three dyadic scales below modulus.delta.
    const auto final_d2 = diff2(g, sol.u.slice(tg.steps, 0), 0, 0);
    json modulus = nullptr;
    try {
        const ModulusMeasurement mm = measure_modulus(g, final_d2, build_modulus(c.modulus), c.modulus.delta);
        modulus = {{"C_hat", mm.C_hat}, {"unbounded", mm.unbounded}};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Domain) throw;
    }
    const double worst = sol.contraction.empty() ? 0.0 : *std::max_element(sol.contraction.begin(), sol.contraction.end());
    w.summary("pde-solve-summary.json",
              {{"kind", "pde-solve"},
               {"iterations", sol.iterations},
               {"subintervals", sol.subintervals},
               {"residual", sol.residual},
               {"max_contraction", worst},
               {"sup_u", sol.u.sup_abs()},
               {"second_derivative_modulus", modulus}});
}

void run_lambda_sweep(const ExperimentConfig& c, Writer& w) {
    const Grid g = make_grid(c);
    const TimeGrid tg = make_time(c);
    const GridFunction b = sample_drift(build_drift(c), g, tg);
    std::vector<double> lambdas;
    for (int k = 0; k <= c.mc.lambda_k_max; ++k) lambdas.push_back(std::ldexp(1.0, k));
    PicardOptions opt;
    opt.tol = c.pde.tol;
    opt.max_iter = c.pde.max_iter;
    const LambdaSweep s = lambda_sweep(b, lambdas, opt);
    Table t({"lambda", "grad_sup"});
    for (std::size_t i = 0; i < s.lambda.size(); ++i) t.add({cell(s.lambda[i]), cell(s.grad_sup[i])});
    w.csv("lambda-sweep.csv", t);
    w.summary("lambda-sweep-summary.json", {{"kind", "lambda-sweep"},
                                            {"lambda0", s.lambda0},
                                            {"reached", s.lambda0 > 0.0},
                                            {"slope", s.slope},
                                            {"strictly_decreasing", s.strictly_decreasing}});
    if (s.lambda0 == 0.0)
        fail(ErrorKind::NotReached, "no lambda up to 2^" + std::to_string(c.mc.lambda_k_max) + " gives sup|grad U| <= 1/2");
}

void run_flow_sim(const ExperimentConfig& c, Writer& w) {
    const DriftSpec b = build_drift(c);
    FlowEnsemble ens = simulate_flow(b, c.mc.points, flow_options(c));
    const int d = ens.d;
    if (c.mc.record == "paths") {
        Table t(std::vector<std::string>{"path", "point", "step", "t"} + coord_columns(d, "x"));
        for (int m = 0; m < ens.M; ++m)
            for (int p = 0; p < ens.P(); ++p)
                for (int k = 0; k < ens.levels(); ++k) {
                    const Vec x = ens.state(m, p, k);
                    std::vector<std::string> row{cell(m), cell(p), cell(k), cell(ens.time.time(k))};
                    for (int a = 0; a < d; ++a) row.push_back(cell(x(a)));
                    t.add(std::move(row));
                }
        w.csv("flow-sim.csv", t);
    } else {
        Table t(std::vector<std::string>{"point", "step", "t"} + coord_columns(d, "mean_x") + coord_columns(d, "var_x"));
        for (int p = 0; p < ens.P(); ++p)
            for (int k = 0; k < ens.levels(); ++k) {
                Vec mean = Vec::Zero(d), sq = Vec::Zero(d);
                for (int m = 0; m < ens.M; ++m) {
                    const Vec x = ens.state(m, p, k);
                    mean += x;
                    sq += x.cwiseProduct(x);
                }
                mean /= ens.M;
                const Vec var = ens.M > 1 ? Vec((sq - ens.M * mean.cwiseProduct(mean)) / (ens.M - 1)) : Vec::Zero(d);
                std::vector<std::string> row{cell(p), cell(k), cell(ens.time.time(k))};
                for (int a = 0; a < d; ++a) row.push_back(cell(mean(a)));
                for (int a = 0; a < d; ++a) row.push_back(cell(var(a)));
                t.add(std::move(row));
            }
        w.csv("flow-sim.csv", t);
    }

    json moments = json::array();
    Table mt({"quantity", "point", "p", "estimate", "ci", "M", "seed"});
    auto add = [&](const MomentEstimate& e, int p) {
        moments.push_back(to_json(e));
        mt.add({e.label, cell(p), cell(e.p), cell(e.estimate), cell(e.ci), cell(e.M), cell(static_cast<unsigned long long>(c.seed))});
    };
    for (int p = 0; p < ens.P(); ++p) add(moment_sup(ens, Quantity::Displacement, c.mc.p, moment_options(c, p)), p);
    json liouville = nullptr;
    if (b.differentiable()) {
        derivative_flow(b, ens);
        for (int p = 0; p < ens.P(); ++p) add(moment_sup(ens, Quantity::Jacobian, c.mc.p, moment_options(c, p)), p);
        const LiouvilleReport lr = liouville_det(b, ens);
        liouville = {{"h", lr.h}, {"max_rel_gap", lr.max_rel_gap}, {"mean_rel_gap", lr.mean_rel_gap}};
    }
    w.csv("flow-sim-moments.csv", mt);
    const IncrementStats inc = increment_stats(ens);
    w.summary("flow-sim-summary.json", {{"kind", "flow-sim"},
                                        {"moments", moments},
                                        {"liouville", liouville},
                                        {"increments",
                                         {{"mean", inc.mean},
                                          {"variance", inc.variance},
                                          {"z_mean", inc.z_mean},
                                          {"z_variance", inc.z_variance},
                                          {"ok", inc.ok()}}}});
}

void run_flow_modulus(const ExperimentConfig& c, Writer& w) {
    const DriftSpec b = build_drift(c);
    const Quantity q = c.mc.quantity == "gradX" ? Quantity::JacobianTwoPoint : Quantity::TwoPoint;
    const FitModel model = c.mc.model == "log-power" ? FitModel::LogPower : FitModel::Power;
    const LadderResult res = two_point_ladder(b, c.mc.points.front(), c.mc.separations, c.mc.p, q, model, flow_options(c));
    Table t({"quantity", "p", "r", "estimate", "ci", "M", "seed"});
    for (std::size_t i = 0; i < res.moments.size(); ++i) {
        const MomentEstimate& e = res.moments[i];
        t.add({c.mc.quantity, cell(e.p), cell(c.mc.separations[i]), cell(e.estimate), cell(e.ci), cell(e.M),
               cell(static_cast<unsigned long long>(c.seed))});
    }
    w.csv("flow-modulus.csv", t);
    w.summary("flow-modulus-summary.json", {{"kind", "flow-modulus"},
                                            {"quantity", c.mc.quantity},
                                            {"model", to_string(res.fit.model)},
                                            {"exponent", res.fit.exponent},
                                            {"intercept", res.fit.intercept},
                                            {"residual", res.fit.residual},
                                            {"degenerate", res.fit.degenerate}});
}

void run_mollify_convergence(const ExperimentConfig& c, Writer& w) {
    const DriftSpec b = build_drift(c);
    const bool grad = c.mc.quantity == "gradX";
    const auto rows = convergence_study(b, c.mc.n_list, c.mc.points.front(), c.mc.p, flow_options(c), grad);
    Table t({"quantity", "p", "n", "estimate", "ci", "M", "seed"});
    std::vector<double> flow, gradient;
    const std::string seed = cell(static_cast<unsigned long long>(c.seed));
    for (const auto& r : rows) {
        t.add({"X", cell(r.flow.p), cell(r.n), cell(r.flow.estimate), cell(r.flow.ci), cell(r.flow.M), seed});
        flow.push_back(r.flow.estimate);
    }
    if (grad)
        for (const auto& r : rows) {
            t.add({"gradX", cell(r.gradient.p), cell(r.n), cell(r.gradient.estimate), cell(r.gradient.ci),
                   cell(r.gradient.M), seed});
            gradient.push_back(r.gradient.estimate);
        }
    w.csv("mollify-convergence.csv", t);
    json j{{"kind", "mollify-convergence"}, {"flow_strictly_decreasing", strictly_decreasing(flow)}};
    if (grad) j["gradient_strictly_decreasing"] = strictly_decreasing(gradient);
    w.summary("mollify-convergence-summary.json", j);
}

void run_transport(const ExperimentConfig& c, Writer& w) {
    const Grid g = make_grid(c);
    const InitialDatum u0 = datum(c.transport.datum);
    const TransportSolution sol = solve_transport(build_drift(c), u0, g, flow_options(c), false);
    const int L = sol.time().levels();
    const std::size_t P = g.size();
    const std::size_t cells = static_cast<std::size_t>(L) * P;
    std::vector<double> sum(cells, 0.0), lo(cells, std::numeric_limits<double>::infinity()),
        hi(cells, -std::numeric_limits<double>::infinity());
    // Blocks of paths in parallel, reduced in path order.
    const int block = 32;
    for (int start = 0; start < sol.M(); start += block) {
        const int count = std::min(block, sol.M() - start);
        std::vector<std::vector<double>> vals(static_cast<std::size_t>(count));
        parallel_for(static_cast<std::size_t>(count),
                     [&](std::size_t j) { vals[j] = sol.path_values(start + static_cast<int>(j)); });
        for (const auto& v : vals)
            for (std::size_t i = 0; i < cells; ++i) {
                sum[i] += v[i];
                lo[i] = std::min(lo[i], v[i]);
                hi[i] = std::max(hi[i], v[i]);
            }
    }
    double u0_lo = std::numeric_limits<double>::infinity(), u0_hi = -u0_lo;
    for (std::size_t i = 0; i < P; ++i) {
        u0_lo = std::min(u0_lo, u0(g.point(i)));
        u0_hi = std::max(u0_hi, u0(g.point(i)));
    }
    double out_lo = u0_lo, out_hi = u0_hi;
    for (std::size_t i = 0; i < cells; ++i) {
        out_lo = std::min(out_lo, lo[i]);
        out_hi = std::max(out_hi, hi[i]);
    }
    Table t(std::vector<std::string>{"t"} + coord_columns(g.d, "x") + std::vector<std::string>{"mean_u", "min_u", "max_u"});
    for (int k : snapshot_levels(sol.time().steps))
        for (std::size_t i = 0; i < P; ++i) {
            const std::size_t idx = static_cast<std::size_t>(k) * P + i;
            std::vector<std::string> row{cell(sol.time().time(k))};
            const Vec x = g.point(i);
            for (int a = 0; a < g.d; ++a) row.push_back(cell(x(a)));
            row.push_back(cell(sum[idx] / sol.M()));
            row.push_back(cell(lo[idx]));
            row.push_back(cell(hi[idx]));
            t.add(std::move(row));
        }
    w.csv("transport.csv", t);
    // Values at grid points stay within the range of u0 over all of space; the grid range
    // is reported alongside.
    w.summary("transport-summary.json", {{"kind", "transport"},
                                         {"M", sol.M()},
                                         {"u0_grid_min", u0_lo},
                                         {"u0_grid_max", u0_hi},
                                         {"u_min", out_lo},
                                         {"u_max", out_hi}});
}

void run_weak_residual(const ExperimentConfig& c, Writer& w) {
    const DriftSpec b = build_drift(c);
    const InitialDatum u0 = datum(c.transport.datum);
    Vec center(c.grid.d);
    for (int a = 0; a < c.grid.d; ++a) center(a) = c.transport.test_center[static_cast<std::size_t>(a)];
    const TestFunction phi{center, c.transport.test_radius};
    const int R = c.transport.refinements;
    Table t({"refinement", "dt", "h", "mean_final", "ci_final", "rms_final", "max_abs", "M", "seed"});
    std::vector<double> rms;
    WeakResidual finest;
    for (int j = 0; j < R; ++j) {
        const int n = c.grid.periodic ? c.grid.n << j : ((c.grid.n - 1) << j) + 1;
        const Grid g(c.grid.d, c.grid.L, n, c.grid.periodic);
        FlowOptions o = flow_options(c);
        o.dt = std::ldexp(c.time.dt, -j);
        o.master_dt = c.time.master_dt > 0.0 ? c.time.master_dt : std::ldexp(c.time.dt, -(R - 1));
        const TransportSolution sol = solve_transport(b, u0, g, o, false);
        WeakResidual wr = weak_residual(sol, phi);
        t.add({cell(j), cell(o.dt), cell(g.h()), cell(wr.mean.back()), cell(wr.ci.back()), cell(wr.rms_final),
               cell(wr.max_abs), cell(wr.M), cell(static_cast<unsigned long long>(c.seed))});
        rms.push_back(wr.rms_final);
        if (j == R - 1) finest = std::move(wr);
    }
    w.csv("weak-residual.csv", t);
    Table paths({"path", "t", "residual"});
    for (int m = 0; m < finest.M; ++m)
        for (int k = 0; k < finest.time.levels(); ++k)
            paths.add({cell(m), cell(finest.time.time(k)), cell(finest.at(m, k))});
    w.csv("weak-residual-paths.csv", paths);
    w.summary("weak-residual-summary.json",
              {{"kind", "weak-residual"}, {"rms_final", rms}, {"rms_strictly_decreasing", strictly_decreasing(rms)}});
}

void run_nonuniqueness(const ExperimentConfig& c, Writer& w) {
    const NonuniquenessReport rep = nonuniqueness_demo(c.transport.alpha, c.time.T, c.mc.n_list, flow_options(c));
    Table br({"t", "escaping", "residual_escaping", "residual_stationary"});
    for (const auto& r : rep.branches)
        br.add({cell(r.t), cell(r.escaping), cell(r.residual_escaping), cell(r.residual_stationary)});
    w.csv("nonuniqueness-branches.csv", br);
    Table sel({"n", "det_plus", "det_minus", "gap", "ci", "M", "seed"});
    for (const auto& r : rep.selection)
        sel.add({cell(r.n), cell(r.det_plus), cell(r.det_minus), cell(r.gap.estimate), cell(r.gap.ci), cell(r.gap.M),
                 cell(static_cast<unsigned long long>(c.seed))});
    w.csv("nonuniqueness-selection.csv", sel);
    w.summary("nonuniqueness-demo-summary.json",
              {{"kind", "nonuniqueness-demo"}, {"alpha", rep.alpha}, {"T", rep.T}, {"gaps_decreasing", rep.gaps_decreasing}});
}

void run_modulus_verify(const ExperimentConfig& c, Writer& w) {
    const Modulus m = build_modulus(c.modulus);
    const InvariantReport inv = check_invariants(m);
    const DiniReport dini = verify_dini(m);
    json j{{"kind", "modulus-verify"},
           {"family", c.modulus.family},
           {"class", to_string(classify(m))},
           {"nonnegative", inv.nonnegative},
           {"nondecreasing", inv.nondecreasing},
           {"dini", {{"finite", dini.finite}, {"value", dini.value}, {"partial_sums", dini.partial_sums}}}};
    Table t({"sequence", "log_r", "ratio"});
    if (!dini.finite) {
        for (std::size_t i = 0; i < dini.partial_sums.size(); ++i)
            t.add({"dini_partial", cell(static_cast<int>(i)), cell(dini.partial_sums[i])});
        w.csv("modulus-verify.csv", t);
        w.summary("modulus-verify-summary.json", j);
        throw NonFiniteError("Dini integral of the " + c.modulus.family + " modulus diverges",
                             dini.partial_sums.empty() ? 0.0 : dini.partial_sums.back());
    }
    const MaxRegularityReport mr = verify_max_regularity(m);
    auto seq = [&](const char* name, const RatioSequence& s) {
        for (std::size_t i = 0; i < s.ratio.size(); ++i) t.add({name, cell(s.log_r[i]), cell(s.ratio[i])});
        return json{{"verdict", to_string(s.verdict)},
                    {"growth", s.growth},
                    {"loglog_slope", s.loglog_slope},
                    {"limit_estimate", s.limit_estimate},
                    {"finest", s.finest}};
    };
    j["max_regularity"] = {{"holds", mr.holds}, {"inner", seq("inner", mr.inner)}, {"tail", seq("tail", mr.tail)}};
    const ConcavityReport cr = verify_f_concavity(m, c.modulus.p, c.modulus.delta);
    j["concavity"] = {{"p", c.modulus.p},
                      {"delta", c.modulus.delta},
                      {"increasing", cr.increasing},
                      {"concave", cr.concave},
                      {"worst_violation", cr.worst_violation},
                      {"worst_r", cr.worst_r}};
    w.csv("modulus-verify.csv", t);
    w.summary("modulus-verify-summary.json", j);
}

}  // namespace

const char* version() noexcept { return STFLOW_VERSION; }

RunResult run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    Writer w{fs::path(cfg.output_dir()), cfg.hash_hex(), {}};
    RunResult res;
    res.directory = w.dir.string();
    res.hash = w.hash;
    auto finish = [&](const std::string& status) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json manifest{{"kind", to_string(cfg.kind)},
                      {"config_hash", w.hash},
                      {"seed", cfg.seed},
                      {"version", version()},
                      {"threads", default_threads()},
                      {"wall_seconds", wall},
                      {"status", status},
                      {"files", w.files},
                      {"config", cfg.canonical()}};
        res.manifest = (w.dir / "manifest.json").string();
        write_file(res.manifest, manifest.dump(2) + "\n");
        res.files = w.files;
    };
    try {
        switch (cfg.kind) {
        case ExperimentKind::PdeSolve: run_pde_solve(cfg, w); break;
        case ExperimentKind::LambdaSweep: run_lambda_sweep(cfg, w); break;
        case ExperimentKind::FlowSim: run_flow_sim(cfg, w); break;
        case ExperimentKind::FlowModulus: run_flow_modulus(cfg, w); break;
        case ExperimentKind::MollifyConvergence: run_mollify_convergence(cfg, w); break;
        case ExperimentKind::Transport: run_transport(cfg, w); break;
        case ExperimentKind::WeakResidual: run_weak_residual(cfg, w); break;
        case ExperimentKind::NonuniquenessDemo: run_nonuniqueness(cfg, w); break;
        case ExperimentKind::ModulusVerify: run_modulus_verify(cfg, w); break;
        }
    } catch (const Error& e) {
        if (!w.files.empty()) finish(std::string("error: ") + to_string(e.kind()));
        throw;
    }
    finish("ok");
    return res;
}

}  // namespace stflow
