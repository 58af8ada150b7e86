#include "vpstab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vpstab/bounds.hpp"
#include "vpstab/csv.hpp"
#include "vpstab/error.hpp"
#include "vpstab/parallel.hpp"
#include "vpstab/verify.hpp"
#include "vpstab/version.hpp"

namespace vpstab {

namespace {

namespace fs = std::filesystem;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    const fs::path p = fs::path(dir) / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

nlohmann::ordered_json jnum(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double moment_or_nan(const PhaseEnsemble& ens, double c, const OrliczIndex& idx) {
    if (idx.is_infinite()) return kNaN;
    try {
        return moment_M(ens, c, idx);
    } catch (const RangeError&) {
        return std::numeric_limits<double>::infinity();
    }
}

Trajectory run_flow(const ScenarioConfig& cfg, const PhaseEnsemble& ens, const FlowConfig& flow) {
    return integrate(ens, make_field_model(cfg.kernel, ens), flow);
}

// Same paired subset of both twins: one index drawn from each of m equal
// blocks, weights rescaled to the full mass.
std::pair<DiscreteMeasure, DiscreteMeasure> paired_subsample(const PhaseEnsemble& a, const PhaseEnsemble& b,
                                                             std::size_t m, std::uint64_t seed) {
    const std::size_t n = a.size();
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pick;
    for (std::size_t s = 0; s < m; ++s) {
        const std::size_t lo = s * n / m, hi = (s + 1) * n / m;
        std::uniform_int_distribution<std::size_t> u(lo, hi - 1);
        pick.push_back(u(rng));
    }
    const auto build = [&](const PhaseEnsemble& e) {
        DiscreteMeasure out;
        out.dim = 2 * e.dim;
        double sub = 0.0;
        for (std::size_t i : pick) sub += e.weights[i];
        const double scale = e.total_mass() / sub;
        for (std::size_t i : pick) {
            out.weights.push_back(e.weights[i] * scale);
            for (double x : e.position(i)) out.points.push_back(x);
            for (double v : e.velocity(i)) out.points.push_back(v);
        }
        return out;
    };
    return {build(a), build(b)};
}

}  // namespace

int cmd_simulate(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& log) {
    const PhaseEnsemble ens = generate_initial(cfg.initial, cfg.seed);
    const Trajectory traj = run_flow(cfg, ens, cfg.flow);
    {
        auto os = open_out(out_dir, "trajectory.csv");
        write_trajectory_csv(os, traj, cfg.hash);
    }
    auto os = open_out(out_dir, "norms.csv");
    csv::write_provenance(os, cfg.hash);
    const int d = ens.dim;
    os << "t,mass";
    for (int k = 1; k <= d; ++k) os << ",p" << k;
    os << ",moment_M,luxemburg\n";
    for (std::size_t s = 0; s < traj.size(); ++s) {
        const auto& st = traj.states[s];
        const Point p = st.momentum();
        os << csv::num(traj.times[s]) << ',' << csv::num(st.total_mass());
        for (int k = 0; k < d; ++k) os << ',' << csv::num(p[k]);
        os << ',' << csv::num(moment_or_nan(st, cfg.verify.moment_c, cfg.idx)) << ','
           << csv::num(luxemburg_norm(density_histogram(st, cfg.histogram_h), cfg.idx)) << '\n';
    }
    log << "simulate: " << traj.size() << " snapshots written to " << out_dir << '\n';
    return kExitOk;
}

int cmd_twin(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& log) {
    const PhaseEnsemble e1 = generate_initial(cfg.initial, cfg.seed);
    const PhaseEnsemble e2 = perturb(e1, cfg.twin, cfg.seed + 1);
    const double T = cfg.flow.t_end;

    const CouplingGap g0 = identity_coupling_gap(e1, e2);
    const double X0 = g0.x_gap, V0 = g0.v_gap;
    const double A_T = (1.0 + T) * (X0 + V0);
    if (!(A_T < 1.0 / 9.0)) {
        throw PreconditionError("hypothesis violated: (1+T)(X(0)+V(0)) >= 1/9 (value " + csv::num(A_T) + ")");
    }

    const FieldModel model = make_field_model(cfg.kernel, e1);
    const auto [t1, t2] = integrate_twin(e1, e2, model, cfg.flow);
    const std::size_t n = e1.size();
    const bool subsample = 2 * n > cfg.transport.cap;
    const bool run_sinkhorn = subsample && n <= cfg.transport.sinkhorn_max_atoms;

    std::vector<double> X, V, W1, W1s;
    for (std::size_t s = 0; s < t1.size(); ++s) {
        const CouplingGap g = identity_coupling_gap(t1.states[s], t2.states[s]);
        X.push_back(g.x_gap);
        V.push_back(g.v_gap);
        const DiscreteMeasure m1 = phase_measure(t1.states[s]);
        const DiscreteMeasure m2 = phase_measure(t2.states[s]);
        if (!subsample) {
            W1.push_back(w1_exact(m1, m2, {cfg.transport.cap}).cost);
        } else {
            const auto [s1, s2] = paired_subsample(t1.states[s], t2.states[s], cfg.transport.cap / 2,
                                                   cfg.transport.subsample_seed);
            W1.push_back(w1_exact(s1, s2, {cfg.transport.cap}).cost);
        }
        W1s.push_back(run_sinkhorn
                          ? w1_sinkhorn(m1, m2, cfg.transport.sinkhorn_reg, cfg.transport.sinkhorn_iter).cost
                          : kNaN);
    }

    const double B = W1.front();
    const bool gap_positive = X0 + V0 > 0.0 && B > 0.0;
    EnvelopeParams p;
    p.idx = cfg.idx;
    p.B = B;
    p.A = A_T;
    p.T = T;
    p.eps = cfg.envelope.eps;
    p.cprime = cfg.envelope.cprime;
    p.C = cfg.envelope.C;
    p.c = cfg.envelope.c;
    EnvelopeFit fit;
    const bool w1_hypothesis = gap_positive && B < 1.0 && std::pow(1.0 + T, 1.0 + p.eps) * B < 1.0 / 18.0;
    if (gap_positive && cfg.envelope.fit) {
        if (w1_hypothesis) {
            fit = fit_envelope(t1.times, X, W1, X0, V0, p);
        } else {
            fit = fit_rate(t1.times, X, X0, V0, p.idx, T);
        }
        if (fit.c_found) p.c = fit.c;
        if (fit.C_found) p.C = fit.C;
    }
    const bool have_c = gap_positive && (!cfg.envelope.fit || fit.c_found);
    const bool have_C = have_c && w1_hypothesis && (!cfg.envelope.fit || fit.C_found);

    std::vector<double> env_x(X.size(), kNaN), env_w(X.size(), kNaN);
    bool dom_x = have_c, dom_w = have_C, dom_id = true;
    double id_slack = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < X.size(); ++s) {
        if (have_c) {
            try {
                env_x[s] = envelope_x(t1.times[s], p, X0, V0);
            } catch (const DomainError&) {
            }
            dom_x = dom_x && dominated(X[s], env_x[s]);
        }
        if (have_C) {
            try {
                env_w[s] = envelope_w1(t1.times[s], p);
            } catch (const DomainError&) {
            }
            dom_w = dom_w && dominated(W1[s], env_w[s]);
        }
        if (!subsample) {
            id_slack = std::max(id_slack, W1[s] - (X[s] + V[s]));
            dom_id = dom_id && W1[s] <= X[s] + V[s] + 1e-9;
        }
    }

    {
        auto os = open_out(out_dir, "stability.csv");
        csv::write_provenance(os, cfg.hash);
        os << "t,X,V,X_plus_V,W1,W1_sinkhorn,envelope_x,envelope_w1\n";
        for (std::size_t s = 0; s < X.size(); ++s) {
            os << csv::num(t1.times[s]) << ',' << csv::num(X[s]) << ',' << csv::num(V[s]) << ','
               << csv::num(X[s] + V[s]) << ',' << csv::num(W1[s]) << ',' << csv::num(W1s[s]) << ','
               << csv::num(env_x[s]) << ',' << csv::num(env_w[s]) << '\n';
        }
    }
    {
        auto os = open_out(out_dir, "envelope.csv");
        csv::write_provenance(os, cfg.hash);
        os << "t,envelope,measured_w1,measured_X,measured_V\n";
        for (std::size_t s = 0; s < X.size(); ++s) {
            os << csv::num(t1.times[s]) << ',' << csv::num(env_w[s]) << ',' << csv::num(W1[s]) << ','
               << csv::num(X[s]) << ',' << csv::num(V[s]) << '\n';
        }
    }
    nlohmann::ordered_json j;
    j["version"] = std::string(kVersion);
    j["config_hash"] = cfg.hash;
    j["alpha"] = jnum(cfg.idx.alpha);
    j["mode"] = cfg.envelope.fit ? "fit" : "fixed";
    j["c"] = have_c ? jnum(p.c) : nullptr;
    j["C"] = have_C ? jnum(p.C) : nullptr;
    j["c_found"] = fit.c_found;
    j["C_found"] = fit.C_found;
    j["X0"] = X0;
    j["V0"] = V0;
    j["B"] = B;
    j["A"] = A_T;
    j["T"] = T;
    j["t_star"] = gap_positive ? jnum(t_star(cfg.idx, A_T, p.c)) : nullptr;
    j["t_star_lower"] = gap_positive && B < 1.0 ? jnum(t_star_lower(p)) : nullptr;
    j["w1_hypothesis"] = w1_hypothesis;
    j["dominance_x"] = dom_x;
    j["dominance_w1"] = dom_w;
    j["identity_domination"] = subsample ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(dom_id);
    j["identity_max_slack"] = subsample ? nlohmann::ordered_json(nullptr) : jnum(id_slack);
    j["subsampled"] = subsample;
    j["subsample_atoms"] = subsample ? cfg.transport.cap / 2 : n;
    j["subsample_seed"] = cfg.transport.subsample_seed;
    j["snapshots"] = X.size();
    {
        auto os = open_out(out_dir, "fit.json");
        os << j.dump(2) << '\n';
    }
    log << "twin: " << X.size() << " snapshots, c=" << (have_c ? csv::num(p.c) : "n/a")
        << " C=" << (have_C ? csv::num(p.C) : "n/a") << '\n';
    return kExitOk;
}

int cmd_verify(const ScenarioConfig& cfg, const std::string& lemma, const std::string& out_dir, std::ostream& log) {
    const auto& v = cfg.verify;
    LemmaReport report;
    if (lemma == "kernel-2.1") {
        const int d = cfg.initial.dim;
        TestDensity g;
        if (v.density == "borderline") {
            g = TestDensity::borderline(d, v.density_alpha);
        } else if (v.density == "uniform-ball") {
            g = TestDensity::uniform_ball(d);
        } else {
            g = TestDensity::gaussian_like(d);
        }
        KernelLemmaConfig kc;
        kc.r_min = v.r_min;
        kc.r_max = v.r_max;
        kc.separations = v.separations;
        kc.directions = v.directions;
        kc.seed = cfg.seed;
        kc.slope_min = v.slope_min;
        kc.slope_max = v.slope_max;
        report = kernel_lemma_check(g, cfg.idx, kc);
    } else if (lemma == "moment-3.2") {
        const PhaseEnsemble ens = generate_initial(cfg.initial, cfg.seed);
        FlowConfig fine = cfg.flow;
        fine.dt = cfg.flow.dt / 2.0;
        fine.record_every = cfg.flow.record_every * 2;
        report = moment_inequality_stability(run_flow(cfg, ens, cfg.flow), run_flow(cfg, ens, fine), v.moment_c,
                                             cfg.idx, v.stability_tol);
    } else if (lemma == "interp-3.1") {
        report = exp_moment_orlicz_check(generate_initial(cfg.initial, cfg.seed), v.moment_c, cfg.idx, cfg.histogram_h);
    } else if (lemma == "prop-1.1") {
        const PhaseEnsemble ens = generate_initial(cfg.initial, cfg.seed);
        report = proposition_rho_bound(run_flow(cfg, ens, cfg.flow), cfg.idx, cfg.histogram_h, v.rho_slope_tol);
    } else if (lemma == "log2lip-1.2") {
        KernelSpec spec;
        if (cfg.kernel.kind == FieldKind::Sin) {
            spec = sin_test_kernel(cfg.initial.dim);
        } else if (cfg.kernel.kind == FieldKind::Newton) {
            const double eps = cfg.kernel.softening < 0.0 ? default_softening(generate_initial(cfg.initial, cfg.seed))
                                                          : cfg.kernel.softening;
            if (!(eps > 0.0)) throw ConfigError("kernel.softening: log2lip-1.2 needs a bounded (softened) kernel");
            spec = KernelSpec::newton(cfg.initial.dim, cfg.kernel.sign, eps);
        } else {
            throw ConfigError("kernel.kind: log2lip-1.2 needs a kernel, not free streaming");
        }
        Log2LipConfig lc;
        lc.h_min = v.h_min;
        lc.h_max = v.h_max;
        lc.seed = cfg.seed;
        report = log2lip_check(spec, lc);
    } else {
        throw ConfigError("unknown lemma id '" + lemma +
                          "' (expected kernel-2.1, moment-3.2, interp-3.1, prop-1.1 or log2lip-1.2)");
    }
    const std::string name = "verify_" + lemma + ".json";
    {
        auto os = open_out(out_dir, name);
        write_report_json(os, report, cfg.hash);
    }
    const std::string path = (fs::path(out_dir) / name).string();
    log << lemma << ": " << (report.pass ? "pass" : "FAIL") << " worst_ratio=" << csv::num(report.worst_ratio)
        << " fitted_constant=" << csv::num(report.fitted_constant) << " slope=" << csv::num(report.slope)
        << " report=" << path << '\n';
    return report.pass ? kExitOk : kExitLemma;
}

int cmd_bound(const BoundArgs& a, std::ostream& out) {
    const OrliczIndex idx = OrliczIndex::make(a.alpha);
    if (!(a.A > 0.0 && a.A < 1.0 / 9.0)) throw PreconditionError("hypothesis violated: need 0 < A < 1/9");
    if (!(a.c > 0.0)) throw PreconditionError("hypothesis violated: need c > 0");
    if (a.rows < 2) throw PreconditionError("need at least two rows");
    const double ts = t_star(idx, a.A, a.c);
    EnvelopeParams p;
    p.idx = idx;
    p.A = a.A;
    p.B = a.B;
    p.c = a.c;
    p.C = a.C;
    p.eps = a.eps;
    p.T = a.T;
    p.cprime = a.cprime;
    const bool with_w1 = a.B > 0.0;
    csv::write_provenance(out, "");
    out << "# t_star=" << csv::num(ts) << '\n';
    if (with_w1) out << "# t_star_lower=" << csv::num(t_star_lower(p)) << '\n';
    out << "t,G,exp_minus_G,envelope_w1\n";
    const double t_max = a.t_max >= 0.0 ? a.t_max : ts;
    for (int i = 0; i < a.rows; ++i) {
        const double t = (i == a.rows - 1) ? t_max : t_max * i / (a.rows - 1);
        double G = kNaN;
        try {
            G = g_closed(t, a.A, a.c, idx);
        } catch (const DomainError&) {
        }
        double w = kNaN;
        if (with_w1) {
            try {
                w = envelope_w1(t, p);
            } catch (const DomainError&) {
            }
        }
        out << csv::num(t) << ',' << csv::num(G) << ',' << csv::num(std::exp(-G)) << ',' << csv::num(w) << '\n';
    }
    return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stability experiments for particle Vlasov-Poisson flows", "vpstab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    std::string config_path, out_dir;
    int threads = 0;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Scenario INI file");
    app.add_option("--out", out_dir, "Output directory (defaults to run.out)");
    app.add_option("--threads", threads, "Worker threads (default: all)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "Override run.seed");
    app.fallthrough();

    auto* sim = app.add_subcommand("simulate", "Integrate one ensemble");
    auto* twin = app.add_subcommand("twin", "Run a perturbed twin pair and fit the envelopes");
    auto* ver = app.add_subcommand("verify", "Numerically check one lemma");
    std::string lemma;
    ver->add_option("lemma", lemma, "kernel-2.1 | moment-3.2 | interp-3.1 | prop-1.1 | log2lip-1.2")->required();
    auto* bnd = app.add_subcommand("bound", "Print envelope values");
    BoundArgs ba;
    std::string alpha_text = "1";
    bnd->add_option("--alpha", alpha_text, "Orlicz exponent (number or inf)");
    bnd->add_option("--A", ba.A, "Gap parameter in (0, 1/9)")->required();
    bnd->add_option("--c", ba.c, "Rate constant");
    bnd->add_option("--B", ba.B, "Initial W1 distance (enables the W1 envelope)");
    bnd->add_option("--C", ba.C, "Envelope prefactor");
    bnd->add_option("--eps", ba.eps, "Smallness exponent");
    bnd->add_option("--T", ba.T, "Horizon");
    bnd->add_option("--cprime", ba.cprime, "Horizon lower-bound constant");
    bnd->add_option("--t-max", ba.t_max, "Last tabulated time (default T*)");
    bnd->add_option("--rows", ba.rows, "Number of rows");
    auto* w1 = app.add_subcommand("w1", "W1 distance between two measure CSV files");
    std::string file_a, file_b, method = "exact";
    double reg = 1e-2;
    w1->add_option("a", file_a, "Measure CSV (w,x1..xn)")->required()->check(CLI::ExistingFile);
    w1->add_option("b", file_b, "Measure CSV (w,x1..xn)")->required()->check(CLI::ExistingFile);
    w1->add_option("--method", method, "exact | sinkhorn")->check(CLI::IsMember({"exact", "sinkhorn"}));
    w1->add_option("--reg", reg, "Sinkhorn regularization");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (threads > 0) set_num_threads(threads);
        const auto load = [&]() {
            if (config_path.empty()) throw ConfigError("--config is required for this command");
            const std::uint64_t s = seed.value_or(0);
            ScenarioConfig cfg = load_config(config_path, seed ? &s : nullptr);
            if (out_dir.empty()) out_dir = cfg.out;
            return cfg;
        };
        if (*sim) return cmd_simulate(load(), out_dir, out);
        if (*twin) return cmd_twin(load(), out_dir, out);
        if (*ver) return cmd_verify(load(), lemma, out_dir, out);
        if (*bnd) {
            if (alpha_text == "inf" || alpha_text == "infinity") {
                ba.alpha = std::numeric_limits<double>::infinity();
            } else {
                try {
                    ba.alpha = std::stod(alpha_text);
                } catch (const std::exception&) {
                    throw PreconditionError("--alpha: expected a number or inf");
                }
            }
            return cmd_bound(ba, out);
        }
        if (*w1) {
            std::ifstream ia(file_a), ib(file_b);
            const DiscreteMeasure ma = read_measure_csv(ia), mb = read_measure_csv(ib);
            if (method == "exact") {
                const TransportPlan plan = w1_exact(ma, mb);
                out << "w1=" << csv::num(plan.cost) << '\n';
                if (!out_dir.empty()) {
                    auto os = open_out(out_dir, "plan.csv");
                    write_plan_csv(os, plan);
                }
            } else {
                const SinkhornResult r = w1_sinkhorn(ma, mb, reg, 10000);
                out << "w1_sinkhorn=" << csv::num(r.cost) << " marginal_violation=" << csv::num(r.marginal_violation)
                    << " converged=" << (r.converged ? "true" : "false") << '\n';
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalBlowup& e) {
        err << "numerical blowup at t=" << csv::num(e.time()) << " particle " << e.particle() << ": " << e.what()
            << '\n';
        return kExitBlowup;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitHypothesis;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitHypothesis;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace vpstab
