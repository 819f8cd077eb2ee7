#include "kho/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kho/decoherence.hpp"
#include "kho/experiments.hpp"
#include "kho/io.hpp"
#include "kho/observables.hpp"
#include "kho/oracles.hpp"
#include "kho/propagators.hpp"

namespace kho {

namespace {

// Loads a config file for a canned scenario; a "scenario" key in the file
// must agree with the subcommand that loaded it.
ExperimentConfig config_for(Scenario scenario, const std::string& config_path) {
    if (config_path.empty()) return default_config(scenario);
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("scenario")) {
        if (scenario_from_string(j["scenario"].get<std::string>()) != scenario)
            throw ConfigError("config scenario does not match the subcommand");
    } else {
        j["scenario"] = to_string(scenario);
    }
    return parse_experiment_config(j.dump());
}

struct ScenarioFlags {
    std::string config_path;
    std::string output_dir;
    int n_kicks = 0;
    int grid_n = 0;
    std::uint64_t seed = 0;
    bool no_snapshots = false;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--output", flags.output_dir, "artifact directory");
    cmd->add_option("--kicks", flags.n_kicks, "kick count override");
    cmd->add_option("--grid", flags.grid_n, "grid size override");
    cmd->add_option("--seed", flags.seed, "seed override");
    cmd->add_flag("--no-snapshots", flags.no_snapshots, "skip grid snapshot files");
}

int run_with_flags(Scenario scenario, const ScenarioFlags& flags) {
    ExperimentConfig cfg = config_for(scenario, flags.config_path);
    if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
    if (flags.n_kicks > 0) cfg.n_kicks = flags.n_kicks;
    if (flags.grid_n > 0) cfg.grid_n = flags.grid_n;
    if (flags.seed != 0) cfg.seed = flags.seed;
    if (flags.no_snapshots) cfg.write_snapshots = false;
    cfg.validate();
    std::cout << run_scenario(cfg);
    return 0;
}

struct Check {
    std::string name;
    bool passed;
    std::string detail;
};

// Desk-fast oracle suite: every propagation path cross-checked against an
// independent reference in a few seconds.
std::vector<Check> run_validation() {
    std::vector<Check> checks;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "ok   " : "FAIL ") << name << " (" << detail << ")\n" << std::flush;
        checks.push_back({name, ok, detail});
    };
    auto guarded = [&](const std::string& name, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            report(name, false, e.what());
        }
    };
    char buf[128];

    guarded("exactness block", [&] { // kick + rotation + convolution on a small grid
        GridSpec spec;
        spec.n_q = spec.n_p = 128;
        spec.q_min = spec.p_min = -6.0;
        spec.q_max = spec.p_max = 6.0;
        SystemParams params;
        params.K = 2.0;
        params.eta = 0.3;
        PhaseSpaceGrid g = new_coherent_state(spec, {0.8, -0.4}, 0.3, GridLabel::quantum);
        PhaseSpaceGrid r = g;
        for (int i = 0; i < 6; ++i) r = rotate(r, std::numbers::pi / 3.0);
        const double id_err = l1_distance(r, g);
        std::snprintf(buf, sizeof(buf), "L1 %.3g", id_err);
        report("six pi/3 rotations = identity", id_err < 1e-8, buf);

        PhaseSpaceGrid once = gaussian_convolve(g, 0.02, 0.01);
        PhaseSpaceGrid twice = gaussian_convolve(gaussian_convolve(g, 0.012, 0.004), 0.008, 0.006);
        const double semi_err = l1_distance(once, twice);
        std::snprintf(buf, sizeof(buf), "L1 %.3g", semi_err);
        report("convolution semigroup", semi_err < 1e-10, buf);

        PhaseSpaceGrid stepped = g;
        SystemParams free_params = params;
        free_params.K = 0.0;
        DecoherenceParams trivial;
        for (int i = 0; i < 6; ++i) stepped = step(stepped, free_params, StepMode::quantum, trivial);
        const double k0_err = l1_distance(stepped, g);
        std::snprintf(buf, sizeof(buf), "L1 %.3g", k0_err);
        report("K=0 step is a pure rotation", k0_err < 1e-7, buf);
    });

    guarded("reservoir block", [&] { // dissipative step vs the Ornstein-Uhlenbeck closed form
        GridSpec spec;
        spec.n_q = spec.n_p = 128;
        spec.q_min = spec.p_min = -6.0;
        spec.q_max = spec.p_max = 6.0;
        const double sigma0 = 0.5, eta = 0.3, gamma_tau = 0.4, nbar = 1.5;
        PhaseSpaceGrid g = new_coherent_state(spec, {0.9, -0.6}, sigma0, GridLabel::classical);
        PhaseSpaceGrid d = dissipative_step(g, gamma_tau, nbar, eta);
        const Moments m = grid_moments(d);
        const double c = std::exp(-gamma_tau / 2.0);
        const double var = sigma0 * sigma0 * std::exp(-gamma_tau) +
                           2.0 * (nbar + 0.5) * eta * eta * (1.0 - std::exp(-gamma_tau));
        const double err = std::max({std::abs(m.mean_q - 0.9 * c), std::abs(m.mean_p + 0.6 * c),
                                     std::abs(m.var_q - var), std::abs(m.var_p - var)});
        std::snprintf(buf, sizeof(buf), "max moment error %.3g", err);
        report("damped reservoir moments", err < 1e-6, buf);
    });

    guarded("state-vector block", [&] { // grid evolution vs the state-vector reference
        const double eta = 0.3;
        const int n = 512;
        const double hbar = 2.0 * eta * eta;
        const double w = std::sqrt(std::numbers::pi * hbar * n) / 2.0;
        GridSpec spec;
        spec.n_q = spec.n_p = n;
        spec.q_min = spec.p_min = -w;
        spec.q_max = spec.p_max = w;
        SystemParams params;
        params.K = 2.0;
        params.eta = eta;
        DecoherenceParams trivial;
        PhaseSpaceGrid grid = new_coherent_state(spec, {0.0, 0.0}, eta, GridLabel::quantum);
        WaveFunction wf = coherent_wavefunction(n, spec.q_min, spec.dq(), 0.0, 0.0, eta);
        double worst = 0.0;
        for (int kick = 0; kick < 3; ++kick) {
            grid = step(grid, params, StepMode::quantum, trivial);
            wf = evolve_state(wf, params);
            worst = std::max(worst, l1_distance(grid, wigner_of_state(wf, spec)));
        }
        std::snprintf(buf, sizeof(buf), "max L1 %.3g over 3 kicks", worst);
        report("grid vs state-vector evolution", worst < 1e-3, buf);
    });

    guarded("ensemble block", [&] { // grid classical evolution vs a Monte Carlo ensemble
        const int n = 512;
        GridSpec spec;
        spec.n_q = spec.n_p = n;
        spec.q_min = spec.p_min = -4.0 * std::numbers::pi;
        spec.q_max = spec.p_max = 4.0 * std::numbers::pi;
        SystemParams params;
        params.K = 2.0;
        params.eta = 0.2;
        DecoherenceParams deco;
        // strong enough diffusion that chaotic filaments stay resolved at 512^2
        deco.D = 1.5e-2;
        const double sigma = 0.25;
        const int m = 200000;
        PhaseSpaceGrid grid = new_coherent_state(spec, {0.0, 0.0}, sigma, GridLabel::classical);
        TrajectoryEnsemble ens = sample_gaussian_ensemble(m, {0.0, 0.0}, sigma, 7);
        for (int kick = 0; kick < 5; ++kick) {
            grid = step(grid, params, StepMode::classical, deco);
            ens = mc_step(ens, params, deco);
        }
        const PhaseSpaceGrid hist = histogram_ensemble(ens, spec);
        const double dist = l1_distance(grid, hist);
        int occupied = 0;
        const double count_floor = 1.0 / (m * spec.cell_area());
        for (const double v : grid.values)
            if (v >= count_floor) ++occupied;
        const double band = 3.0 * std::sqrt(static_cast<double>(occupied) / m);
        std::snprintf(buf, sizeof(buf), "L1 %.3g vs band %.3g", dist, band);
        report("grid vs Monte Carlo ensemble", dist < band, buf);
    });

    guarded("kernel block", [&] { // smoothed kernel magnitude bound
        double peak = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            const double y = -4.0 + 8.0 * i / 4000.0;
            peak = std::max(peak, std::abs(f_correction(y) * std::exp(-y * y)));
        }
        std::snprintf(buf, sizeof(buf), "max %.6f", peak);
        report("kernel correction bound 0.081", std::abs(peak - 0.0813) < 1e-3, buf);
    });

    guarded("lyapunov block", [&] { // lyapunov estimate vs the strong-chaos formula
        SystemParams params;
        params.K = 10.0;
        params.eta = 0.1;
        const LyapunovEstimate est = lyapunov_numeric(params, 0.0, 1000, 100, 11);
        const double ref = lyapunov_formula(10.0, params.nu_tau, 0.0, LyapunovWhich::ensemble);
        const double rel = std::abs(est.lambda - ref) / ref;
        std::snprintf(buf, sizeof(buf), "numeric %.4f formula %.4f (%.1f%%)", est.lambda, ref,
                      100.0 * rel);
        report("lyapunov numeric vs formula", rel < 0.10 && est.converged, buf);
    });

    return checks;
}

int cmd_validate() {
    const auto checks = run_validation();
    bool all = true;
    for (const auto& c : checks) all = all && c.passed;
    std::cout << (all ? "validate: all checks passed\n" : "validate: checks FAILED\n");
    if (!all) throw GuardError("validation suite failed");
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"kicked harmonic oscillator: quantum vs classical phase-space evolution"};
    app.require_subcommand(1);

    ScenarioFlags fig_flags[4];
    CLI::App* figs[4];
    const char* fig_names[4] = {"fig1", "fig2", "fig3", "fig4"};
    const char* fig_help[4] = {"unitary separation run (eta=0.3, K=2, D=0)",
                               "constant-chi collapse sweep",
                               "distribution snapshots before kick 20",
                               "max distance vs chi scan"};
    for (int i = 0; i < 4; ++i) {
        figs[i] = app.add_subcommand(fig_names[i], fig_help[i]);
        add_scenario_flags(figs[i], fig_flags[i]);
    }

    auto* simulate = app.add_subcommand("simulate", "run a custom JSON config");
    ScenarioFlags sim_flags;
    add_scenario_flags(simulate, sim_flags);
    simulate->get_option("--config")->required();

    auto* chi_cmd = app.add_subcommand("chi", "print chi(K, eta, D)");
    double chi_K = 0.0, chi_eta = 0.0, chi_D = 0.0;
    chi_cmd->add_option("--K", chi_K, "kick strength")->required();
    chi_cmd->add_option("--eta", chi_eta, "quantumness scale")->required();
    chi_cmd->add_option("--D", chi_D, "diffusion parameter")->required();

    auto* lyap = app.add_subcommand("lyapunov", "print formula and numeric estimates");
    double ly_K = 2.0, ly_nu_tau = kDefaultNuTau, ly_gamma = 0.0;
    int ly_kicks = 2000, ly_orbits = 100;
    std::uint64_t ly_seed = 1;
    bool ly_skip_numeric = false;
    lyap->add_option("--K", ly_K, "kick strength")->required();
    lyap->add_option("--nu-tau", ly_nu_tau, "rotation angle per kick");
    lyap->add_option("--gamma-tau", ly_gamma, "dissipation per kick");
    lyap->add_option("--kicks", ly_kicks, "kicks per orbit (>= 1000)");
    lyap->add_option("--orbits", ly_orbits, "orbit count (>= 100)");
    lyap->add_option("--seed", ly_seed, "seed");
    lyap->add_flag("--formula-only", ly_skip_numeric, "skip the numeric estimate");

    auto* render = app.add_subcommand("render", "convert a grid snapshot to a heatmap image");
    std::string render_in, render_out, render_palette = "signed";
    render->add_option("--in", render_in, "grid snapshot path")->required();
    render->add_option("--out", render_out, "output image path (portable pixmap)")->required();
    render->add_option("--palette", render_palette, "signed | unsigned");

    app.add_subcommand("validate", "run the oracle cross-check suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    for (int i = 0; i < 4; ++i)
        if (figs[i]->parsed()) return run_with_flags(static_cast<Scenario>(i), fig_flags[i]);
    if (simulate->parsed()) {
        ExperimentConfig cfg = load_experiment_config(sim_flags.config_path);
        if (!sim_flags.output_dir.empty()) cfg.output_dir = sim_flags.output_dir;
        if (sim_flags.n_kicks > 0) cfg.n_kicks = sim_flags.n_kicks;
        if (sim_flags.grid_n > 0) cfg.grid_n = sim_flags.grid_n;
        if (sim_flags.seed != 0) cfg.seed = sim_flags.seed;
        if (sim_flags.no_snapshots) cfg.write_snapshots = false;
        cfg.validate();
        std::cout << run_scenario(cfg);
        return 0;
    }
    if (chi_cmd->parsed()) {
        std::printf("%.2g\n", chi(chi_K, chi_eta, chi_D));
        return 0;
    }
    if (lyap->parsed()) {
        std::printf("formula ensemble %.6f\n",
                    lyapunov_formula(ly_K, ly_nu_tau, ly_gamma, LyapunovWhich::ensemble));
        std::printf("formula origin   %.6f\n",
                    lyapunov_formula(ly_K, ly_nu_tau, ly_gamma, LyapunovWhich::origin));
        if (!ly_skip_numeric) {
            SystemParams params;
            params.K = ly_K;
            params.nu_tau = ly_nu_tau;
            const LyapunovEstimate est =
                lyapunov_numeric(params, ly_gamma, ly_kicks, ly_orbits, ly_seed);
            std::printf("numeric          %.6f (%s, %d orbits x %d kicks)\n", est.lambda,
                        est.converged ? "converged" : "NOT converged", est.n_orbits, est.n_kicks);
        }
        return 0;
    }
    if (render->parsed()) {
        const GridSnapshot snap = read_grid_snapshot(render_in);
        write_heatmap_ppm(render_out, snap.grid, palette_from_string(render_palette));
        std::cout << "wrote " << render_out << '\n';
        return 0;
    }
    return cmd_validate();
}

} // namespace

int cli_main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const GuardError& e) {
        std::cerr << "guard failure: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace kho
