#include "kho/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kho/io.hpp"
#include "kho/oracles.hpp"
#include "kho/propagators.hpp"

namespace kho {

namespace {

constexpr double kMinWindowHalf = 8.0; // a few 2*pi web cells

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Independent sweep jobs drained from a shared queue; each job owns its
// preassigned result slot, so merged output order never depends on timing.
void run_jobs(std::vector<std::function<void()>>& jobs) {
    unsigned workers = std::min<unsigned>(
        {static_cast<unsigned>(jobs.size()), std::max(1u, std::thread::hardware_concurrency()), 4u});
    if (workers <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto drain = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                jobs[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

int auto_grid_n(double eta, double D, double K) {
    for (int n : {256, 512, 1024, 2048, 4096, 8192}) {
        if (n * eta / 2.0 < kMinWindowHalf) continue;
        // A kick folds momentum-frequency content above mu_cut = pi/(K dq)
        // past the q-Nyquist line. Require the state's spectrum (initial
        // Gaussian, clipped by the per-kick blur exp(-D mu^2)) to be below
        // ~1e-4 there, so the folded mass stays far under the edge budget.
        const double w = std::min(4.0 * std::numbers::pi, n * eta / 2.0);
        const double cut = std::numbers::pi * n / (2.0 * w * std::max(K, 1.0));
        if (D * cut * cut + 0.5 * eta * eta * cut * cut >= 9.2) return n;
    }
    throw ConfigError("no grid up to n = 8192 meets the window and resolution floors");
}

double eta_for_chi(double chi_target, double K, double D) {
    if (!(chi_target > 0.0) || !(K > 0.0) || !(D > 0.0))
        throw ConfigError("chi sweep needs chi > 0, K > 0 and D > 0");
    return std::pow(chi_target * D * std::sqrt(D) / K, 0.25);
}

CurveResult run_curve(const ExperimentConfig& cfg, double eta, double D, int grid_n,
                      const PairObserver& observer = nullptr) {
    SystemParams params = cfg.params;
    params.eta = eta;
    DecoherenceParams deco = cfg.deco;
    deco.D = D;
    const GridSpec spec = resolve_grid(eta, grid_n, cfg.window_half);
    const PhaseSpaceGrid q0 = new_coherent_state(spec, cfg.center, eta, GridLabel::quantum);
    const PhaseSpaceGrid c0 = new_coherent_state(spec, cfg.center, eta, GridLabel::classical);

    CurveResult result;
    result.eta = eta;
    result.D = D;
    result.series = evolve_pair(q0, c0, params, deco, cfg.n_kicks, observer);
    result.chi_value = result.series.chi_value;
    try {
        const PeakResult peak = detect_first_peak(result.series.distances());
        result.peak_found = true;
        result.peak_n = peak.n;
        result.peak_value = peak.value;
    } catch (const DomainError&) {
        result.peak_found = false;
    }
    return result;
}

ParamList resolved_params(const ExperimentConfig& cfg, double eta, double D, const GridSpec& spec) {
    ParamList out;
    out.emplace_back("scenario", to_string(cfg.scenario));
    out.emplace_back("K", format_real(cfg.params.K));
    out.emplace_back("eta", format_real(eta));
    out.emplace_back("nu_tau", format_real(cfg.params.nu_tau));
    out.emplace_back("tau", format_real(cfg.params.tau));
    out.emplace_back("D", format_real(D));
    out.emplace_back("gamma_tau", format_real(cfg.deco.gamma_tau));
    out.emplace_back("nbar", format_real(cfg.deco.nbar));
    out.emplace_back("n_kicks", std::to_string(cfg.n_kicks));
    out.emplace_back("grid_n", std::to_string(spec.n_q));
    out.emplace_back("window_half", format_real(spec.q_max));
    out.emplace_back("center_q", format_real(cfg.center.first));
    out.emplace_back("center_p", format_real(cfg.center.second));
    out.emplace_back("seed", std::to_string(cfg.seed));
    return out;
}

} // namespace

std::string to_string(Scenario s) {
    switch (s) {
    case Scenario::fig1_unitary: return "fig1_unitary";
    case Scenario::fig2_collapse: return "fig2_collapse";
    case Scenario::fig3_snapshots: return "fig3_snapshots";
    case Scenario::fig4_chi_scan: return "fig4_chi_scan";
    case Scenario::custom: return "custom";
    }
    throw DomainError("unknown scenario value");
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "fig1" || s == "fig1_unitary") return Scenario::fig1_unitary;
    if (s == "fig2" || s == "fig2_collapse") return Scenario::fig2_collapse;
    if (s == "fig3" || s == "fig3_snapshots") return Scenario::fig3_snapshots;
    if (s == "fig4" || s == "fig4_chi_scan") return Scenario::fig4_chi_scan;
    if (s == "custom") return Scenario::custom;
    throw ConfigError("unknown scenario '" + s + "'");
}

void ExperimentConfig::validate() const {
    params.validate();
    deco.validate();
    if (n_kicks < 1) throw ConfigError("n_kicks must be >= 1");
    const bool auto_n = scenario == Scenario::fig4_chi_scan && grid_n == 0;
    if (!auto_n && grid_n < 16) throw ConfigError("grid_n must be >= 16");
    if (window_half < 0.0) throw ConfigError("window_half must be >= 0");
    if (mc_trajectories < 0) throw ConfigError("mc_trajectories must be >= 0");
    if (chi_target < 0.0) throw ConfigError("chi_target must be >= 0");
    for (const auto& pt : pairs) {
        if (!(pt.eta > 0.0) || pt.D < 0.0 || pt.grid_n < 0 || pt.window_half < 0.0)
            throw ConfigError("sweep pairs need eta > 0, D >= 0, grid_n >= 0, window_half >= 0");
    }
    for (const double t : chi_targets)
        if (!(t > 0.0)) throw ConfigError("chi targets must be > 0");
    switch (scenario) {
    case Scenario::fig1_unitary:
        if (!deco.trivial()) throw ConfigError("fig1 runs unitary evolution: set D and gamma_tau to 0");
        break;
    case Scenario::fig2_collapse:
    case Scenario::fig3_snapshots:
        if (pairs.empty()) throw ConfigError("this scenario needs a nonempty (eta, D) pair list");
        break;
    case Scenario::fig4_chi_scan:
        if (chi_targets.empty()) throw ConfigError("fig4 needs a nonempty chi target list");
        if (!(deco.D > 0.0)) throw ConfigError("fig4 needs D > 0");
        break;
    case Scenario::custom:
        break;
    }
}

ExperimentConfig default_config(Scenario scenario) {
    ExperimentConfig cfg;
    cfg.scenario = scenario;
    cfg.params.K = 2.0;
    cfg.params.eta = 0.1;
    cfg.params.nu_tau = kDefaultNuTau;
    cfg.params.tau = 1.0;
    cfg.n_kicks = 20;
    cfg.grid_n = 1024;
    cfg.seed = 1;
    switch (scenario) {
    case Scenario::fig1_unitary:
        cfg.params.eta = 0.3;
        break;
    case Scenario::fig2_collapse:
        // Desk subset of the constant-chi family; smaller eta needs grids
        // beyond desk memory at the resolution floor. The strongest-noise
        // member spreads past the default two-web-cell window before kick 20,
        // so it carries its own wider window.
        cfg.pairs = {{0.1, 5.13e-2, 0, 6.0 * std::numbers::pi},
                     {0.04, 4.5e-3, 0, 0.0},
                     {0.02, 7e-4, 0, 0.0}};
        break;
    case Scenario::fig3_snapshots:
        cfg.pairs = {{0.04, 4.5e-3, 1024}, {0.007, 4.5e-5, 4096}};
        break;
    case Scenario::fig4_chi_scan:
        cfg.deco.D = 4.5e-4;
        cfg.chi_targets.clear();
        for (int k = 0; k < 6; ++k) // six log-spaced targets over [1e-2, 1]
            cfg.chi_targets.push_back(std::pow(10.0, -2.0 + 0.4 * k));
        cfg.grid_n = 0; // auto-sized per sweep point
        break;
    case Scenario::custom:
        break;
    }
    return cfg;
}

namespace {

ExperimentConfig overlay_json(ExperimentConfig cfg, const nlohmann::json& j) {
    static const char* known[] = {"scenario", "K",          "eta",        "nu_tau",
                                  "tau",      "D",          "gamma_tau",  "nbar",
                                  "pairs",    "chi_targets", "chi_target", "n_kicks",
                                  "grid_n",   "window_half", "center",     "mc_trajectories",
                                  "seed",     "output_dir",  "write_snapshots"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return key == k; }) == std::end(known))
            throw ConfigError("unknown config key '" + key + "'");
    }
    try {
        if (j.contains("K")) cfg.params.K = j["K"].get<double>();
        if (j.contains("eta")) cfg.params.eta = j["eta"].get<double>();
        if (j.contains("nu_tau")) cfg.params.nu_tau = j["nu_tau"].get<double>();
        if (j.contains("tau")) cfg.params.tau = j["tau"].get<double>();
        if (j.contains("D")) cfg.deco.D = j["D"].get<double>();
        if (j.contains("gamma_tau")) cfg.deco.gamma_tau = j["gamma_tau"].get<double>();
        if (j.contains("nbar")) cfg.deco.nbar = j["nbar"].get<double>();
        if (j.contains("pairs")) {
            cfg.pairs.clear();
            for (const auto& row : j["pairs"]) {
                if (!row.is_array() || row.size() < 2 || row.size() > 4)
                    throw ConfigError(
                        "each pair must be [eta, D], [eta, D, grid_n] or "
                        "[eta, D, grid_n, window_half]");
                SweepPoint pt;
                pt.eta = row[0].get<double>();
                pt.D = row[1].get<double>();
                pt.grid_n = row.size() >= 3 ? row[2].get<int>() : 0;
                pt.window_half = row.size() == 4 ? row[3].get<double>() : 0.0;
                cfg.pairs.push_back(pt);
            }
        }
        if (j.contains("chi_targets")) cfg.chi_targets = j["chi_targets"].get<std::vector<double>>();
        if (j.contains("chi_target")) cfg.chi_target = j["chi_target"].get<double>();
        if (j.contains("n_kicks")) cfg.n_kicks = j["n_kicks"].get<int>();
        if (j.contains("grid_n")) cfg.grid_n = j["grid_n"].get<int>();
        if (j.contains("window_half")) cfg.window_half = j["window_half"].get<double>();
        if (j.contains("center")) {
            const auto& c = j["center"];
            if (!c.is_array() || c.size() != 2) throw ConfigError("center must be [q, p]");
            cfg.center = {c[0].get<double>(), c[1].get<double>()};
        }
        if (j.contains("mc_trajectories")) cfg.mc_trajectories = j["mc_trajectories"].get<int>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("write_snapshots")) cfg.write_snapshots = j["write_snapshots"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config value: " + std::string(e.what()));
    }
    cfg.validate();
    return cfg;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    Scenario scenario = Scenario::custom;
    if (j.contains("scenario")) scenario = scenario_from_string(j["scenario"].get<std::string>());
    return overlay_json(default_config(scenario), j);
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

GridSpec resolve_grid(double eta, int n, double window_half) {
    if (n < 16) throw ConfigError("grid size must be at least 16");
    if (!(eta > 0.0)) throw ConfigError("eta must be > 0");
    double w = window_half;
    if (w == 0.0) {
        w = std::min(4.0 * std::numbers::pi, n * eta / 2.0);
        if (w < kMinWindowHalf)
            throw ConfigError("grid too coarse: the dynamic window needs n * eta / 2 >= 8");
    } else if (!(w > 0.0)) {
        throw ConfigError("window_half must be > 0");
    }
    GridSpec spec;
    spec.n_q = spec.n_p = n;
    spec.q_min = spec.p_min = -w;
    spec.q_max = spec.p_max = w;
    spec.validate();
    return spec;
}

UnitaryResult run_fig1(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.deco.trivial()) throw ConfigError("fig1 runs unitary evolution");
    const GridSpec spec = resolve_grid(cfg.params.eta, cfg.grid_n, cfg.window_half);

    // With no noise the chaotic stretching outruns any fixed grid, and the
    // spectral classical kick aliases into negative values once filaments
    // drop below one cell. The classical member is therefore evolved exactly
    // along characteristics; the quantum member keeps the spectral engine.
    PhaseSpaceGrid wq = new_coherent_state(spec, cfg.center, cfg.params.eta, GridLabel::quantum);
    BacktraceLattice lattice = new_backtrace_lattice(spec, cfg.center, cfg.params.eta);

    UnitaryResult result;
    CurveResult& curve = result.curve;
    curve.eta = cfg.params.eta;
    curve.D = 0.0;
    curve.series.params = cfg.params;
    curve.series.deco = cfg.deco;
    auto record = [&](int n, const PhaseSpaceGrid& q, const PhaseSpaceGrid& c) {
        curve.series.records.push_back(
            {n, l1_distance(q, c), riemann_norm(q), riemann_norm(c), negativity_volume(q)});
    };
    record(0, wq, backtrace_grid(lattice));
    for (int n = 1; n <= cfg.n_kicks; ++n) {
        wq = step(wq, cfg.params, StepMode::quantum, cfg.deco);
        backtrace_advance(lattice, cfg.params);
        record(n, wq, backtrace_grid(lattice));
    }
    try {
        const PeakResult peak = detect_first_peak(curve.series.distances());
        curve.peak_found = true;
        curve.peak_n = peak.n;
        curve.peak_value = peak.value;
    } catch (const DomainError&) {
        curve.peak_found = false;
    }
    if (curve.peak_found) {
        // Deterministic replay to capture the pair at the detected peak.
        PhaseSpaceGrid q2 = new_coherent_state(spec, cfg.center, cfg.params.eta, GridLabel::quantum);
        BacktraceLattice lat2 = new_backtrace_lattice(spec, cfg.center, cfg.params.eta);
        for (int n = 1; n <= curve.peak_n; ++n) {
            q2 = step(q2, cfg.params, StepMode::quantum, cfg.deco);
            backtrace_advance(lat2, cfg.params);
        }
        result.peak_quantum = q2;
        result.peak_classical = backtrace_grid(lat2);
        result.peak_negativity_quantum = negativity_volume(result.peak_quantum);
        result.peak_negativity_classical = negativity_volume(result.peak_classical);
    }
    return result;
}

CollapseResult run_fig2(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.pairs.empty()) throw ConfigError("fig2 needs a nonempty pair list");
    CollapseResult result;
    result.curves.resize(cfg.pairs.size());

    std::vector<std::function<void()>> jobs;
    for (size_t i = 0; i < cfg.pairs.size(); ++i) {
        jobs.emplace_back([&, i] {
            const SweepPoint& pt = cfg.pairs[i];
            const int n = pt.grid_n > 0 ? pt.grid_n : cfg.grid_n;
            ExperimentConfig local = cfg;
            if (pt.window_half > 0.0) local.window_half = pt.window_half;
            result.curves[i] = run_curve(local, pt.eta, pt.D, n);
        });
    }
    run_jobs(jobs);

    const double target = cfg.chi_target > 0.0 ? cfg.chi_target : result.curves.front().chi_value;
    std::vector<std::pair<double, double>> eta_npeak;
    for (const auto& curve : result.curves) {
        if (std::abs(curve.chi_value - target) > 0.05 * target)
            result.flagged.push_back("eta=" + format_compact(curve.eta) +
                                     " chi=" + format_compact(curve.chi_value));
        if (!curve.peak_found)
            throw DomainError("no distance peak found for eta=" + format_compact(curve.eta));
        eta_npeak.emplace_back(curve.eta, static_cast<double>(curve.peak_n));
    }
    result.fit = fit_peak_scaling(eta_npeak);
    result.collapse_spread = collapse_spread(result.curves);
    return result;
}

double collapse_spread(const std::vector<CurveResult>& curves) {
    if (curves.size() < 2) throw DomainError("collapse spread needs at least two curves");
    int min_peak = 0;
    for (const auto& c : curves) {
        if (!c.peak_found || c.peak_n < 1) throw DomainError("collapse spread needs detected peaks");
        if (min_peak == 0 || c.peak_n < min_peak) min_peak = c.peak_n;
    }
    const double u_min = 1.0 / min_peak;
    const double u_max = 2.0;
    constexpr int kLatticePoints = 64;
    double worst = 0.0;
    for (int j = 0; j < kLatticePoints; ++j) {
        const double u = u_min + (u_max - u_min) * j / (kLatticePoints - 1);
        double lo = 0.0, hi = 0.0, sum = 0.0;
        bool first = true;
        for (const auto& c : curves) {
            const auto d = c.series.distances();
            const double pos = u * c.peak_n;
            if (pos > static_cast<double>(d.size() - 1) + 1e-9)
                throw DomainError("curve too short: collapse window needs n up to 2 * n_peak");
            const size_t i0 = std::min(static_cast<size_t>(pos), d.size() - 2);
            const double frac = pos - static_cast<double>(i0);
            const double v = (d[i0] * (1.0 - frac) + d[i0 + 1] * frac) / c.chi_value;
            lo = first ? v : std::min(lo, v);
            hi = first ? v : std::max(hi, v);
            sum += v;
            first = false;
        }
        const double mean = sum / static_cast<double>(curves.size());
        if (!(mean > 0.0)) throw DomainError("collapse spread hit a zero-mean lattice point");
        worst = std::max(worst, (hi - lo) / mean);
    }
    return worst;
}

Fig3Result run_fig3(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.pairs.empty()) throw ConfigError("fig3 needs a nonempty pair list");
    size_t min_eta_index = 0;
    for (size_t i = 1; i < cfg.pairs.size(); ++i)
        if (cfg.pairs[i].eta < cfg.pairs[min_eta_index].eta) min_eta_index = i;

    Fig3Result result;
    std::vector<PhaseSpaceGrid> classical_grids;
    std::vector<PhaseSpaceGrid> quantum_grids; // only filled for the smallest eta

    for (size_t i = 0; i < cfg.pairs.size(); ++i) {
        const SweepPoint& pt = cfg.pairs[i];
        const int n = pt.grid_n > 0 ? pt.grid_n : cfg.grid_n;
        SystemParams params = cfg.params;
        params.eta = pt.eta;
        DecoherenceParams deco = cfg.deco;
        deco.D = pt.D;
        const GridSpec spec =
            resolve_grid(pt.eta, n, pt.window_half > 0.0 ? pt.window_half : cfg.window_half);

        PhaseSpaceGrid classical = new_coherent_state(spec, cfg.center, pt.eta, GridLabel::classical);
        PhaseSpaceGrid quantum = PhaseSpaceGrid::zeros(spec, GridLabel::quantum);
        const bool with_quantum = i == min_eta_index;
        if (with_quantum) quantum = new_coherent_state(spec, cfg.center, pt.eta, GridLabel::quantum);
        for (int kick = 0; kick < cfg.n_kicks; ++kick) {
            classical = step(classical, params, StepMode::classical, deco);
            if (with_quantum) quantum = step(quantum, params, StepMode::quantum, deco);
        }

        const Moments m = grid_moments(classical);
        SnapshotInfo info;
        info.eta = pt.eta;
        info.D = pt.D;
        info.label = GridLabel::classical;
        info.spatial_variance = m.var_q + m.var_p;
        info.diffusion_floor = 2.0 * pt.D * cfg.n_kicks;
        if (!(info.spatial_variance > 20.0 * info.diffusion_floor))
            throw GuardError("snapshot structure is diffusion-dominated at eta=" +
                             format_compact(pt.eta));
        result.snapshots.push_back(info);
        classical_grids.push_back(std::move(classical));

        if (with_quantum) {
            const Moments mq = grid_moments(quantum);
            SnapshotInfo qinfo = info;
            qinfo.label = GridLabel::quantum;
            qinfo.spatial_variance = mq.var_q + mq.var_p;
            result.snapshots.push_back(qinfo);
            quantum_grids.push_back(std::move(quantum));
        }
    }
    result.classical_grids = std::move(classical_grids);
    result.quantum_grids = std::move(quantum_grids);
    return result;
}

ChiScanResult run_fig4(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.chi_targets.empty()) throw ConfigError("fig4 needs a nonempty chi target list");
    ChiScanResult result;
    result.points.resize(cfg.chi_targets.size());
    std::vector<CurveResult> curves(cfg.chi_targets.size());

    std::vector<std::function<void()>> jobs;
    for (size_t i = 0; i < cfg.chi_targets.size(); ++i) {
        jobs.emplace_back([&, i] {
            const double eta = eta_for_chi(cfg.chi_targets[i], cfg.params.K, cfg.deco.D);
            const int n = cfg.grid_n > 0 ? cfg.grid_n : auto_grid_n(eta, cfg.deco.D, cfg.params.K);
            curves[i] = run_curve(cfg, eta, cfg.deco.D, n);
        });
    }
    run_jobs(jobs);

    std::vector<std::pair<double, double>> loglog;
    for (size_t i = 0; i < curves.size(); ++i) {
        ChiScanPoint pt;
        pt.chi_value = curves[i].chi_value;
        pt.eta = curves[i].eta;
        const std::vector<double> d = curves[i].series.distances();
        pt.max_distance = *std::max_element(d.begin(), d.end());
        result.points[i] = pt;
        if (pt.max_distance <= 1.0)
            loglog.emplace_back(std::log(pt.chi_value), std::log(pt.max_distance));
    }
    if (loglog.size() < 2) throw DomainError("chi scan has fewer than 2 points with max distance <= 1");
    std::tie(result.loglog_slope, result.loglog_intercept) = fit_line(loglog);
    return result;
}

CurveResult run_custom(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_curve(cfg, cfg.params.eta, cfg.deco.D, cfg.grid_n);
}

namespace {

struct ArtifactWriter {
    std::filesystem::path dir;
    Manifest manifest;

    void add(const std::string& name, const std::string& kind, const ParamList& params) {
        ManifestEntry e;
        e.path = name;
        e.kind = kind;
        e.scenario = manifest.scenario;
        e.params = params;
        const auto full = (dir / name).string();
        e.bytes = std::filesystem::file_size(full);
        e.checksum = file_fnv1a64(full);
        manifest.entries.push_back(std::move(e));
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    void grid(const std::string& name, const PhaseSpaceGrid& g, const ParamList& params) {
        write_grid_snapshot(path(name), g, params);
        add(name, "grid", params);
    }
    void heatmap(const std::string& name, const PhaseSpaceGrid& g, Palette palette,
                 const ParamList& params) {
        write_heatmap_ppm(path(name), g, palette);
        add(name, "heatmap", params);
    }
    void series(const std::string& name, const DistanceSeries& s, const ParamList& params) {
        write_distance_csv(path(name), s, params);
        add(name, "series", params);
    }
    void finish() { write_manifest((dir / "manifest.json").string(), manifest); }
};

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("KHO_OUTPUT_DIR"); env && *env) return env;
    return "kho-out";
}

std::string eta_tag(double eta) {
    std::string tag = format_compact(eta);
    for (char& c : tag)
        if (c == '.' || c == '-' || c == '+') c = '_';
    return tag;
}

} // namespace

std::string run_scenario(const ExperimentConfig& cfg) {
    cfg.validate();
    ArtifactWriter out;
    out.dir = resolve_output_dir(cfg);
    out.manifest.scenario = to_string(cfg.scenario);
    std::filesystem::create_directories(out.dir);
    std::ostringstream summary;

    switch (cfg.scenario) {
    case Scenario::fig1_unitary: {
        const UnitaryResult r = run_fig1(cfg);
        const GridSpec spec = resolve_grid(cfg.params.eta, cfg.grid_n, cfg.window_half);
        const ParamList params = resolved_params(cfg, cfg.params.eta, 0.0, spec);
        out.series("fig1_series.csv", r.curve.series, params);
        if (r.curve.peak_found && cfg.write_snapshots) {
            out.grid("fig1_wigner_peak.grid", r.peak_quantum, params);
            out.grid("fig1_classical_peak.grid", r.peak_classical, params);
            out.heatmap("fig1_wigner_peak.ppm", r.peak_quantum, Palette::diverging, params);
            out.heatmap("fig1_classical_peak.ppm", r.peak_classical, Palette::sequential, params);
        }
        summary << "fig1: eta=" << format_compact(cfg.params.eta);
        if (r.curve.peak_found)
            summary << " peak n=" << r.curve.peak_n << " distance=" << format_compact(r.curve.peak_value)
                    << " negativity quantum=" << format_compact(r.peak_negativity_quantum)
                    << " classical=" << format_compact(r.peak_negativity_classical) << '\n';
        else
            summary << " no peak within " << cfg.n_kicks << " kicks\n";
        break;
    }
    case Scenario::fig2_collapse: {
        const CollapseResult r = run_fig2(cfg);
        for (const auto& curve : r.curves) {
            SweepPoint match;
            for (const auto& pt : cfg.pairs)
                if (pt.eta == curve.eta) match = pt;
            const int n = match.grid_n > 0 ? match.grid_n : cfg.grid_n;
            const GridSpec spec = resolve_grid(
                curve.eta, n, match.window_half > 0.0 ? match.window_half : cfg.window_half);
            const ParamList params = resolved_params(cfg, curve.eta, curve.D, spec);
            out.series("fig2_eta" + eta_tag(curve.eta) + ".csv", curve.series, params);
            summary << "fig2: eta=" << format_compact(curve.eta)
                    << " chi=" << format_compact(curve.chi_value) << " n_peak=" << curve.peak_n
                    << '\n';
        }
        summary << "fig2: slope=" << format_compact(r.fit.slope)
                << " intercept=" << format_compact(r.fit.intercept)
                << " collapse_spread=" << format_compact(r.collapse_spread) << '\n';
        for (const auto& flag : r.flagged) summary << "fig2: chi off target: " << flag << '\n';
        break;
    }
    case Scenario::fig3_snapshots: {
        const Fig3Result r = run_fig3(cfg);
        size_t ci = 0, qi = 0;
        for (const auto& info : r.snapshots) {
            const bool is_quantum = info.label == GridLabel::quantum;
            const PhaseSpaceGrid& g =
                is_quantum ? r.quantum_grids.at(qi++) : r.classical_grids.at(ci++);
            const ParamList params = resolved_params(cfg, info.eta, info.D, g.spec);
            const std::string base = std::string("fig3_") + (is_quantum ? "quantum" : "classical") +
                                     "_eta" + eta_tag(info.eta);
            if (cfg.write_snapshots) out.grid(base + ".grid", g, params);
            out.heatmap(base + ".ppm", g,
                        is_quantum ? Palette::diverging : Palette::sequential, params);
            summary << "fig3: " << to_string(info.label) << " eta=" << format_compact(info.eta)
                    << " variance=" << format_compact(info.spatial_variance)
                    << " diffusion_floor=" << format_compact(info.diffusion_floor) << '\n';
        }
        break;
    }
    case Scenario::fig4_chi_scan: {
        const ChiScanResult r = run_fig4(cfg);
        std::ofstream csv(out.path("fig4_scan.csv"), std::ios::trunc);
        if (!csv) throw ConfigError("cannot open for writing: " + out.path("fig4_scan.csv"));
        csv << "# K " << format_real(cfg.params.K) << '\n';
        csv << "# D " << format_real(cfg.deco.D) << '\n';
        csv << "# n_kicks " << cfg.n_kicks << '\n';
        csv << "# seed " << cfg.seed << '\n';
        csv << "chi,eta,max_distance\n";
        for (const auto& pt : r.points)
            csv << format_real(pt.chi_value) << ',' << format_real(pt.eta) << ','
                << format_real(pt.max_distance) << '\n';
        csv.close();
        ParamList params; // fig4 grids are per point; the manifest carries the sweep
        params.emplace_back("scenario", to_string(cfg.scenario));
        params.emplace_back("K", format_real(cfg.params.K));
        params.emplace_back("D", format_real(cfg.deco.D));
        params.emplace_back("n_kicks", std::to_string(cfg.n_kicks));
        params.emplace_back("seed", std::to_string(cfg.seed));
        out.add("fig4_scan.csv", "series", params);
        summary << "fig4: slope=" << format_compact(r.loglog_slope)
                << " intercept=" << format_compact(r.loglog_intercept) << " points=";
        for (const auto& pt : r.points)
            summary << ' ' << format_compact(pt.chi_value) << ':' << format_compact(pt.max_distance);
        summary << '\n';
        break;
    }
    case Scenario::custom: {
        const CurveResult r = run_custom(cfg);
        const GridSpec spec = resolve_grid(cfg.params.eta, cfg.grid_n, cfg.window_half);
        const ParamList params = resolved_params(cfg, cfg.params.eta, cfg.deco.D, spec);
        out.series("custom_series.csv", r.series, params);
        if (cfg.mc_trajectories > 0) {
            TrajectoryEnsemble ens =
                sample_gaussian_ensemble(cfg.mc_trajectories, cfg.center, cfg.params.eta, cfg.seed);
            DecoherenceParams deco = cfg.deco;
            for (int kick = 0; kick < cfg.n_kicks; ++kick) ens = mc_step(ens, cfg.params, deco);
            write_ensemble_snapshot(out.path("custom_ensemble.bin"), ens, params);
            out.add("custom_ensemble.bin", "ensemble", params);
            const PhaseSpaceGrid hist = histogram_ensemble(ens, spec);
            if (cfg.write_snapshots) out.grid("custom_histogram.grid", hist, params);
            out.heatmap("custom_histogram.ppm", hist, Palette::sequential, params);
        }
        summary << "custom: chi=" << format_compact(r.chi_value);
        if (r.peak_found)
            summary << " peak n=" << r.peak_n << " distance=" << format_compact(r.peak_value);
        summary << '\n';
        break;
    }
    }

    out.finish();
    summary << "artifacts: " << out.manifest.entries.size() << " files in " << out.dir.string()
            << '\n';
    return summary.str();
}

} // namespace kho
