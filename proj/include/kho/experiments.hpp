#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kho/decoherence.hpp"
#include "kho/grid.hpp"
#include "kho/observables.hpp"

namespace kho {

enum class Scenario { fig1_unitary, fig2_collapse, fig3_snapshots, fig4_chi_scan, custom };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s); // accepts "fig1" or "fig1_unitary"

/// One (eta, D) sweep point; grid_n = 0 inherits the config default.
struct SweepPoint {
    double eta = 0.0;
    double D = 0.0;
    int grid_n = 0;           // 0 = inherit the scenario grid_n
    double window_half = 0.0; // 0 = inherit the scenario window (auto by default)
};

struct ExperimentConfig {
    Scenario scenario = Scenario::custom;
    SystemParams params;          // K, eta, nu_tau, tau (eta used by fig1/custom)
    DecoherenceParams deco;       // used by fig1/custom
    std::vector<SweepPoint> pairs;     // fig2/fig3 sweep
    std::vector<double> chi_targets;   // fig4 sweep (eta derived per target)
    double chi_target = 0.0;      // fig2 consistency target; 0 = take from first pair
    int n_kicks = 20;
    int grid_n = 1024;
    double window_half = 0.0;     // 0 = auto per eta
    std::pair<double, double> center{0.0, 0.0};
    int mc_trajectories = 0;      // custom scenario: also run a Monte Carlo ensemble
    std::uint64_t seed = 1;
    std::string output_dir;       // empty = $KHO_OUTPUT_DIR or ./kho-out
    bool write_snapshots = true;

    void validate() const;
};

/// Built-in scenario defaults (the desk-scale parameter sets).
ExperimentConfig default_config(Scenario scenario);

/// Parses the JSON config schema documented in the README. Unknown keys are
/// rejected. Missing keys inherit the scenario defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Square window for a run at the given width parameter: half-width
/// min(4*pi, n*eta/2), i.e. as wide as two web cells unless that would leave
/// eta resolved by less than one cell. ConfigError when even the minimum
/// dynamic window (half-width 8) cannot be met at this n.
GridSpec resolve_grid(double eta, int n, double window_half /* 0 = auto */);

struct CurveResult {
    double eta = 0.0;
    double D = 0.0;
    double chi_value = 0.0;
    DistanceSeries series;
    bool peak_found = false;
    int peak_n = -1;
    double peak_value = 0.0;
};

struct UnitaryResult { // fig1
    CurveResult curve;
    PhaseSpaceGrid peak_quantum;   // pair captured at the detected peak by a
    PhaseSpaceGrid peak_classical; // deterministic replay (empty if no peak)
    double peak_negativity_quantum = 0.0;
    double peak_negativity_classical = 0.0;
};

struct CollapseResult { // fig2
    std::vector<CurveResult> curves;
    PeakFit fit;                      // n_peak vs ln(1/eta)
    double collapse_spread = 0.0;     // max pointwise (max-min)/mean of D/chi on n/n_peak
    std::vector<std::string> flagged; // pairs whose chi deviates > 5% from target
};

struct SnapshotInfo { // fig3
    double eta = 0.0;
    double D = 0.0;
    GridLabel label = GridLabel::classical;
    std::string path;
    double spatial_variance = 0.0; // var_q + var_p of the final distribution
    double diffusion_floor = 0.0;  // per-axis diffusion variance accumulated over the run, 2*D*n_kicks
};

struct Fig3Result {
    std::vector<SnapshotInfo> snapshots; // classical per pair, plus one quantum
    std::vector<PhaseSpaceGrid> classical_grids; // in snapshot order per label
    std::vector<PhaseSpaceGrid> quantum_grids;
};

struct ChiScanPoint { // fig4
    double chi_value = 0.0;
    double eta = 0.0;
    double max_distance = 0.0;
};

struct ChiScanResult {
    std::vector<ChiScanPoint> points;
    double loglog_slope = 0.0; // log(max D) vs log(chi), fitted where max D <= 1
    double loglog_intercept = 0.0;
};

/// Maximum over a shared rescaled-time lattice (u = n/n_peak, u in [1/min
/// n_peak, 2]) of (max - min)/mean across the curves' D_n/chi values,
/// linearly interpolated. Needs every curve to have a detected peak.
double collapse_spread(const std::vector<CurveResult>& curves);

UnitaryResult run_fig1(const ExperimentConfig& cfg);
CollapseResult run_fig2(const ExperimentConfig& cfg);
Fig3Result run_fig3(const ExperimentConfig& cfg);
ChiScanResult run_fig4(const ExperimentConfig& cfg);
CurveResult run_custom(const ExperimentConfig& cfg);

/// Dispatches on cfg.scenario, writes all artifacts plus the manifest, and
/// returns a human-readable summary (one line per key metric).
std::string run_scenario(const ExperimentConfig& cfg);

} // namespace kho
