#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "kho/decoherence.hpp"
#include "kho/grid.hpp"

namespace kho {

struct DistanceRecord {
    int n = 0;              // kick index; the state is sampled immediately before kick n
    double distance = 0.0;  // L1 distance between the two distributions
    double norm_q = 0.0;    // Riemann norm of the quantum grid
    double norm_cl = 0.0;   // Riemann norm of the classical grid
    double negativity = 0.0; // negative volume of the quantum grid
};

struct DistanceSeries {
    SystemParams params;
    DecoherenceParams deco;
    double chi_value = 0.0; // chi(K, eta, D), or 0 when D = 0
    std::vector<DistanceRecord> records; // n = 0 .. n_kicks inclusive

    std::vector<double> distances() const;
};

/// Integral of |a - b| over the window; both grids must share one GridSpec.
double l1_distance(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b);

/// Observer invoked after recording each sample; receives the kick index and
/// both current grids (state immediately before kick n).
using PairObserver =
    std::function<void(int n, const PhaseSpaceGrid& quantum, const PhaseSpaceGrid& classical)>;

/// Co-evolves a quantum and a classical copy of the same initial distribution
/// for n_kicks kick periods, recording the distance, norms and negativity
/// immediately before each kick (n = 0 .. n_kicks). The two inputs must hold
/// identical values on identical specs so that the series starts at 0.
DistanceSeries evolve_pair(const PhaseSpaceGrid& quantum, const PhaseSpaceGrid& classical,
                           const SystemParams& params, const DecoherenceParams& deco,
                           int n_kicks, const PairObserver& observer = nullptr);

struct PeakResult {
    int n = 0;
    double value = 0.0;
};

/// First local maximum of the series that exceeds 3x the baseline (median of
/// the first three records): smallest n with d[n-1] < d[n] >= d[n+1] above
/// that threshold; a final record qualifies if the series rose into it.
/// Series must have at least 5 records; DomainError when no peak exists.
PeakResult detect_first_peak(const std::vector<double>& d);

struct PeakFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // root-mean-square vertical residual
    std::vector<std::pair<double, double>> points; // (ln(1/eta), n_peak)
};

/// Least-squares line of n_peak against ln(1/eta). Needs >= 3 points with at
/// least two distinct eta values (DomainError otherwise).
PeakFit fit_peak_scaling(const std::vector<std::pair<double, double>>& eta_npeak);

/// Least-squares slope/intercept of y against x. DomainError on degenerate
/// abscissas.
std::pair<double, double> fit_line(const std::vector<std::pair<double, double>>& xy);

/// Logarithmic separation-time estimate (tau/lambda) ln(1/eta); clamped to 0
/// for eta >= 1. Requires lambda > 0.
double separation_time(double tau, double lambda, double eta);

} // namespace kho
