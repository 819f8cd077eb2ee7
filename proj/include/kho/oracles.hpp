#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "kho/decoherence.hpp"
#include "kho/grid.hpp"

namespace kho {

/// Pure state sampled on a uniform q-axis. Reference implementation used for
/// validating the grid pipeline at D = 0; not part of the main evolution.
struct WaveFunction {
    double q_min = 0.0;
    double dq = 0.0;
    double eta = 0.0;
    std::vector<std::complex<double>> psi;

    int n() const { return static_cast<int>(psi.size()); }
    double q_at(int i) const { return q_min + i * dq; }
    double norm() const; // sum |psi|^2 dq
};

/// Minimum-uncertainty Gaussian state centered at (q0, p0) with width eta per
/// quadrature; normalized so sum |psi|^2 dq = 1 exactly.
WaveFunction coherent_wavefunction(int n, double q_min, double dq, double q0, double p0,
                                   double eta);

/// One kick period of unitary evolution: pointwise phase
/// exp(-i K cos(q) / 2 eta^2), then the harmonic rotation by nu_tau as a
/// fractional Fourier transform (chirp - FFT - chirp decomposition, composed
/// from |angle| <= pi/2 chunks). Norm preserved to 1e-10. Raises GuardError
/// when more than 1e-4 of the probability sits within 6 eta of a q edge.
WaveFunction evolve_state(const WaveFunction& wf, const SystemParams& params);

/// Wigner transform of a pure state, evaluated on the grid's p points by a
/// chirp transform over the symmetric correlations psi*(q+s) psi(q-s) with one
/// full window of zero padding. The q axis of `spec` must match the state's
/// sampling. The momentum window must not exceed one Wigner period
/// pi * hbar_eff / dq (GuardError otherwise: wider windows alias).
PhaseSpaceGrid wigner_of_state(const WaveFunction& wf, const GridSpec& spec);

/// Half-width of the exactly commensurate momentum window for a given q axis:
/// pi * hbar_eff / (2 dq). Sampling this window makes the Wigner transform's
/// q-marginal reproduce |psi|^2 to machine precision.
double wigner_momentum_half_width(double eta, double dq);

/// Classical trajectory ensemble driven by a counter-based deterministic
/// random stream: the noise for (seed, kick, trajectory) never depends on
/// scheduling or call order.
struct TrajectoryEnsemble {
    std::vector<double> q;
    std::vector<double> p;
    std::uint64_t seed = 0;
    std::uint64_t step_count = 0; // kicks applied so far

    int size() const { return static_cast<int>(q.size()); }
};

/// M trajectories drawn from an isotropic Gaussian at `center` with the given
/// per-quadrature standard deviation.
TrajectoryEnsemble sample_gaussian_ensemble(int m, std::pair<double, double> center,
                                            double sigma, std::uint64_t seed);

/// One kick period per trajectory: p += K sin q, rotate by nu_tau, then add
/// Gaussian noise of variance 2D per coordinate; with gamma_tau > 0 contract
/// by e^{-gamma_tau/2} and add noise of variance 2(nbar+1/2)eta^2(1-e^{-gamma_tau}).
TrajectoryEnsemble mc_step(const TrajectoryEnsemble& ens, const SystemParams& params,
                           const DecoherenceParams& deco);

/// Bin the ensemble onto the grid's cells (no smoothing); mass count/(M*cell
/// area), coordinates wrapped periodically into the window.
PhaseSpaceGrid histogram_ensemble(const TrajectoryEnsemble& ens, const GridSpec& spec);

/// Zero-noise classical evolution by characteristics: the Liouville density
/// is constant along trajectories, so every node carries its backward-iterated
/// phase point and the grid holds the initial Gaussian evaluated there. The
/// values are exact for the continuum map however finely the flow filaments;
/// only the node sampling is discrete. Nonnegative by construction.
struct BacktraceLattice {
    GridSpec spec;
    std::pair<double, double> center;
    double sigma = 0.0;
    double amplitude = 0.0;   // Gaussian prefactor, folded with the kick-0 grid norm
    std::vector<double> q;    // backward phase points, same layout as grid values
    std::vector<double> p;
};

/// Lattice at kick 0. Placement rules (6*sigma margin, 0.95-cell width floor)
/// match new_coherent_state; backtrace_grid of a fresh lattice reproduces the
/// coherent-state grid to round-off.
BacktraceLattice new_backtrace_lattice(const GridSpec& spec, std::pair<double, double> center,
                                       double sigma);

/// Pull every node back through the inverse of one kick-and-rotate period.
void backtrace_advance(BacktraceLattice& lattice, const SystemParams& params);

/// Materialize the classical distribution for the kicks applied so far.
PhaseSpaceGrid backtrace_grid(const BacktraceLattice& lattice);

struct LyapunovEstimate {
    double lambda = 0.0;   // mean log stretching rate per kick
    bool converged = true; // false when the last-decade drift exceeds 5%
    int n_orbits = 0;
    int n_kicks = 0;
};

/// Benettin tangent-map estimate averaged over chaotic-sea initial conditions
/// (uniform in [-pi, pi]^2; orbits whose 200-kick position variance stays
/// below 1 are treated as island-trapped and resampled). Dissipation enters
/// as a factor e^{-gamma_tau/2} on the tangent growth along the undissipated
/// orbit, matching the weak-dissipation regime. Requires n_kicks >= 1000 and
/// n_orbits >= 100.
LyapunovEstimate lyapunov_numeric(const SystemParams& params, double gamma_tau, int n_kicks,
                                  int n_orbits, std::uint64_t seed);

enum class LyapunovWhich { ensemble, origin };

/// Strong-chaos closed forms: ensemble -> ln[(K/2) sin nu_tau] - gamma_tau/2,
/// origin -> ln[K sin nu_tau] - gamma_tau/2. DomainError when the logarithm
/// argument is not positive.
double lyapunov_formula(double K, double nu_tau, double gamma_tau, LyapunovWhich which);

} // namespace kho
