#pragma once

#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "kho/errors.hpp"

namespace kho {

// Guard thresholds shared by the propagation pipeline. Values are part of the
// engine's contract and are asserted by the test suites.
inline constexpr double kNormMonitorTol = 1e-6;   // |riemann_norm - 1| after a full step
inline constexpr double kLeakageTol = 1e-4;       // |W| mass allowed in the edge band
inline constexpr double kGuardBandFraction = 0.05; // edge band width, fraction of window
inline constexpr double kImagMassTol = 1e-8; // round-off imaginary L1 mass allowed per pass
inline constexpr double kUnimodularTol = 1e-12;   // |m| - 1 for Fourier multipliers
inline constexpr double kDefaultNuTau = std::numbers::pi / 3.0;

enum class Axis { q, p };
enum class GridLabel { quantum, classical };

std::string to_string(GridLabel label);
GridLabel grid_label_from_string(const std::string& s);

/// Geometry of a rectangular phase-space window [q_min, q_max) x [p_min, p_max)
/// with periodic identification of opposite edges. Cell counts must be powers
/// of two and at least 64 per axis.
struct GridSpec {
    int n_q = 0;
    int n_p = 0;
    double q_min = 0.0;
    double q_max = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;

    static GridSpec square(int n, double half_width);

    double dq() const { return (q_max - q_min) / n_q; }
    double dp() const { return (p_max - p_min) / n_p; }
    double cell_area() const { return dq() * dp(); }
    double q_width() const { return q_max - q_min; }
    double p_width() const { return p_max - p_min; }
    double q_at(int i) const { return q_min + i * dq(); }
    double p_at(int j) const { return p_min + j * dp(); }

    void validate() const; // throws ConfigError
    bool operator==(const GridSpec&) const = default;
};

/// Dimensionless map parameters. The effective Planck constant is always
/// derived from the Lamb-Dicke parameter eta as 2*eta^2, never stored.
struct SystemParams {
    double K = 0.0;          // kick strength
    double eta = 0.1;        // quantumness scale
    double nu_tau = kDefaultNuTau; // rotation angle between kicks
    double tau = 1.0;        // kick period, sets the time unit

    double hbar_eff() const { return 2.0 * eta * eta; }
    void validate() const; // throws ConfigError
};

/// A sampled distribution on a GridSpec. `values` is row-major with the
/// q index slow and the p index fast: values[iq * n_p + ip].
struct PhaseSpaceGrid {
    GridSpec spec;
    GridLabel label = GridLabel::classical;
    std::vector<double> values;

    static PhaseSpaceGrid zeros(const GridSpec& spec, GridLabel label);

    double& at(int iq, int ip) { return values[static_cast<size_t>(iq) * spec.n_p + ip]; }
    double at(int iq, int ip) const { return values[static_cast<size_t>(iq) * spec.n_p + ip]; }
};

/// Minimum-uncertainty Gaussian with standard deviation eta per quadrature,
/// normalized so the Riemann sum of values * cell_area is 1. The state must
/// fit the window with at least a 6*eta margin per edge.
PhaseSpaceGrid new_coherent_state(const GridSpec& spec, std::pair<double, double> center,
                                  double eta, GridLabel label = GridLabel::quantum);

/// Riemann-sum integral of the grid (compensated summation, fixed order).
double riemann_norm(const PhaseSpaceGrid& grid);

/// Riemann-sum integral of |values|.
double abs_mass(const PhaseSpaceGrid& grid);

/// Integral of the negative part, reported as a positive number.
double negativity_volume(const PhaseSpaceGrid& grid);

/// |values| mass inside the 5%-of-window band along each edge. Used as the
/// periodic-wrap leakage monitor.
double guard_band_mass(const PhaseSpaceGrid& grid);

struct Moments {
    double mean_q = 0.0;
    double mean_p = 0.0;
    double var_q = 0.0;
    double var_p = 0.0;
};

/// First and second moments by grid quadrature (normalized by the grid norm).
Moments grid_moments(const PhaseSpaceGrid& grid);

/// Multiplier evaluated at (conjugate frequency, transverse coordinate).
using MultiplierFn = std::function<std::complex<double>(double freq, double transverse)>;

/// Transform every line along `axis`, multiply bin k by m(freq_k, transverse),
/// transform back and keep the real part. The multiplier must be unit modulus
/// (|m| - 1 <= 1e-12 at every sampled frequency) and exactly 1 at frequency 0;
/// violations raise DomainError. The unpaired Nyquist bin takes the real part
/// of its multiplier, which keeps the pass Hermitian; if the discarded
/// imaginary L1 mass still exceeds 1e-8 the pass raises GuardError.
PhaseSpaceGrid apply_fourier_multiplier(const PhaseSpaceGrid& grid, Axis axis,
                                        const MultiplierFn& multiplier);

/// Periodic convolution with a separable Gaussian of the given per-axis
/// variances (zero variance skips the axis). The kernel must fit the window:
/// the surviving support needs a 6*sigma margin per edge.
PhaseSpaceGrid gaussian_convolve(const PhaseSpaceGrid& grid, double var_q, double var_p);

} // namespace kho
