#pragma once

#include "kho/grid.hpp"

namespace kho {

/// Reservoir coupling strengths per kick period. Exactly one of the two
/// regimes may be active: pure diffusion (D > 0, gamma_tau = 0) or the
/// damped thermal reservoir (gamma_tau > 0, D = 0).
struct DecoherenceParams {
    double D = 0.0;         // per-kick diffusion parameter; smoothing variance 2D per quadrature
    double gamma_tau = 0.0; // dissipation per kick period
    double nbar = 0.0;      // thermal occupation of the reservoir

    bool trivial() const { return D == 0.0 && gamma_tau == 0.0; }
    void validate() const; // throws ConfigError
};

/// Pure diffusion accumulated over one kick period: Gaussian convolution with
/// variance 2D per quadrature. Identical operator for both grid labels.
PhaseSpaceGrid diffusion_step(const PhaseSpaceGrid& grid, double D);

/// Exact Green-function step of the damped thermal reservoir over one kick
/// period: isotropic contraction of phase space by e^{-gamma_tau/2}
/// (mass-preserving spectral rescaling), then Gaussian convolution with
/// per-quadrature variance 2(nbar + 1/2) eta^2 (1 - e^{-gamma_tau}).
/// A Gaussian of variance s0 exits with s0 e^{-gamma_tau} + that variance.
PhaseSpaceGrid dissipative_step(const PhaseSpaceGrid& grid, double gamma_tau, double nbar,
                                double eta);

/// The control parameter K eta^4 / D^{3/2}. Requires D > 0.
double chi(double K, double eta, double D);

/// Odd cubic correction profile (1/4)(y - 2 y^3 / 3). Its product with
/// e^{-y^2} is bounded by 0.0814 in magnitude.
double f_correction(double y);

/// Conversion helper between reservoir parameters and the per-kick diffusion
/// parameter in the weak-damping, high-occupation limit: D = nbar * gamma_tau * eta^2.
double reservoir_diffusion_D(double eta, double gamma_tau, double nbar);

enum class SmoothedKernel { classical, quantum_approx };

/// Diffusion-smoothed one-kick transition kernel between the source point
/// xprime = (q', p') and its kicked image xR = (qR, pR) (the state just
/// before the harmonic rotation), evaluated with x = (q' - qR)/2 sqrt(D) and
/// y = (p' - pR + K sin q')/2 sqrt(D), so the classical ridge y = 0 sits on
/// pR = p' + K sin q':
///   classical:      e^{-(x^2+y^2)} / (4 pi D)
///   quantum_approx: classical * [1 + chi * sin(q') * f_correction(y)]
/// The quantum form is a small-chi approximation; callers should treat
/// chi > 1 as outside its validity range. Requires D > 0.
double smoothed_propagator(std::pair<double, double> xR, std::pair<double, double> xprime,
                           const SystemParams& params, double D, SmoothedKernel which);

} // namespace kho
