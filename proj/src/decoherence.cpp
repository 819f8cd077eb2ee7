#include "kho/decoherence.hpp"

#include <cmath>
#include <numbers>

#include "kho/detail/spectral.hpp"

namespace kho {

void DecoherenceParams::validate() const {
    if (D < 0.0 || gamma_tau < 0.0 || nbar < 0.0)
        throw ConfigError("decoherence parameters must be >= 0");
    if (D > 0.0 && gamma_tau > 0.0)
        throw ConfigError("choose either pure diffusion (D) or a damped reservoir (gamma_tau), "
                          "not both");
}

PhaseSpaceGrid diffusion_step(const PhaseSpaceGrid& grid, double D) {
    if (D < 0.0) throw DomainError("diffusion parameter must be >= 0");
    if (D == 0.0) return grid;
    return gaussian_convolve(grid, 2.0 * D, 2.0 * D);
}

PhaseSpaceGrid dissipative_step(const PhaseSpaceGrid& grid, double gamma_tau, double nbar,
                                double eta) {
    if (gamma_tau < 0.0 || nbar < 0.0) throw DomainError("reservoir parameters must be >= 0");
    if (!(eta > 0.0)) throw DomainError("eta must be positive");
    if (gamma_tau == 0.0) return grid;
    PhaseSpaceGrid out = detail::contract_axes(grid, std::exp(-gamma_tau / 2.0));
    const double var = 2.0 * (nbar + 0.5) * eta * eta * (1.0 - std::exp(-gamma_tau));
    return gaussian_convolve(out, var, var);
}

double chi(double K, double eta, double D) {
    if (!(D > 0.0)) throw DomainError("chi requires D > 0");
    const double eta2 = eta * eta;
    return K * eta2 * eta2 / (D * std::sqrt(D));
}

double f_correction(double y) { return 0.25 * (y - 2.0 * y * y * y / 3.0); }

double reservoir_diffusion_D(double eta, double gamma_tau, double nbar) {
    return nbar * gamma_tau * eta * eta;
}

double smoothed_propagator(std::pair<double, double> xR, std::pair<double, double> xprime,
                           const SystemParams& params, double D, SmoothedKernel which) {
    if (!(D > 0.0)) throw DomainError("smoothed propagator requires D > 0");
    const auto [qR, pR] = xR;
    const auto [qp, pp] = xprime;
    const double half_width = 2.0 * std::sqrt(D);
    const double x = (qp - qR) / half_width;
    const double y = (pp - pR + params.K * std::sin(qp)) / half_width;
    const double base = std::exp(-(x * x + y * y)) / (4.0 * std::numbers::pi * D);
    if (which == SmoothedKernel::classical) return base;
    const double c = chi(params.K, params.eta, D);
    return base * (1.0 + c * std::sin(qp) * f_correction(y));
}

} // namespace kho
