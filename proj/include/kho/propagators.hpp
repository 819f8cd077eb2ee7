#pragma once

#include "kho/decoherence.hpp"
#include "kho/grid.hpp"

namespace kho {

enum class StepMode { quantum, classical };

std::string to_string(StepMode mode);

/// One kick applied to a Wigner function: Fourier multiplier along p,
/// m(mu; q) = exp(i K sin(q) sin(eta^2 mu) / eta^2). Norm preserved to 1e-12.
PhaseSpaceGrid kick_quantum(const PhaseSpaceGrid& grid, const SystemParams& params);

/// One kick applied to a classical distribution: the exact q-dependent
/// momentum shift p -> p + K sin(q), m(mu; q) = exp(i K sin(q) mu).
PhaseSpaceGrid kick_classical(const PhaseSpaceGrid& grid, const SystemParams& params);

/// Rotation of the distribution about the phase-space origin:
/// W'(x) = W(R^-1 x) with R = [[cos a, sin a], [-sin a, cos a]], realized as
/// three exact shear passes (each a unit-modulus Fourier phase ramp).
/// |angle| must not exceed pi/2 per call; see rotate_compose for larger ones.
PhaseSpaceGrid rotate(const PhaseSpaceGrid& grid, double angle);

/// Rotation by an arbitrary angle, composed from |chunk| <= pi/2 calls.
PhaseSpaceGrid rotate_compose(const PhaseSpaceGrid& grid, double angle);

/// One full kick period: kick (mode-selected) -> rotate(nu_tau) -> decoherence
/// (diffusion or dissipative reservoir). The result is the distribution
/// immediately before the next kick. Pure diffusion is evaluated in the
/// equivalent split order p-blur -> kick -> q-blur -> rotate (the p-blur
/// commutes with the kick, the combined blur with the rotation), which keeps
/// the kick input band-limited. The step monitors the Riemann norm
/// (|norm - 1| <= 1e-6) and the edge guard band (mass <= 1e-4); violations
/// raise GuardError. The grid label must match the mode.
PhaseSpaceGrid step(const PhaseSpaceGrid& grid, const SystemParams& params, StepMode mode,
                    const DecoherenceParams& deco);

} // namespace kho
