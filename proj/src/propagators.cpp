#include "kho/propagators.hpp"

#include <cmath>
#include <numbers>

#include "kho/detail/spectral.hpp"

namespace kho {

namespace {

using detail::cdouble;

constexpr double kAngleSlack = 1e-12;

// Kick multipliers act along p; the table per line depends on sin(q).
PhaseSpaceGrid kick_impl(const PhaseSpaceGrid& grid, const SystemParams& params, bool quantum) {
    params.validate();
    const int n = grid.spec.n_p;
    const auto freqs = detail::angular_freqs(n, grid.spec.dp());
    const double eta2 = params.eta * params.eta;
    const double K = params.K;
    auto fill = [&, quantum](double q, std::vector<cdouble>& table) {
        const double strength = K * std::sin(q);
        for (int k = 0; k < n; ++k) {
            const double mu = freqs[static_cast<size_t>(k)];
            const double phase = quantum ? strength * std::sin(eta2 * mu) / eta2 : strength * mu;
            table[static_cast<size_t>(k)] = std::polar(1.0, phase);
        }
    };
    return detail::apply_axis_table(grid, Axis::p, fill, /*check_unimodular=*/true);
}

// One shear pass: a phase ramp whose shift is proportional to the transverse
// coordinate. rate > 0 moves lines along `axis` by +rate * transverse.
PhaseSpaceGrid shear(const PhaseSpaceGrid& grid, Axis axis, double rate) {
    const int n = axis == Axis::p ? grid.spec.n_p : grid.spec.n_q;
    const double dx = axis == Axis::p ? grid.spec.dp() : grid.spec.dq();
    const auto freqs = detail::angular_freqs(n, dx);
    auto fill = [&, rate](double transverse, std::vector<cdouble>& table) {
        const double shift = rate * transverse;
        for (int k = 0; k < n; ++k)
            table[static_cast<size_t>(k)] = std::polar(1.0, freqs[static_cast<size_t>(k)] * shift);
    };
    return detail::apply_axis_table(grid, axis, fill, /*check_unimodular=*/true);
}

} // namespace

std::string to_string(StepMode mode) {
    return mode == StepMode::quantum ? "quantum" : "classical";
}

PhaseSpaceGrid kick_quantum(const PhaseSpaceGrid& grid, const SystemParams& params) {
    return kick_impl(grid, params, true);
}

PhaseSpaceGrid kick_classical(const PhaseSpaceGrid& grid, const SystemParams& params) {
    return kick_impl(grid, params, false);
}

PhaseSpaceGrid rotate(const PhaseSpaceGrid& grid, double angle) {
    if (!(std::abs(angle) <= std::numbers::pi / 2 + kAngleSlack))
        throw DomainError("rotation angle exceeds pi/2; use rotate_compose");
    if (angle == 0.0) return grid;
    // W(R^-1 x) as three pullback shears: q by +tan(a/2)*p, p by -sin(a)*q,
    // q by +tan(a/2)*p. A point mass at (2, 0) lands on (cos a * 2, -sin a * 2).
    const double t = std::tan(angle / 2.0);
    const double s = std::sin(angle);
    PhaseSpaceGrid out = shear(grid, Axis::q, t);
    out = shear(out, Axis::p, -s);
    return shear(out, Axis::q, t);
}

PhaseSpaceGrid rotate_compose(const PhaseSpaceGrid& grid, double angle) {
    const int chunks = std::max(1, static_cast<int>(std::ceil(std::abs(angle) / (std::numbers::pi / 2))));
    const double piece = angle / chunks;
    PhaseSpaceGrid out = grid;
    for (int i = 0; i < chunks; ++i) out = rotate(out, piece);
    return out;
}

PhaseSpaceGrid step(const PhaseSpaceGrid& grid, const SystemParams& params, StepMode mode,
                    const DecoherenceParams& deco) {
    params.validate();
    deco.validate();
    if ((mode == StepMode::quantum) != (grid.label == GridLabel::quantum))
        throw DomainError("step mode does not match the grid label");

    // With diffusion, the period operator kick -> rotate -> blur(2D per axis)
    // is evaluated as p-blur -> kick -> q-blur -> rotate. The p-blur commutes
    // with the kick (both act per q-column) and the isotropic blur commutes
    // with the rotation, so the operator is unchanged; this order hands the
    // kick a momentum-band-limited input, so the sub-cell filaments the kick
    // would otherwise create never alias across the grid.
    PhaseSpaceGrid out = grid;
    if (deco.D > 0.0) out = gaussian_convolve(out, 0.0, 2.0 * deco.D);
    out = mode == StepMode::quantum ? kick_quantum(out, params) : kick_classical(out, params);
    if (deco.D > 0.0) out = gaussian_convolve(out, 2.0 * deco.D, 0.0);
    out = rotate_compose(out, params.nu_tau);
    if (deco.gamma_tau > 0.0) out = dissipative_step(out, deco.gamma_tau, deco.nbar, params.eta);

    const double norm = riemann_norm(out);
    if (std::abs(norm - 1.0) > kNormMonitorTol)
        throw GuardError("norm drifted to " + std::to_string(norm) + " after a step");
    const double leak = guard_band_mass(out);
    if (leak > kLeakageTol)
        throw GuardError("edge guard band holds " + std::to_string(leak) +
                         " of |W|; the window is too small for this run");
    return out;
}

} // namespace kho
