#include "kho/grid.hpp"

#include <algorithm>
#include <cmath>

#include "kho/detail/spectral.hpp"

namespace kho {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

std::string to_string(GridLabel label) {
    return label == GridLabel::quantum ? "quantum" : "classical";
}

GridLabel grid_label_from_string(const std::string& s) {
    if (s == "quantum") return GridLabel::quantum;
    if (s == "classical") return GridLabel::classical;
    throw ConfigError("unknown grid label: " + s);
}

GridSpec GridSpec::square(int n, double half_width) {
    return GridSpec{n, n, -half_width, half_width, -half_width, half_width};
}

void GridSpec::validate() const {
    if (!power_of_two(n_q) || !power_of_two(n_p) || n_q < 64 || n_p < 64)
        throw ConfigError("grid sizes must be powers of two, at least 64 per axis");
    if (!(std::isfinite(q_min) && std::isfinite(q_max) && std::isfinite(p_min) && std::isfinite(p_max)))
        throw ConfigError("grid bounds must be finite");
    if (!(q_max > q_min) || !(p_max > p_min)) throw ConfigError("grid bounds must be ordered");
}

void SystemParams::validate() const {
    if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("kick strength K must be >= 0");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
    if (!(nu_tau > 0.0) || !(nu_tau < 2.0 * std::numbers::pi))
        throw ConfigError("rotation angle nu_tau must lie in (0, 2*pi)");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("kick period tau must be positive");
}

PhaseSpaceGrid PhaseSpaceGrid::zeros(const GridSpec& spec, GridLabel label) {
    spec.validate();
    PhaseSpaceGrid grid;
    grid.spec = spec;
    grid.label = label;
    grid.values.assign(static_cast<size_t>(spec.n_q) * spec.n_p, 0.0);
    return grid;
}

PhaseSpaceGrid new_coherent_state(const GridSpec& spec, std::pair<double, double> center,
                                  double eta, GridLabel label) {
    spec.validate();
    if (!(eta > 0.0)) throw ConfigError("state width must be positive");
    const auto [q0, p0] = center;
    const double margin = 6.0 * eta;
    if (q0 - spec.q_min < margin || spec.q_max - q0 < margin || p0 - spec.p_min < margin ||
        spec.p_max - p0 < margin)
        throw ConfigError("state center needs a 6*sigma margin to every window edge");
    if (eta < 0.95 * std::max(spec.dq(), spec.dp()))
        throw ConfigError("state width must be at least 0.95 cells for a faithful sampling");

    PhaseSpaceGrid grid = PhaseSpaceGrid::zeros(spec, label);
    const double inv_two_var = 1.0 / (2.0 * eta * eta);
    const double amp = 1.0 / (2.0 * std::numbers::pi * eta * eta);
    for (int iq = 0; iq < spec.n_q; ++iq) {
        const double dq2 = (spec.q_at(iq) - q0) * (spec.q_at(iq) - q0);
        for (int ip = 0; ip < spec.n_p; ++ip) {
            const double dp2 = (spec.p_at(ip) - p0) * (spec.p_at(ip) - p0);
            grid.at(iq, ip) = amp * std::exp(-(dq2 + dp2) * inv_two_var);
        }
    }
    const double norm = riemann_norm(grid);
    for (double& v : grid.values) v /= norm;
    return grid;
}

double riemann_norm(const PhaseSpaceGrid& grid) {
    detail::KahanSum sum;
    for (double v : grid.values) sum.add(v);
    return sum.value() * grid.spec.cell_area();
}

double abs_mass(const PhaseSpaceGrid& grid) {
    detail::KahanSum sum;
    for (double v : grid.values) sum.add(std::abs(v));
    return sum.value() * grid.spec.cell_area();
}

double negativity_volume(const PhaseSpaceGrid& grid) {
    detail::KahanSum sum;
    for (double v : grid.values)
        if (v < 0.0) sum.add(-v);
    return sum.value() * grid.spec.cell_area();
}

double guard_band_mass(const PhaseSpaceGrid& grid) {
    const GridSpec& s = grid.spec;
    const double band_q = kGuardBandFraction * s.q_width();
    const double band_p = kGuardBandFraction * s.p_width();
    detail::KahanSum sum;
    for (int iq = 0; iq < s.n_q; ++iq) {
        const double q = s.q_at(iq);
        const bool q_edge = q < s.q_min + band_q || q >= s.q_max - band_q;
        for (int ip = 0; ip < s.n_p; ++ip) {
            const double p = s.p_at(ip);
            if (q_edge || p < s.p_min + band_p || p >= s.p_max - band_p)
                sum.add(std::abs(grid.at(iq, ip)));
        }
    }
    return sum.value() * s.cell_area();
}

Moments grid_moments(const PhaseSpaceGrid& grid) {
    const GridSpec& s = grid.spec;
    detail::KahanSum w, wq, wp, wqq, wpp;
    for (int iq = 0; iq < s.n_q; ++iq) {
        const double q = s.q_at(iq);
        for (int ip = 0; ip < s.n_p; ++ip) {
            const double p = s.p_at(ip);
            const double v = grid.at(iq, ip);
            w.add(v);
            wq.add(v * q);
            wp.add(v * p);
            wqq.add(v * q * q);
            wpp.add(v * p * p);
        }
    }
    const double total = w.value();
    if (total == 0.0) throw DomainError("moments of an identically zero grid");
    Moments m;
    m.mean_q = wq.value() / total;
    m.mean_p = wp.value() / total;
    m.var_q = wqq.value() / total - m.mean_q * m.mean_q;
    m.var_p = wpp.value() / total - m.mean_p * m.mean_p;
    return m;
}

PhaseSpaceGrid apply_fourier_multiplier(const PhaseSpaceGrid& grid, Axis axis,
                                        const MultiplierFn& multiplier) {
    grid.spec.validate();
    const int n = axis == Axis::p ? grid.spec.n_p : grid.spec.n_q;
    const double dx = axis == Axis::p ? grid.spec.dp() : grid.spec.dq();
    const auto freqs = detail::angular_freqs(n, dx);
    auto fill = [&](double transverse, std::vector<detail::cdouble>& table) {
        for (int k = 0; k < n; ++k)
            table[static_cast<size_t>(k)] = multiplier(freqs[static_cast<size_t>(k)], transverse);
    };
    return detail::apply_axis_table(grid, axis, fill, /*check_unimodular=*/true);
}

PhaseSpaceGrid gaussian_convolve(const PhaseSpaceGrid& grid, double var_q, double var_p) {
    grid.spec.validate();
    if (var_q < 0.0 || var_p < 0.0) throw DomainError("convolution variances must be >= 0");
    if (var_q == 0.0 && var_p == 0.0) return grid;

    const GridSpec& s = grid.spec;
    const double reach_q = 6.0 * std::sqrt(var_q);
    const double reach_p = 6.0 * std::sqrt(var_p);
    if (reach_q > 0.5 * s.q_width() || reach_p > 0.5 * s.p_width())
        throw ConfigError("convolution kernel is wider than half the window");

    // Wraparound is harmless only while the state keeps clear of the edges by
    // the kernel reach; tolerate at most the leakage budget inside that band.
    detail::KahanSum near_edge;
    for (int iq = 0; iq < s.n_q; ++iq) {
        const double q = s.q_at(iq);
        const bool q_edge = reach_q > 0.0 && (q < s.q_min + reach_q || q >= s.q_max - reach_q);
        for (int ip = 0; ip < s.n_p; ++ip) {
            const double p = s.p_at(ip);
            if (q_edge ||
                (reach_p > 0.0 && (p < s.p_min + reach_p || p >= s.p_max - reach_p)))
                near_edge.add(std::abs(grid.at(iq, ip)));
        }
    }
    const double total = abs_mass(grid);
    if (total > 0.0 && near_edge.value() * s.cell_area() > kLeakageTol * total)
        throw GuardError("state mass within kernel reach of the window edge");

    PhaseSpaceGrid out = grid;
    for (Axis axis : {Axis::q, Axis::p}) {
        const double var = axis == Axis::q ? var_q : var_p;
        if (var == 0.0) continue;
        const int n = axis == Axis::p ? s.n_p : s.n_q;
        const double dx = axis == Axis::p ? s.dp() : s.dq();
        const auto freqs = detail::angular_freqs(n, dx);
        auto fill = [&](double, std::vector<detail::cdouble>& table) {
            for (int k = 0; k < n; ++k) {
                const double f = freqs[static_cast<size_t>(k)];
                table[static_cast<size_t>(k)] = std::exp(-0.5 * var * f * f);
            }
        };
        out = detail::apply_axis_table(out, axis, fill, /*check_unimodular=*/false);
    }
    return out;
}

} // namespace kho
