#include "kho/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kho/detail/spectral.hpp"

namespace kho {

namespace {

using detail::cdouble;
using detail::KahanSum;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Counter-based stream: a keyed splitmix-style hash of (seed, stream,
// trajectory, slot). Every drawn number is a pure function of its key, so
// results are independent of evaluation order and thread scheduling.
std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t traj,
                           std::uint64_t slot) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull;
    x = mix64(x ^ (0xD1B54A32D192ED03ull * (stream + 1)));
    x = mix64(x ^ (0x8CB92BA72F3D8DD7ull * (traj + 1)));
    x = mix64(x ^ (0x2545F4914F6CDD1Dull * (slot + 1)));
    return x;
}

double uniform01(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53; // in (0, 1]
}

// Box-Muller pair from slots (2k, 2k+1).
std::pair<double, double> gaussian_pair(std::uint64_t seed, std::uint64_t stream,
                                        std::uint64_t traj, std::uint64_t pair_slot) {
    const double u1 = uniform01(counter_hash(seed, stream, traj, 2 * pair_slot));
    const double u2 = uniform01(counter_hash(seed, stream, traj, 2 * pair_slot + 1));
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

constexpr std::uint64_t kInitStream = 0xFFFFFFFFFFFFFFFFull;
constexpr std::uint64_t kLyapunovStream = 0x4C59415055ull;

void check_q_axis(const WaveFunction& wf, const GridSpec& spec) {
    const double tol = 1e-12 * std::max(1.0, std::abs(spec.q_min) + spec.dq());
    if (wf.n() != spec.n_q || std::abs(wf.q_min - spec.q_min) > tol ||
        std::abs(wf.dq - spec.dq()) > tol)
        throw DomainError("wave function sampling does not match the grid's q axis");
}

} // namespace

double WaveFunction::norm() const {
    KahanSum sum;
    for (const auto& a : psi) sum.add(std::norm(a));
    return sum.value() * dq;
}

WaveFunction coherent_wavefunction(int n, double q_min, double dq, double q0, double p0,
                                   double eta) {
    if (n < 2 || !(dq > 0.0) || !(eta > 0.0)) throw ConfigError("invalid wave function sampling");
    WaveFunction wf;
    wf.q_min = q_min;
    wf.dq = dq;
    wf.eta = eta;
    wf.psi.resize(static_cast<size_t>(n));
    const double hbar = 2.0 * eta * eta;
    const double amp = std::pow(2.0 * std::numbers::pi * eta * eta, -0.25);
    for (int i = 0; i < n; ++i) {
        const double q = q_min + i * dq;
        const double envelope = amp * std::exp(-(q - q0) * (q - q0) / (4.0 * eta * eta));
        wf.psi[static_cast<size_t>(i)] = std::polar(envelope, p0 * (q - q0) / hbar);
    }
    const double scale = 1.0 / std::sqrt(wf.norm());
    for (auto& a : wf.psi) a *= scale;
    return wf;
}

WaveFunction evolve_state(const WaveFunction& wf, const SystemParams& params) {
    params.validate();
    if (!(wf.eta > 0.0) || wf.n() < 2) throw DomainError("uninitialized wave function");
    if (std::abs(wf.eta - params.eta) > 1e-12 * params.eta)
        throw DomainError("wave function eta does not match the system parameters");
    const int n = wf.n();
    const double band = 6.0 * wf.eta;
    const double q_max = wf.q_min + n * wf.dq;
    KahanSum edge, total;
    for (int i = 0; i < n; ++i) {
        const double m = std::norm(wf.psi[static_cast<size_t>(i)]);
        total.add(m);
        const double q = wf.q_at(i);
        if (q < wf.q_min + band || q >= q_max - band) edge.add(m);
    }
    if (edge.value() > kLeakageTol * total.value())
        throw GuardError("state probability within 6*eta of the q window edge");

    WaveFunction out = wf;
    const double hbar = 2.0 * params.eta * params.eta;

    // Kick phase.
    for (int i = 0; i < n; ++i)
        out.psi[static_cast<size_t>(i)] *=
            std::polar(1.0, -params.K * std::cos(out.q_at(i)) / hbar);

    // Harmonic rotation: chirp - FFT - chirp per |angle| <= pi/2 chunk. The
    // composite Heisenberg map is exactly the phase-space rotation.
    const int chunks =
        std::max(1, static_cast<int>(std::ceil(std::abs(params.nu_tau) / (std::numbers::pi / 2))));
    const double angle = params.nu_tau / chunks;
    const double t = std::tan(angle / 2.0);
    const double s = std::sin(angle);
    const auto freqs = detail::angular_freqs(n, wf.dq);
    std::vector<cdouble> chirp(static_cast<size_t>(n)), kinetic(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double q = out.q_at(i);
        chirp[static_cast<size_t>(i)] = std::polar(1.0, -t * q * q / (2.0 * hbar));
    }
    for (int k = 0; k < n; ++k) {
        const double kappa = freqs[static_cast<size_t>(k)];
        kinetic[static_cast<size_t>(k)] = std::polar(1.0, -s * hbar * kappa * kappa / 2.0);
    }
    const double inv_n = 1.0 / n;
    for (int c = 0; c < chunks; ++c) {
        for (int i = 0; i < n; ++i) out.psi[static_cast<size_t>(i)] *= chirp[static_cast<size_t>(i)];
        detail::fft(out.psi.data(), n, -1);
        for (int k = 0; k < n; ++k) out.psi[static_cast<size_t>(k)] *= kinetic[static_cast<size_t>(k)];
        detail::fft(out.psi.data(), n, +1);
        for (int i = 0; i < n; ++i)
            out.psi[static_cast<size_t>(i)] *= chirp[static_cast<size_t>(i)] * inv_n;
    }

    if (std::abs(out.norm() - 1.0) > 1e-10)
        throw GuardError("wave function norm drifted beyond 1e-10 in one kick");
    return out;
}

double wigner_momentum_half_width(double eta, double dq) {
    return std::numbers::pi * eta * eta / dq; // pi * hbar_eff / (2 dq)
}

PhaseSpaceGrid wigner_of_state(const WaveFunction& wf, const GridSpec& spec) {
    spec.validate();
    check_q_axis(wf, spec);
    const double hbar = 2.0 * wf.eta * wf.eta;
    if (spec.p_width() > 2.0 * wigner_momentum_half_width(wf.eta, wf.dq) * (1.0 + 1e-9))
        throw GuardError("momentum window exceeds one Wigner period pi*hbar/dq");

    const int n = wf.n();
    const int n_p = spec.n_p;
    // W(q_i, p_l) = (dq / pi hbar) Re sum_m c_m e^{i alpha p_l m} with
    // c_m = conj(psi[i+m]) psi[i-m] and alpha = 2 dq / hbar. The m-sum runs
    // over one full window of zero padding, evaluated at the grid's p points
    // by a chirp transform (circular convolution sized to avoid wrap).
    const double alpha = 2.0 * wf.dq / hbar;
    const double w = alpha * spec.dp();
    int conv_len = 1;
    while (conv_len < n_p + 2 * n) conv_len *= 2;

    std::vector<cdouble> kernel_hat(static_cast<size_t>(conv_len), cdouble(0, 0));
    for (int r = -(n - 1); r <= n_p + n - 2; ++r) {
        const int idx = (r + conv_len) % conv_len;
        kernel_hat[static_cast<size_t>(idx)] = std::polar(1.0, -0.5 * w * static_cast<double>(r) * r);
    }
    detail::fft(kernel_hat.data(), conv_len, -1);

    std::vector<cdouble> post(static_cast<size_t>(n_p));
    for (int l = 0; l < n_p; ++l)
        post[static_cast<size_t>(l)] = std::polar(1.0, 0.5 * w * static_cast<double>(l) * l);

    PhaseSpaceGrid out = PhaseSpaceGrid::zeros(spec, GridLabel::quantum);
    const double scale = wf.dq / (std::numbers::pi * hbar);
    std::vector<cdouble> work(static_cast<size_t>(conv_len));
    const double inv_conv = 1.0 / conv_len;

    for (int i = 0; i < spec.n_q; ++i) {
        std::fill(work.begin(), work.end(), cdouble(0, 0));
        for (int m = -(n - 1); m <= n - 1; ++m) {
            const int ip = i + m;
            const int im = i - m;
            if (ip < 0 || ip >= n || im < 0 || im >= n) continue;
            const cdouble c =
                std::conj(wf.psi[static_cast<size_t>(ip)]) * wf.psi[static_cast<size_t>(im)];
            const double phase =
                alpha * spec.p_min * m + 0.5 * w * static_cast<double>(m) * m;
            work[static_cast<size_t>((m + conv_len) % conv_len)] = c * std::polar(1.0, phase);
        }
        detail::fft(work.data(), conv_len, -1);
        for (int k = 0; k < conv_len; ++k)
            work[static_cast<size_t>(k)] *= kernel_hat[static_cast<size_t>(k)];
        detail::fft(work.data(), conv_len, +1);
        for (int l = 0; l < n_p; ++l) {
            const cdouble s = work[static_cast<size_t>(l)] * inv_conv * post[static_cast<size_t>(l)];
            out.at(i, l) = scale * s.real();
        }
    }
    return out;
}

TrajectoryEnsemble sample_gaussian_ensemble(int m, std::pair<double, double> center, double sigma,
                                            std::uint64_t seed) {
    if (m < 1) throw ConfigError("ensemble size must be positive");
    if (!(sigma >= 0.0)) throw ConfigError("ensemble width must be >= 0");
    TrajectoryEnsemble ens;
    ens.seed = seed;
    ens.q.resize(static_cast<size_t>(m));
    ens.p.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        const auto [g1, g2] = gaussian_pair(seed, kInitStream, static_cast<std::uint64_t>(i), 0);
        ens.q[static_cast<size_t>(i)] = center.first + sigma * g1;
        ens.p[static_cast<size_t>(i)] = center.second + sigma * g2;
    }
    return ens;
}

TrajectoryEnsemble mc_step(const TrajectoryEnsemble& ens, const SystemParams& params,
                           const DecoherenceParams& deco) {
    params.validate();
    deco.validate();
    TrajectoryEnsemble out = ens;
    const double c = std::cos(params.nu_tau);
    const double s = std::sin(params.nu_tau);
    const double noise = std::sqrt(2.0 * deco.D);
    const double contraction = std::exp(-deco.gamma_tau / 2.0);
    const double ou_sigma = std::sqrt(2.0 * (deco.nbar + 0.5) * params.eta * params.eta *
                                      (1.0 - std::exp(-deco.gamma_tau)));
    const std::uint64_t stream = ens.step_count;
    const int m = ens.size();
    for (int i = 0; i < m; ++i) {
        double q = out.q[static_cast<size_t>(i)];
        double p = out.p[static_cast<size_t>(i)] + params.K * std::sin(q);
        const double qr = c * q + s * p;
        const double pr = -s * q + c * p;
        q = qr;
        p = pr;
        if (deco.D > 0.0) {
            const auto [g1, g2] = gaussian_pair(ens.seed, stream, static_cast<std::uint64_t>(i), 0);
            q += noise * g1;
            p += noise * g2;
        }
        if (deco.gamma_tau > 0.0) {
            const auto [g3, g4] = gaussian_pair(ens.seed, stream, static_cast<std::uint64_t>(i), 1);
            q = contraction * q + ou_sigma * g3;
            p = contraction * p + ou_sigma * g4;
        }
        if (!std::isfinite(q) || !std::isfinite(p))
            throw GuardError("trajectory coordinate became non-finite");
        out.q[static_cast<size_t>(i)] = q;
        out.p[static_cast<size_t>(i)] = p;
    }
    out.step_count = ens.step_count + 1;
    return out;
}

PhaseSpaceGrid histogram_ensemble(const TrajectoryEnsemble& ens, const GridSpec& spec) {
    spec.validate();
    PhaseSpaceGrid grid = PhaseSpaceGrid::zeros(spec, GridLabel::classical);
    const int m = ens.size();
    for (int i = 0; i < m; ++i) {
        double uq = (ens.q[static_cast<size_t>(i)] - spec.q_min) / spec.q_width();
        double up = (ens.p[static_cast<size_t>(i)] - spec.p_min) / spec.p_width();
        uq -= std::floor(uq);
        up -= std::floor(up);
        int iq = std::min(static_cast<int>(uq * spec.n_q), spec.n_q - 1);
        int ip = std::min(static_cast<int>(up * spec.n_p), spec.n_p - 1);
        grid.at(iq, ip) += 1.0;
    }
    const double weight = 1.0 / (static_cast<double>(m) * spec.cell_area());
    for (double& v : grid.values) v *= weight;
    return grid;
}

BacktraceLattice new_backtrace_lattice(const GridSpec& spec, std::pair<double, double> center,
                                       double sigma) {
    // Reuse the grid initial state's placement validation and normalization
    // convention so both paths start from the same distribution.
    new_coherent_state(spec, center, sigma, GridLabel::classical);
    detail::KahanSum raw;
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    for (int iq = 0; iq < spec.n_q; ++iq) {
        const double dq2 = (spec.q_at(iq) - center.first) * (spec.q_at(iq) - center.first);
        for (int ip = 0; ip < spec.n_p; ++ip) {
            const double dp = spec.p_at(ip) - center.second;
            raw.add(std::exp(-(dq2 + dp * dp) * inv_two_var));
        }
    }
    BacktraceLattice lat;
    lat.spec = spec;
    lat.center = center;
    lat.sigma = sigma;
    lat.amplitude = 1.0 / (raw.value() * spec.cell_area());
    lat.q.resize(static_cast<size_t>(spec.n_q) * spec.n_p);
    lat.p.resize(lat.q.size());
    for (int iq = 0; iq < spec.n_q; ++iq)
        for (int ip = 0; ip < spec.n_p; ++ip) {
            lat.q[static_cast<size_t>(iq) * spec.n_p + ip] = spec.q_at(iq);
            lat.p[static_cast<size_t>(iq) * spec.n_p + ip] = spec.p_at(ip);
        }
    return lat;
}

void backtrace_advance(BacktraceLattice& lattice, const SystemParams& params) {
    params.validate();
    const double ct = std::cos(params.nu_tau);
    const double st = std::sin(params.nu_tau);
    for (size_t t = 0; t < lattice.q.size(); ++t) {
        // inverse of kick-then-rotate: rotate back, then remove the kick
        const double q1 = lattice.q[t] * ct - lattice.p[t] * st;
        const double p1 = lattice.q[t] * st + lattice.p[t] * ct;
        lattice.q[t] = q1;
        lattice.p[t] = p1 - params.K * std::sin(q1);
    }
}

PhaseSpaceGrid backtrace_grid(const BacktraceLattice& lattice) {
    PhaseSpaceGrid grid = PhaseSpaceGrid::zeros(lattice.spec, GridLabel::classical);
    const double inv_two_var = 1.0 / (2.0 * lattice.sigma * lattice.sigma);
    for (size_t t = 0; t < lattice.q.size(); ++t) {
        const double dq = lattice.q[t] - lattice.center.first;
        const double dp = lattice.p[t] - lattice.center.second;
        grid.values[t] = lattice.amplitude * std::exp(-(dq * dq + dp * dp) * inv_two_var);
    }
    return grid;
}

LyapunovEstimate lyapunov_numeric(const SystemParams& params, double gamma_tau, int n_kicks,
                                  int n_orbits, std::uint64_t seed) {
    params.validate();
    if (gamma_tau < 0.0) throw ConfigError("gamma_tau must be >= 0");
    if (n_kicks < 1000) throw ConfigError("lyapunov estimate needs n_kicks >= 1000");
    if (n_orbits < 100) throw ConfigError("lyapunov estimate needs n_orbits >= 100");

    const double c = std::cos(params.nu_tau);
    const double s = std::sin(params.nu_tau);
    const double K = params.K;
    const int tenth = n_kicks / 10;
    KahanSum total, total_tenth;
    std::uint64_t attempt = 0;

    for (int orbit = 0; orbit < n_orbits; ++orbit) {
        double q = 0.0, p = 0.0;
        bool chaotic = false;
        // Reject island-trapped initial conditions by a position-variance test.
        for (int tries = 0; tries < 64 && !chaotic; ++tries) {
            const std::uint64_t key = attempt++;
            q = (2.0 * uniform01(counter_hash(seed, kLyapunovStream, key, 0)) - 1.0) *
                std::numbers::pi;
            p = (2.0 * uniform01(counter_hash(seed, kLyapunovStream, key, 1)) - 1.0) *
                std::numbers::pi;
            KahanSum sum_q, sum_qq;
            double tq = q, tp = p;
            for (int k = 0; k < 200; ++k) {
                tp += K * std::sin(tq);
                const double rq = c * tq + s * tp;
                const double rp = -s * tq + c * tp;
                tq = rq;
                tp = rp;
                sum_q.add(tq);
                sum_qq.add(tq * tq);
            }
            const double mean = sum_q.value() / 200.0;
            const double var = sum_qq.value() / 200.0 - mean * mean;
            if (var >= 1.0) {
                chaotic = true;
                q = tq; // continue from the verified chaotic stretch
                p = tp;
            }
        }
        if (!chaotic) throw GuardError("could not sample a chaotic-sea initial condition");

        double vq = std::numbers::inv_sqrt3, vp = std::sqrt(1.0 - vq * vq);
        KahanSum orbit_sum;
        double orbit_tenth = 0.0;
        for (int n = 0; n < n_kicks; ++n) {
            // Tangent map of kick-then-rotate at the current point.
            const double wq = vq;
            const double wp = vp + K * std::cos(q) * vq;
            vq = c * wq + s * wp;
            vp = -s * wq + c * wp;
            const double growth = std::hypot(vq, vp);
            orbit_sum.add(std::log(growth));
            vq /= growth;
            vp /= growth;
            p += K * std::sin(q);
            const double rq = c * q + s * p;
            const double rp = -s * q + c * p;
            q = rq;
            p = rp;
            if (n + 1 == tenth) orbit_tenth = orbit_sum.value();
        }
        total.add(orbit_sum.value());
        total_tenth.add(orbit_tenth);
    }

    LyapunovEstimate est;
    est.n_orbits = n_orbits;
    est.n_kicks = n_kicks;
    const double shift = gamma_tau / 2.0;
    est.lambda = total.value() / (static_cast<double>(n_orbits) * n_kicks) - shift;
    const double early = total_tenth.value() / (static_cast<double>(n_orbits) * tenth) - shift;
    est.converged = std::abs(est.lambda - early) <= 0.05 * std::max(std::abs(est.lambda), 1e-6);
    return est;
}

double lyapunov_formula(double K, double nu_tau, double gamma_tau, LyapunovWhich which) {
    const double base = (which == LyapunovWhich::ensemble ? K / 2.0 : K) * std::sin(nu_tau);
    if (!(base > 0.0)) throw DomainError("lyapunov formula needs K sin(nu_tau) > 0");
    return std::log(base) - gamma_tau / 2.0;
}

} // namespace kho
