#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kho/grid.hpp"
#include "kho/observables.hpp"
#include "kho/oracles.hpp"

using namespace kho;

namespace {

SystemParams params_for(double K, double eta) {
    SystemParams p;
    p.K = K;
    p.eta = eta;
    return p;
}

// q axis on [-8, 8) with 256 cells; p window commensurate with the Wigner
// period of that sampling
GridSpec wigner_spec(double eta) {
    const int n = 256;
    const double dq = 16.0 / n;
    const double w = wigner_momentum_half_width(eta, dq);
    return GridSpec{n, n, -8.0, 8.0, -w, w};
}

} // namespace

TEST_CASE("coherent wave function is normalized") {
    const WaveFunction wf = coherent_wavefunction(512, -8.0, 16.0 / 512, 0.5, 0.3, 0.2);
    CHECK(wf.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(wf.n() == 512);
    CHECK(wf.q_at(0) == -8.0);
    CHECK_THROWS_AS(coherent_wavefunction(1, -8.0, 0.1, 0.0, 0.0, 0.2), ConfigError);
    CHECK_THROWS_AS(coherent_wavefunction(512, -8.0, 0.0, 0.0, 0.0, 0.2), ConfigError);
    CHECK_THROWS_AS(coherent_wavefunction(512, -8.0, 0.1, 0.0, 0.0, 0.0), ConfigError);
}

TEST_CASE("commensurate momentum window") {
    CHECK(wigner_momentum_half_width(0.2, 16.0 / 256) ==
          doctest::Approx(2.0106192982974678).epsilon(1e-14));
}

TEST_CASE("wigner transform of a coherent state is the matching gaussian") {
    const double eta = 0.2;
    const GridSpec spec = wigner_spec(eta);
    const WaveFunction wf = coherent_wavefunction(spec.n_q, spec.q_min, spec.dq(), 0.5, 0.3, eta);
    const PhaseSpaceGrid w = wigner_of_state(wf, spec);
    const PhaseSpaceGrid expect = new_coherent_state(spec, {0.5, 0.3}, eta);
    CHECK(l1_distance(w, expect) < 1e-9);
    CHECK(riemann_norm(w) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("wigner transform guards its sampling assumptions") {
    const double eta = 0.2;
    const GridSpec spec = wigner_spec(eta);
    const WaveFunction wf = coherent_wavefunction(spec.n_q, spec.q_min, spec.dq(), 0.5, 0.3, eta);
    GridSpec wide = spec;
    wide.p_min *= 2.0;
    wide.p_max *= 2.0;
    CHECK_THROWS_AS(wigner_of_state(wf, wide), GuardError); // window beyond one Wigner period
    GridSpec shifted = spec;
    shifted.q_min += spec.dq();
    shifted.q_max += spec.dq();
    CHECK_THROWS_AS(wigner_of_state(wf, shifted), DomainError); // q axis mismatch
}

TEST_CASE("state-vector evolution conserves probability") {
    const double eta = 0.2;
    const GridSpec spec = wigner_spec(eta);
    WaveFunction wf = coherent_wavefunction(spec.n_q, spec.q_min, spec.dq(), 0.5, 0.3, eta);
    const SystemParams params = params_for(2.0, eta);
    for (int kick = 0; kick < 3; ++kick) {
        wf = evolve_state(wf, params);
        CHECK(wf.norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK_THROWS_AS(evolve_state(wf, params_for(2.0, 0.3)), DomainError); // eta mismatch
    // probability within 6 eta of a q edge trips the leakage guard
    const WaveFunction near_edge =
        coherent_wavefunction(spec.n_q, spec.q_min, spec.dq(), -7.0, 0.0, eta);
    CHECK_THROWS_AS(evolve_state(near_edge, params), GuardError);
}

TEST_CASE("gaussian ensembles are deterministic in the seed") {
    const TrajectoryEnsemble a = sample_gaussian_ensemble(20000, {1.0, -2.0}, 0.7, 42);
    const TrajectoryEnsemble b = sample_gaussian_ensemble(20000, {1.0, -2.0}, 0.7, 42);
    const TrajectoryEnsemble c = sample_gaussian_ensemble(20000, {1.0, -2.0}, 0.7, 43);
    CHECK(a.q == b.q);
    CHECK(a.p == b.p);
    CHECK(a.q != c.q);
    CHECK(a.seed == 42);
    CHECK(a.step_count == 0);

    double mq = 0.0, mp = 0.0, vq = 0.0, vp = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        mq += a.q[static_cast<size_t>(i)];
        mp += a.p[static_cast<size_t>(i)];
    }
    mq /= a.size();
    mp /= a.size();
    for (int i = 0; i < a.size(); ++i) {
        vq += (a.q[static_cast<size_t>(i)] - mq) * (a.q[static_cast<size_t>(i)] - mq);
        vp += (a.p[static_cast<size_t>(i)] - mp) * (a.p[static_cast<size_t>(i)] - mp);
    }
    vq /= a.size();
    vp /= a.size();
    CHECK(mq == doctest::Approx(1.0).epsilon(0.03));
    CHECK(mp == doctest::Approx(-2.0).epsilon(0.02));
    CHECK(vq == doctest::Approx(0.49).epsilon(0.06));
    CHECK(vp == doctest::Approx(0.49).epsilon(0.06));

    CHECK_THROWS_AS(sample_gaussian_ensemble(0, {0.0, 0.0}, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(sample_gaussian_ensemble(10, {0.0, 0.0}, -1.0, 1), ConfigError);
}

TEST_CASE("noiseless trajectory step is the exact kicked rotation") {
    TrajectoryEnsemble ens = sample_gaussian_ensemble(64, {0.5, -0.5}, 0.8, 5);
    const SystemParams params = params_for(2.0, 0.3);
    const DecoherenceParams trivial;
    const TrajectoryEnsemble out = mc_step(ens, params, trivial);
    CHECK(out.step_count == 1);
    const double c = std::cos(params.nu_tau), s = std::sin(params.nu_tau);
    double worst = 0.0;
    for (int i = 0; i < ens.size(); ++i) {
        const double q = ens.q[static_cast<size_t>(i)];
        const double p = ens.p[static_cast<size_t>(i)] + params.K * std::sin(q);
        worst = std::max(worst, std::abs(out.q[static_cast<size_t>(i)] - (c * q + s * p)));
        worst = std::max(worst, std::abs(out.p[static_cast<size_t>(i)] - (-s * q + c * p)));
    }
    CHECK(worst < 1e-14);

    DecoherenceParams noisy;
    noisy.D = 0.01;
    const TrajectoryEnsemble n1 = mc_step(ens, params, noisy);
    const TrajectoryEnsemble n2 = mc_step(ens, params, noisy);
    CHECK(n1.q == n2.q); // noise is a pure function of (seed, kick, trajectory)
    CHECK(n1.p == n2.p);
}

TEST_CASE("histogram bins with periodic wrapping") {
    TrajectoryEnsemble ens;
    ens.q = {4.5};           // wraps to -3.5 in a [-4, 4) window
    ens.p = {0.0};
    const GridSpec spec = GridSpec::square(64, 4.0);
    const PhaseSpaceGrid h = histogram_ensemble(ens, spec);
    CHECK(h.at(4, 32) == doctest::Approx(1.0 / spec.cell_area()));
    CHECK(riemann_norm(h) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fresh backtrace lattice reproduces the grid initial state") {
    const GridSpec spec = GridSpec::square(128, 6.0);
    const BacktraceLattice lat = new_backtrace_lattice(spec, {0.5, -0.3}, 0.25);
    const PhaseSpaceGrid from_lattice = backtrace_grid(lat);
    const PhaseSpaceGrid direct = new_coherent_state(spec, {0.5, -0.3}, 0.25, GridLabel::classical);
    CHECK(l1_distance(from_lattice, direct) < 1e-12);
    CHECK(from_lattice.label == GridLabel::classical);
}

TEST_CASE("backtrace evolution tracks the spectral classical engine") {
    const GridSpec spec = GridSpec::square(256, 8.0);
    const SystemParams params = params_for(1.0, 0.25);
    const DecoherenceParams trivial;
    BacktraceLattice lat = new_backtrace_lattice(spec, {0.5, -0.3}, 0.25);
    PhaseSpaceGrid grid = new_coherent_state(spec, {0.5, -0.3}, 0.25, GridLabel::classical);
    for (int kick = 0; kick < 2; ++kick) {
        backtrace_advance(lat, params);
        grid = step(grid, params, StepMode::classical, trivial);
    }
    const PhaseSpaceGrid exact = backtrace_grid(lat);
    for (double v : exact.values) CHECK(v >= 0.0); // exact by characteristics
    CHECK(l1_distance(exact, grid) < 0.05);
}

TEST_CASE("stretching-rate closed forms") {
    CHECK(lyapunov_formula(10.0, std::numbers::pi / 3.0, 0.0, LyapunovWhich::ensemble) ==
          doctest::Approx(1.4655968762082099).epsilon(1e-14));
    CHECK(lyapunov_formula(10.0, std::numbers::pi / 3.0, 0.0, LyapunovWhich::origin) ==
          doctest::Approx(2.158744056768155).epsilon(1e-14));
    CHECK(lyapunov_formula(10.0, std::numbers::pi / 3.0, 0.3, LyapunovWhich::ensemble) ==
          doctest::Approx(1.4655968762082099 - 0.15).epsilon(1e-14));
    CHECK_THROWS_AS(lyapunov_formula(10.0, std::numbers::pi, 0.0, LyapunovWhich::ensemble),
                    DomainError);
}

TEST_CASE("numeric stretching rate agrees with the strong-chaos formula") {
    const SystemParams params = params_for(10.0, 0.1);
    CHECK_THROWS_AS(lyapunov_numeric(params, 0.0, 500, 100, 1), ConfigError);
    CHECK_THROWS_AS(lyapunov_numeric(params, 0.0, 1000, 50, 1), ConfigError);
    const LyapunovEstimate est = lyapunov_numeric(params, 0.0, 1000, 100, 11);
    CHECK(est.converged);
    CHECK(est.n_orbits == 100);
    CHECK(est.n_kicks == 1000);
    CHECK(est.lambda == doctest::Approx(1.4655968762082099).epsilon(0.15));
}
