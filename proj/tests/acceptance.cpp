// End-to-end acceptance checks. Each numbered check prints exactly one
// PASS/FAIL line with the measured numbers; the process exits with the
// number of failed checks. Tolerances are pinned here on purpose: they are
// the shipped contract, not tuning knobs.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "kho/decoherence.hpp"
#include "kho/experiments.hpp"
#include "kho/grid.hpp"
#include "kho/observables.hpp"
#include "kho/oracles.hpp"
#include "kho/propagators.hpp"

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& detail) {
    std::printf("criterion %2d %s  %s\n", index, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

template <typename Fn>
void guarded(int index, Fn&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(index, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// 1. The seven (eta, D) pairs of the constant-chi family, K=2: chi() must
//    return 0.017 within 3%. One pair is arithmetically off by more than
//    that; the check reports it rather than widening the tolerance.
void criterion_1() {
    const std::vector<std::pair<double, double>> pairs = {
        {0.1, 5.13e-2}, {0.04, 4.5e-3},  {0.02, 7e-4},    {0.015, 3.25e-4},
        {0.007, 4.5e-5}, {0.005, 1.74e-5}, {0.003, 4.5e-6}};
    const double target = 0.017;
    int ok = 0;
    std::string worst;
    double worst_dev = 0.0;
    for (const auto& [eta, D] : pairs) {
        const double c = kho::chi(2.0, eta, D);
        const double dev = std::abs(c - target) / target;
        if (dev <= 0.03) ++ok;
        if (dev > worst_dev) {
            worst_dev = dev;
            worst = fmt("eta=%g D=%g chi=%.6g (%.2f%% off)", eta, D, c, 100.0 * dev);
        }
    }
    report(1, ok == static_cast<int>(pairs.size()),
           fmt("chi within 3%% of 0.017 for %d/7 pairs; worst: %s", ok, worst.c_str()));
}

// 2. Constant-chi collapse at eta in {0.1, 0.04, 0.02}, K=2, 20 kicks,
//    1024^2: rescaled distance curves within 25% pointwise over
//    n in [1, 2 n_peak], and peak-time fit slope 1.45 +/- 0.35.
void criterion_2() {
    kho::ExperimentConfig cfg = kho::default_config(kho::Scenario::fig2_collapse);
    const kho::CollapseResult r = kho::run_fig2(cfg);
    const bool collapse_ok = r.collapse_spread <= 0.25;
    const bool slope_ok = std::abs(r.fit.slope - 1.45) <= 0.35;
    std::string peaks;
    for (const auto& c : r.curves) peaks += fmt(" n_peak(%g)=%d", c.eta, c.peak_n);
    report(2, collapse_ok && slope_ok,
           fmt("collapse spread %.3g (limit 0.25), peak-fit slope %.3g (1.45 +/- 0.35);%s",
               r.collapse_spread, r.fit.slope, peaks.c_str()));
}

// 3. D=4.5e-4, K=2, chi swept over six decade-spanning targets in [1e-2, 1]:
//    log-log slope of max_n distance vs chi = 1.0 +/- 0.15 over the points
//    with max distance <= 1.
void criterion_3() {
    kho::ExperimentConfig cfg = kho::default_config(kho::Scenario::fig4_chi_scan);
    const kho::ChiScanResult r = kho::run_fig4(cfg);
    int in_range = 0;
    for (const auto& pt : r.points)
        if (pt.chi_value >= 1e-2 - 1e-9 && pt.chi_value <= 1.0 + 1e-9 && pt.max_distance <= 1.0)
            ++in_range;
    const bool slope_ok = std::abs(r.loglog_slope - 1.0) <= 0.15;
    report(3, slope_ok && in_range >= 6,
           fmt("log-log slope %.3g (1.0 +/- 0.15) over %d fitted points", r.loglog_slope,
               in_range));
}

// 4. Unitary run at eta=0.3, K=2, D=0: the first distance peak exceeds 1,
//    the quantum grid is negative somewhere at the peak, the classical
//    grid is nonnegative to 1e-10.
void criterion_4() {
    kho::ExperimentConfig cfg = kho::default_config(kho::Scenario::fig1_unitary);
    const kho::UnitaryResult r = kho::run_fig1(cfg);
    const bool ok = r.curve.peak_found && r.curve.peak_value > 1.0 &&
                    r.peak_negativity_quantum > 0.0 && r.peak_negativity_classical < 1e-10;
    report(4, ok,
           fmt("first peak %.3g at n=%d; negativity quantum %.3g classical %.3g",
               r.curve.peak_value, r.curve.peak_n, r.peak_negativity_quantum,
               r.peak_negativity_classical));
}

// 5. D=0, eta=0.3, K=2, 5 kicks at 1024^2: the grid pipeline against the
//    state-vector reference, L1 < 1e-3 after every kick. The momentum
//    window is the commensurate one for the q sampling.
void criterion_5() {
    const int n = 1024;
    const double eta = 0.3;
    kho::SystemParams params;
    params.K = 2.0;
    params.eta = eta;
    // square window whose p half-width equals the aliasing-free maximum
    const double w = std::sqrt(std::numbers::pi * 2.0 * eta * eta * n) / 2.0;
    const kho::GridSpec spec = kho::GridSpec::square(n, w);
    kho::PhaseSpaceGrid grid = kho::new_coherent_state(spec, {0.0, 0.0}, eta);
    kho::WaveFunction wf = kho::coherent_wavefunction(n, spec.q_min, spec.dq(), 0.0, 0.0, eta);
    kho::DecoherenceParams deco;
    double worst = 0.0;
    for (int kick = 0; kick < 5; ++kick) {
        grid = kho::step(grid, params, kho::StepMode::quantum, deco);
        wf = kho::evolve_state(wf, params);
        worst = std::max(worst, kho::l1_distance(grid, kho::wigner_of_state(wf, spec)));
    }
    report(5, worst < 1e-3, fmt("max L1 vs state-vector reference %.3g over 5 kicks", worst));
}

// 6. Classical grid evolution vs a 1e6-trajectory Monte Carlo histogram,
//    K=2, D=4.5e-3, 10 kicks: L1 within 3/sqrt(samples per occupied cell).
void criterion_6() {
    const int n = 1024;
    const int m = 1000000;
    const double sigma = 0.25;
    kho::GridSpec spec = kho::GridSpec::square(n, 4.0 * std::numbers::pi);
    kho::SystemParams params;
    params.K = 2.0;
    params.eta = sigma;
    kho::DecoherenceParams deco;
    deco.D = 4.5e-3;
    kho::PhaseSpaceGrid grid = kho::new_coherent_state(spec, {0.0, 0.0}, sigma,
                                                       kho::GridLabel::classical);
    kho::TrajectoryEnsemble ens = kho::sample_gaussian_ensemble(m, {0.0, 0.0}, sigma, 7);
    for (int kick = 0; kick < 10; ++kick) {
        grid = kho::step(grid, params, kho::StepMode::classical, deco);
        ens = kho::mc_step(ens, params, deco);
    }
    const double dist = kho::l1_distance(grid, kho::histogram_ensemble(ens, spec));
    int occupied = 0;
    const double count_floor = 1.0 / (m * spec.cell_area());
    for (const double v : grid.values)
        if (v >= count_floor) ++occupied;
    const double band = 3.0 * std::sqrt(static_cast<double>(occupied) / m);
    report(6, dist < band, fmt("L1 %.3g vs shot-noise band %.3g", dist, band));
}

// 7. One-kick quantum-vs-classical L1 difference on a fixed smooth
//    distribution scales as eta^4: each halving of eta shrinks it by
//    16x +/- 30%, over three halvings from eta=0.2.
void criterion_7() {
    const kho::GridSpec spec = kho::GridSpec::square(256, 8.0);
    const kho::PhaseSpaceGrid base =
        kho::new_coherent_state(spec, {1.0, 0.5}, 1.0, kho::GridLabel::classical);
    kho::SystemParams params;
    params.K = 2.0;
    params.eta = 1.0;
    const kho::PhaseSpaceGrid classical = kho::kick_classical(base, params);
    std::vector<double> diffs;
    for (double eta : {0.2, 0.1, 0.05, 0.025}) {
        params.eta = eta;
        diffs.push_back(kho::l1_distance(kho::kick_quantum(base, params), classical));
    }
    bool ok = true;
    std::string detail = fmt("d(0.2)=%.3g ratios", diffs[0]);
    for (size_t i = 0; i + 1 < diffs.size(); ++i) {
        const double ratio = diffs[i] / diffs[i + 1];
        detail += fmt(" %.3g", ratio);
        if (std::abs(ratio - 16.0) > 0.3 * 16.0) ok = false;
    }
    report(7, ok, detail + " (16 +/- 30% each)");
}

// 8. The odd cubic correction profile: max |f(y) e^{-y^2}| = 0.081 +/- 0.001;
//    and the first-order smoothed quantum kernel matches a direct quadrature
//    of the exact one within chi*0.081*kernel + 2% at eta=0.04, D=4.5e-3.
void criterion_8() {
    double peak = 0.0;
    for (int i = 0; i <= 8000; ++i) {
        const double y = -4.0 + 8.0 * i / 8000.0;
        peak = std::max(peak, std::abs(kho::f_correction(y) * std::exp(-y * y)));
    }
    const bool peak_ok = std::abs(peak - 0.081) <= 1e-3;

    kho::SystemParams params;
    params.K = 2.0;
    params.eta = 0.04;
    const double D = 4.5e-3;
    const double chi = kho::chi(params.K, params.eta, D);
    const double qp = std::numbers::pi / 2.0, pp = 0.0;
    const double sD = std::sqrt(D);
    // exact kernel: Gaussian in x times the oscillatory frequency integral of
    // the kicked phase, evaluated by trapezoid far past the Gaussian cutoff
    const double h = sD / 4.0;
    const int half_steps = static_cast<int>(std::ceil(10.0 / sD / h));
    double worst_excess = 0.0; // (|approx - exact| - tolerance), worst lattice point
    double worst_rel = 0.0;
    for (int ix = 0; ix < 20; ++ix) {
        for (int iy = 0; iy < 20; ++iy) {
            const double x = -3.0 + 6.0 * (ix + 0.5) / 20.0;
            const double y = -3.0 + 6.0 * (iy + 0.5) / 20.0;
            const double qR = qp - 2.0 * sD * x;
            const double pR = pp + params.K * std::sin(qp) - 2.0 * sD * y;
            double integral = 0.0;
            for (int k = -half_steps; k <= half_steps; ++k) {
                const double mu = k * h;
                const double eta2 = params.eta * params.eta;
                const double phase = params.K * std::sin(qp) * std::sin(eta2 * mu) / eta2 -
                                     mu * (pR - pp);
                integral += std::exp(-D * mu * mu) * std::cos(phase);
            }
            integral *= h / (2.0 * std::numbers::pi);
            const double gauss_x = std::exp(-x * x) / (2.0 * std::sqrt(std::numbers::pi * D));
            const double exact = gauss_x * integral;
            const double cl = kho::smoothed_propagator({qR, pR}, {qp, pp}, params, D,
                                                       kho::SmoothedKernel::classical);
            const double approx = kho::smoothed_propagator({qR, pR}, {qp, pp}, params, D,
                                                           kho::SmoothedKernel::quantum_approx);
            const double tol = chi * 0.081 * cl + 0.02 * cl;
            worst_excess = std::max(worst_excess, std::abs(approx - exact) - tol);
            if (cl > 0.0)
                worst_rel = std::max(worst_rel, std::abs(approx - exact) / cl);
        }
    }
    report(8, peak_ok && worst_excess <= 0.0,
           fmt("max |f e^{-y^2}| = %.6g (0.081 +/- 0.001); kernel vs quadrature worst "
               "|diff|/classical %.3g",
               peak, worst_rel));
}

// 9. Exactness suite: primitive norm drift < 1e-12, six pi/3 rotations
//    return the state to L1 < 1e-8, Gaussian convolution semigroup to
//    1e-10, damped-reservoir moments match the closed form to 1e-6.
void criterion_9() {
    const kho::GridSpec spec = kho::GridSpec::square(128, 6.0);
    const kho::PhaseSpaceGrid state = kho::new_coherent_state(spec, {0.8, -0.4}, 0.3);
    kho::SystemParams params;
    params.K = 2.0;
    params.eta = 0.3;

    double norm_drift = 0.0;
    for (const kho::PhaseSpaceGrid& g :
         {kho::kick_quantum(state, params), kho::kick_classical(state, params),
          kho::rotate(state, std::numbers::pi / 3.0)})
        norm_drift = std::max(norm_drift, std::abs(kho::riemann_norm(g) - 1.0));

    kho::PhaseSpaceGrid rotated = state;
    for (int i = 0; i < 6; ++i) rotated = kho::rotate(rotated, std::numbers::pi / 3.0);
    const double rot_err = kho::l1_distance(rotated, state);

    const kho::PhaseSpaceGrid two = kho::gaussian_convolve(
        kho::gaussian_convolve(state, 0.02, 0.02), 0.03, 0.03);
    const double semi_err = kho::l1_distance(two, kho::gaussian_convolve(state, 0.05, 0.05));

    const double g = 0.4, nbar = 1.5, eta = 0.3, s0 = 0.5;
    const kho::PhaseSpaceGrid start =
        kho::new_coherent_state(spec, {0.8, -0.4}, s0, kho::GridLabel::classical);
    const kho::Moments m = kho::grid_moments(kho::dissipative_step(start, g, nbar, eta));
    const double var_want = s0 * s0 * std::exp(-g) +
                            2.0 * (nbar + 0.5) * eta * eta * (1.0 - std::exp(-g));
    const double mean_scale = std::exp(-g / 2.0);
    const double ou_err = std::max(
        {std::abs(m.mean_q - 0.8 * mean_scale), std::abs(m.mean_p + 0.4 * mean_scale),
         std::abs(m.var_q - var_want), std::abs(m.var_p - var_want)});

    report(9, norm_drift < 1e-12 && rot_err < 1e-8 && semi_err < 1e-10 && ou_err < 1e-6,
           fmt("norm drift %.3g, rotation identity %.3g, semigroup %.3g, reservoir moments %.3g",
               norm_drift, rot_err, semi_err, ou_err));
}

// 10. Chaotic stretching rate: the tangent-map estimate at K=10, nu_tau=pi/3
//     lands within 10% of ln[(K/2) sin nu_tau] = 1.4656, and dissipation
//     gamma_tau=0.2 shifts the estimate by -0.1 +/- 20%.
void criterion_10() {
    kho::SystemParams params;
    params.K = 10.0;
    params.eta = 0.1;
    const double formula =
        kho::lyapunov_formula(params.K, params.nu_tau, 0.0, kho::LyapunovWhich::ensemble);
    const kho::LyapunovEstimate base = kho::lyapunov_numeric(params, 0.0, 1000, 100, 11);
    const kho::LyapunovEstimate damped = kho::lyapunov_numeric(params, 0.2, 1000, 100, 11);
    const double rel = std::abs(base.lambda - formula) / formula;
    const double shift = damped.lambda - base.lambda;
    const bool ok = base.converged && rel <= 0.10 && std::abs(shift + 0.1) <= 0.02;
    report(10, ok,
           fmt("lambda %.4g vs formula %.4g (%.1f%%); gamma_tau=0.2 shift %.4g (-0.1 +/- 20%%)",
               base.lambda, formula, 100.0 * rel, shift));
}

} // namespace

int main() {
    guarded(1, criterion_1);
    guarded(2, criterion_2);
    guarded(3, criterion_3);
    guarded(4, criterion_4);
    guarded(5, criterion_5);
    guarded(6, criterion_6);
    guarded(7, criterion_7);
    guarded(8, criterion_8);
    guarded(9, criterion_9);
    guarded(10, criterion_10);
    if (g_failures > 0) std::printf("acceptance: %d criteria failed\n", g_failures);
    else std::printf("acceptance: all criteria passed\n");
    return g_failures;
}
