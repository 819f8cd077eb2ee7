#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kho/decoherence.hpp"
#include "kho/grid.hpp"
#include "kho/observables.hpp"

using namespace kho;

TEST_CASE("l1 distance of two displaced gaussians matches the closed form") {
    const GridSpec spec = GridSpec::square(256, 8.0);
    const double eta = 0.4;
    const PhaseSpaceGrid a = new_coherent_state(spec, {-0.4, 0.0}, eta, GridLabel::classical);
    const PhaseSpaceGrid b = new_coherent_state(spec, {0.4, 0.0}, eta, GridLabel::classical);
    // unit Gaussians separated by 2 sigma: integral |a - b| = 2 erf(1/sqrt(2)).
    // The integrand has a kink on the crossing plane, so the lattice sum
    // converges at second order: 2e-3 at this resolution.
    CHECK(std::abs(l1_distance(a, b) - 1.3653789842741717) < 4e-3);
    CHECK(l1_distance(a, a) == 0.0);
}

TEST_CASE("l1 distance requires a shared window") {
    const PhaseSpaceGrid a =
        new_coherent_state(GridSpec::square(64, 4.0), {0.0, 0.0}, 0.3, GridLabel::classical);
    const PhaseSpaceGrid b =
        new_coherent_state(GridSpec::square(64, 5.0), {0.0, 0.0}, 0.3, GridLabel::classical);
    CHECK_THROWS_AS(l1_distance(a, b), DomainError);
}

TEST_CASE("pair evolution records one sample before every kick") {
    const GridSpec spec = GridSpec::square(128, 6.0);
    const PhaseSpaceGrid q = new_coherent_state(spec, {0.0, 0.0}, 0.3, GridLabel::quantum);
    const PhaseSpaceGrid c = new_coherent_state(spec, {0.0, 0.0}, 0.3, GridLabel::classical);
    SystemParams params;
    params.K = 2.0;
    params.eta = 0.3;
    DecoherenceParams deco;
    deco.D = 0.01;
    int calls = 0;
    const DistanceSeries series =
        evolve_pair(q, c, params, deco, 4, [&](int n, const PhaseSpaceGrid& wq,
                                               const PhaseSpaceGrid& wc) {
            CHECK(n == calls);
            CHECK(wq.label == GridLabel::quantum);
            CHECK(wc.label == GridLabel::classical);
            ++calls;
        });
    CHECK(calls == 5);
    REQUIRE(series.records.size() == 5);
    CHECK(series.records[0].n == 0);
    CHECK(series.records[0].distance == 0.0);
    CHECK(series.records[4].n == 4);
    CHECK(series.records[4].distance > 0.0);
    for (const DistanceRecord& r : series.records) {
        CHECK(r.norm_q == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(r.norm_cl == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(r.negativity >= 0.0);
    }
    CHECK(series.chi_value == doctest::Approx(chi(2.0, 0.3, 0.01)));
    CHECK(series.distances().size() == 5);
    CHECK(series.distances()[4] == series.records[4].distance);
}

TEST_CASE("pair evolution rejects mismatched inputs") {
    const GridSpec spec = GridSpec::square(128, 6.0);
    const PhaseSpaceGrid q = new_coherent_state(spec, {0.0, 0.0}, 0.3, GridLabel::quantum);
    const PhaseSpaceGrid c = new_coherent_state(spec, {0.0, 0.0}, 0.3, GridLabel::classical);
    SystemParams params;
    params.K = 2.0;
    params.eta = 0.3;
    const DecoherenceParams deco;
    CHECK_THROWS_AS(evolve_pair(c, c, params, deco, 1), DomainError); // labels swapped
    PhaseSpaceGrid shifted = c;
    shifted.values[0] += 1e-3;
    CHECK_THROWS_AS(evolve_pair(q, shifted, params, deco, 1), DomainError); // unequal start
    CHECK_THROWS_AS(evolve_pair(q, c, params, deco, -1), ConfigError);
    // with D = 0 the control parameter is left unset
    CHECK(evolve_pair(q, c, params, deco, 0).chi_value == 0.0);
}

TEST_CASE("first-peak detection") {
    const PeakResult peak = detect_first_peak({0.0, 0.1, 0.5, 1.2, 0.9, 1.5, 1.1});
    CHECK(peak.n == 3);
    CHECK(peak.value == doctest::Approx(1.2));

    // a series that rises into its final record peaks there
    const PeakResult tail = detect_first_peak({0.0, 0.1, 0.2, 0.5, 0.9, 1.4});
    CHECK(tail.n == 5);
    CHECK(tail.value == doctest::Approx(1.4));

    CHECK_THROWS_AS(detect_first_peak({0.0, 0.1, 0.5, 1.2}), DomainError); // too short
    CHECK_THROWS_AS(detect_first_peak({1.0, 1.0, 1.0, 1.0, 1.0}), DomainError); // never rises
    CHECK_THROWS_AS(detect_first_peak({0.0, 0.0, 0.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("peak-time fit against ln(1/eta)") {
    // n_peak = 2 ln(1/eta) + 1, exactly
    const std::vector<std::pair<double, double>> pts = {
        {std::exp(-1.0), 3.0}, {std::exp(-2.0), 5.0}, {std::exp(-3.0), 7.0}};
    const PeakFit fit = fit_peak_scaling(pts);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.residual < 1e-12);
    REQUIRE(fit.points.size() == 3);
    CHECK(fit.points[0].first == doctest::Approx(1.0));

    CHECK_THROWS_AS(fit_peak_scaling({{0.1, 3.0}, {0.05, 4.0}}), DomainError); // < 3 points
    CHECK_THROWS_AS(fit_peak_scaling({{0.1, 3.0}, {0.1, 4.0}, {0.1, 5.0}}), DomainError);
}

TEST_CASE("least-squares line") {
    const auto [slope, intercept] = fit_line({{0.0, 1.0}, {1.0, 3.0}, {2.0, 5.0}});
    CHECK(slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_line({{1.0, 2.0}, {1.0, 3.0}}), DomainError);
}

TEST_CASE("logarithmic separation time") {
    CHECK(separation_time(1.0, 2.0, std::exp(-4.0)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(separation_time(1.0, 2.0, 1.5) == 0.0);
    CHECK_THROWS_AS(separation_time(1.0, 0.0, 0.1), DomainError);
}
