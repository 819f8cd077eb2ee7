#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "kho/decoherence.hpp"
#include "kho/experiments.hpp"
#include "kho/grid.hpp"

using namespace kho;

namespace {

// curve with prescribed distances and peak position for collapse tests
CurveResult synthetic_curve(const std::vector<double>& distances, int peak_n, double chi_value) {
    CurveResult c;
    c.eta = 0.1;
    c.D = 0.01;
    c.chi_value = chi_value;
    c.series.chi_value = chi_value;
    for (size_t i = 0; i < distances.size(); ++i)
        c.series.records.push_back({static_cast<int>(i), distances[i], 1.0, 1.0, 0.0});
    c.peak_found = true;
    c.peak_n = peak_n;
    c.peak_value = distances[static_cast<size_t>(peak_n)];
    return c;
}

} // namespace

TEST_CASE("scenario names round trip") {
    CHECK(scenario_from_string("fig2") == Scenario::fig2_collapse);
    CHECK(scenario_from_string("fig2_collapse") == Scenario::fig2_collapse);
    CHECK(to_string(Scenario::fig4_chi_scan) == "fig4_chi_scan");
    CHECK_THROWS_AS(scenario_from_string("fig9"), ConfigError);
}

TEST_CASE("window resolution rule") {
    // wide grids cap at two web cells (4 pi), fine grids take n * eta / 2
    const GridSpec capped = resolve_grid(0.04, 1024, 0.0);
    CHECK(capped.q_max == doctest::Approx(4.0 * std::numbers::pi));
    CHECK(capped.n_q == 1024);
    CHECK(capped.q_min == -capped.q_max);
    const GridSpec dynamic = resolve_grid(0.02, 1024, 0.0);
    CHECK(dynamic.q_max == doctest::Approx(10.24));
    // explicit window overrides the rule
    const GridSpec fixed = resolve_grid(0.1, 256, 6.0);
    CHECK(fixed.q_max == 6.0);
    // the dynamic window must reach half-width 8
    CHECK_THROWS_AS(resolve_grid(0.01, 256, 0.0), ConfigError);
    CHECK_THROWS_AS(resolve_grid(0.1, 100, 20.0), ConfigError); // not a power of two
    CHECK_THROWS_AS(resolve_grid(0.1, 256, -1.0), ConfigError);
}

TEST_CASE("scenario defaults are self-consistent") {
    for (Scenario s : {Scenario::fig1_unitary, Scenario::fig2_collapse, Scenario::fig3_snapshots,
                       Scenario::fig4_chi_scan, Scenario::custom}) {
        const ExperimentConfig cfg = default_config(s);
        CHECK(cfg.scenario == s);
        CHECK(cfg.params.K == 2.0);
        CHECK_NOTHROW(cfg.validate());
    }
    const ExperimentConfig fig1 = default_config(Scenario::fig1_unitary);
    CHECK(fig1.params.eta == 0.3);
    CHECK(fig1.deco.trivial());

    const ExperimentConfig fig2 = default_config(Scenario::fig2_collapse);
    REQUIRE(fig2.pairs.size() == 3);
    CHECK(fig2.pairs[0].eta == 0.1);
    CHECK(fig2.pairs[2].eta == 0.02);
    // every pair sits on one chi within 5%
    const double target = chi(fig2.params.K, fig2.pairs[0].eta, fig2.pairs[0].D);
    for (const SweepPoint& pt : fig2.pairs)
        CHECK(std::abs(chi(fig2.params.K, pt.eta, pt.D) / target - 1.0) < 0.05);

    const ExperimentConfig fig4 = default_config(Scenario::fig4_chi_scan);
    REQUIRE(fig4.chi_targets.size() == 6);
    CHECK(fig4.chi_targets.front() == doctest::Approx(1e-2));
    CHECK(fig4.chi_targets.back() == doctest::Approx(1.0));
    CHECK(fig4.deco.D > 0.0);
}

TEST_CASE("config validation rejects out-of-range values") {
    ExperimentConfig cfg = default_config(Scenario::fig2_collapse);
    cfg.n_kicks = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config(Scenario::fig2_collapse);
    cfg.grid_n = 8;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config(Scenario::fig2_collapse);
    cfg.window_half = -2.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config(Scenario::fig2_collapse);
    cfg.pairs[1].eta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config(Scenario::fig2_collapse);
    cfg.pairs.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config(Scenario::fig1_unitary);
    cfg.deco.D = 0.01; // fig1 is the unitary scenario
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config(Scenario::fig4_chi_scan);
    cfg.chi_targets.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_config(Scenario::fig4_chi_scan);
    cfg.deco.D = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("json config overlays the scenario defaults") {
    const ExperimentConfig cfg = parse_experiment_config(R"({
        "scenario": "fig2",
        "pairs": [[0.1, 0.05], [0.04, 4.5e-3, 2048], [0.02, 7e-4, 1024, 18.85]],
        "n_kicks": 10,
        "grid_n": 512,
        "seed": 3
    })");
    CHECK(cfg.scenario == Scenario::fig2_collapse);
    CHECK(cfg.n_kicks == 10);
    CHECK(cfg.grid_n == 512);
    CHECK(cfg.seed == 3);
    CHECK(cfg.params.K == 2.0); // inherited default
    REQUIRE(cfg.pairs.size() == 3);
    CHECK(cfg.pairs[0].grid_n == 0);
    CHECK(cfg.pairs[0].window_half == 0.0);
    CHECK(cfg.pairs[1].grid_n == 2048);
    CHECK(cfg.pairs[2].window_half == doctest::Approx(18.85));

    const ExperimentConfig custom = parse_experiment_config(R"({
        "K": 3.5, "eta": 0.2, "D": 0.01, "center": [0.5, -0.5], "n_kicks": 4
    })");
    CHECK(custom.scenario == Scenario::custom);
    CHECK(custom.params.K == 3.5);
    CHECK(custom.center.first == 0.5);
    CHECK(custom.center.second == -0.5);
}

TEST_CASE("json config rejects malformed input") {
    CHECK_THROWS_AS(parse_experiment_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"scenario": "fig9"})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"eta": "wide"})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"center": [1.0]})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"scenario": "fig2", "pairs": [[0.1]]})"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_experiment_config(R"({"scenario": "fig2", "pairs": [[0.1, 0.05, 512, 8.0, 1.0]]})"),
        ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"D": 0.01, "gamma_tau": 0.1})"), ConfigError);
}

TEST_CASE("collapse spread over synthetic curves") {
    const std::vector<double> base = {0.0, 0.2, 0.6, 1.0, 1.4, 1.0, 0.8, 0.7, 0.6, 0.5, 0.4};
    std::vector<double> doubled;
    for (double v : base) doubled.push_back(2.0 * v);

    // identical curves collapse exactly
    CHECK(collapse_spread({synthetic_curve(base, 4, 1.0), synthetic_curve(base, 4, 1.0)}) ==
          doctest::Approx(0.0));
    // a factor-2 offset at equal chi gives (2-1)/1.5 everywhere
    CHECK(collapse_spread({synthetic_curve(base, 4, 1.0), synthetic_curve(doubled, 4, 1.0)}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    // rescaling by chi removes a pure amplitude factor
    CHECK(collapse_spread({synthetic_curve(base, 4, 1.0), synthetic_curve(doubled, 4, 2.0)}) ==
          doctest::Approx(0.0));

    CHECK_THROWS_AS(collapse_spread({synthetic_curve(base, 4, 1.0)}), DomainError);
    // the window needs samples out to 2 * n_peak
    CHECK_THROWS_AS(collapse_spread({synthetic_curve(base, 4, 1.0),
                                     synthetic_curve({0.0, 0.2, 0.6, 1.0, 1.4, 1.0, 0.8}, 4, 1.0)}),
                    DomainError);
    CurveResult no_peak = synthetic_curve(base, 4, 1.0);
    no_peak.peak_found = false;
    CHECK_THROWS_AS(collapse_spread({no_peak, synthetic_curve(base, 4, 1.0)}), DomainError);
}

TEST_CASE("custom run produces a well-formed distance curve") {
    ExperimentConfig cfg = default_config(Scenario::custom);
    cfg.params.eta = 0.2;
    cfg.deco.D = 0.08;
    cfg.grid_n = 256;
    cfg.n_kicks = 6;
    const CurveResult r = run_custom(cfg);
    CHECK(r.eta == 0.2);
    CHECK(r.D == 0.08);
    CHECK(r.chi_value == doctest::Approx(chi(2.0, 0.2, 0.08)));
    REQUIRE(r.series.records.size() == 7);
    CHECK(r.series.records[0].distance == 0.0);
    CHECK(r.series.records[6].distance > 0.0);
    for (const DistanceRecord& rec : r.series.records) {
        CHECK(rec.norm_q == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rec.norm_cl == doctest::Approx(1.0).epsilon(1e-6));
    }
}
