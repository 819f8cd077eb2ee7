#include "kho/observables.hpp"

#include <algorithm>
#include <cmath>

#include "kho/detail/spectral.hpp"
#include "kho/propagators.hpp"

namespace kho {

double l1_distance(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) {
    if (!(a.spec == b.spec)) throw DomainError("grids must share one phase-space window");
    detail::KahanSum sum;
    const size_t n = a.values.size();
    for (size_t i = 0; i < n; ++i) sum.add(std::abs(a.values[i] - b.values[i]));
    return sum.value() * a.spec.cell_area();
}

std::vector<double> DistanceSeries::distances() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.distance);
    return out;
}

DistanceSeries evolve_pair(const PhaseSpaceGrid& quantum, const PhaseSpaceGrid& classical,
                           const SystemParams& params, const DecoherenceParams& deco, int n_kicks,
                           const PairObserver& observer) {
    params.validate();
    deco.validate();
    if (n_kicks < 0) throw ConfigError("kick count must be >= 0");
    if (quantum.label != GridLabel::quantum || classical.label != GridLabel::classical)
        throw DomainError("evolve_pair expects a (quantum, classical) grid pair");
    if (!(quantum.spec == classical.spec))
        throw DomainError("grids must share one phase-space window");
    if (quantum.values != classical.values)
        throw DomainError("the pair must start from identical initial distributions");

    PhaseSpaceGrid wq = quantum;
    PhaseSpaceGrid wc = classical;

    DistanceSeries series;
    series.params = params;
    series.deco = deco;
    series.chi_value = deco.D > 0.0 ? chi(params.K, params.eta, deco.D) : 0.0;

    auto record = [&](int n) {
        DistanceRecord rec;
        rec.n = n;
        rec.distance = l1_distance(wq, wc);
        rec.norm_q = riemann_norm(wq);
        rec.norm_cl = riemann_norm(wc);
        rec.negativity = negativity_volume(wq);
        series.records.push_back(rec);
        if (observer) observer(n, wq, wc);
    };

    record(0); // state immediately before the first kick
    for (int n = 0; n < n_kicks; ++n) {
        wq = step(wq, params, StepMode::quantum, deco);
        wc = step(wc, params, StepMode::classical, deco);
        record(n + 1);
    }
    return series;
}

PeakResult detect_first_peak(const std::vector<double>& d) {
    if (d.size() < 5) throw DomainError("peak detection needs at least 5 samples");
    std::vector<double> head(d.begin(), d.begin() + 3);
    std::sort(head.begin(), head.end());
    const double floor_level = 3.0 * head[1];
    for (size_t i = 1; i < d.size(); ++i) {
        if (!(d[i] > floor_level)) continue;
        if (!(d[i] > d[i - 1])) continue; // must rise into the peak
        if (i + 1 < d.size() && d[i + 1] > d[i]) continue;
        return PeakResult{static_cast<int>(i), d[i]};
    }
    throw DomainError("no peak: series never rises above 3x its early baseline");
}

std::pair<double, double> fit_line(const std::vector<std::pair<double, double>>& xy) {
    if (xy.size() < 2) throw DomainError("line fit needs at least 2 samples");
    const double n = static_cast<double>(xy.size());
    detail::KahanSum sx, sy, sxx, sxy;
    for (const auto& [x, y] : xy) {
        sx.add(x);
        sy.add(y);
        sxx.add(x * x);
        sxy.add(x * y);
    }
    const double denom = n * sxx.value() - sx.value() * sx.value();
    const double scale = std::max(1.0, sxx.value());
    if (std::abs(denom) < 1e-12 * scale) throw DomainError("line fit abscissas are degenerate");
    const double slope = (n * sxy.value() - sx.value() * sy.value()) / denom;
    const double intercept = (sy.value() - slope * sx.value()) / n;
    return {slope, intercept};
}

PeakFit fit_peak_scaling(const std::vector<std::pair<double, double>>& eta_npeak) {
    if (eta_npeak.size() < 3) throw DomainError("peak scaling fit needs at least 3 points");
    PeakFit fit;
    fit.points.reserve(eta_npeak.size());
    for (const auto& [eta, n_peak] : eta_npeak) {
        if (!(eta > 0.0) || !(n_peak >= 1.0))
            throw DomainError("peak scaling fit needs eta > 0 and n_peak >= 1");
        fit.points.emplace_back(std::log(1.0 / eta), n_peak);
    }
    const auto [lo, hi] =
        std::minmax_element(eta_npeak.begin(), eta_npeak.end(),
                            [](const auto& a, const auto& b) { return a.first < b.first; });
    if (!(hi->first > lo->first * (1.0 + 1e-12)))
        throw DomainError("peak scaling fit needs at least two distinct eta values");
    std::tie(fit.slope, fit.intercept) = fit_line(fit.points);
    detail::KahanSum res;
    for (const auto& [x, y] : fit.points) {
        const double r = y - (fit.slope * x + fit.intercept);
        res.add(r * r);
    }
    fit.residual = std::sqrt(res.value() / static_cast<double>(fit.points.size()));
    return fit;
}

double separation_time(double tau, double lambda, double eta) {
    if (!(lambda > 0.0)) throw DomainError("separation time needs a positive lyapunov exponent");
    if (!(eta > 0.0)) throw DomainError("separation time needs eta > 0");
    if (eta >= 1.0) return 0.0;
    return (tau / lambda) * std::log(1.0 / eta);
}

} // namespace kho
