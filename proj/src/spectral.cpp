#include "kho/detail/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace kho::detail {

namespace {

// Plan creation is not thread safe; execution on caller buffers is.
fftw_plan plan_for(int n, int sign) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, fftw_plan> cache;
    std::scoped_lock lock(mutex);
    auto key = std::make_pair(n, sign);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    std::vector<cdouble> tmp(static_cast<size_t>(n));
    auto* raw = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_plan plan = fftw_plan_dft_1d(n, raw, raw, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw Error("fftw plan creation failed for n=" + std::to_string(n));
    cache.emplace(key, plan);
    return plan;
}

struct LineSet {
    int count;      // number of lines
    int length;     // samples per line
    long first_stride; // stride between lines
    long stride;    // stride within a line
    double dx;      // sample spacing along the line
};

LineSet line_set(const GridSpec& spec, Axis axis) {
    if (axis == Axis::p)
        return {spec.n_q, spec.n_p, static_cast<long>(spec.n_p), 1, spec.dp()};
    return {spec.n_p, spec.n_q, 1, static_cast<long>(spec.n_p), spec.dq()};
}

double transverse_coord(const GridSpec& spec, Axis axis, int line) {
    return axis == Axis::p ? spec.q_at(line) : spec.p_at(line);
}

} // namespace

void fft(cdouble* data, int n, int sign) {
    auto* raw = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan_for(n, sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD), raw, raw);
}

std::vector<double> angular_freqs(int n, double dx) {
    std::vector<double> freqs(static_cast<size_t>(n));
    const double base = 2.0 * std::numbers::pi / (n * dx);
    for (int k = 0; k < n; ++k) {
        int folded = k < n / 2 ? k : k - n;
        freqs[static_cast<size_t>(k)] = base * folded;
    }
    return freqs;
}

PhaseSpaceGrid apply_axis_table(const PhaseSpaceGrid& grid, Axis axis, const TableFn& fill,
                                bool check_unimodular) {
    const LineSet lines = line_set(grid.spec, axis);
    PhaseSpaceGrid out = grid;
    std::vector<cdouble> buf(static_cast<size_t>(lines.length));
    std::vector<cdouble> table(static_cast<size_t>(lines.length));
    KahanSum imag_mass;
    const double inv_n = 1.0 / lines.length;

    for (int line = 0; line < lines.count; ++line) {
        const double t = transverse_coord(grid.spec, axis, line);
        fill(t, table);
        if (check_unimodular) {
            if (std::abs(table[0] - cdouble(1.0, 0.0)) > kUnimodularTol)
                throw DomainError("fourier multiplier must equal 1 at zero frequency");
            for (const cdouble& m : table)
                if (std::abs(std::abs(m) - 1.0) > kUnimodularTol)
                    throw DomainError("fourier multiplier is not unit modulus");
        }
        // The Nyquist bin has no conjugate partner; keep the output spectrum
        // Hermitian by applying only the real part of its multiplier.
        table[static_cast<size_t>(lines.length / 2)] =
            table[static_cast<size_t>(lines.length / 2)].real();

        const double* src = grid.values.data() + static_cast<size_t>(line) * lines.first_stride;
        double* dst = out.values.data() + static_cast<size_t>(line) * lines.first_stride;
        for (int j = 0; j < lines.length; ++j) buf[static_cast<size_t>(j)] = src[j * lines.stride];
        fft(buf.data(), lines.length, +1);
        for (int k = 0; k < lines.length; ++k) buf[static_cast<size_t>(k)] *= table[static_cast<size_t>(k)];
        fft(buf.data(), lines.length, -1);
        for (int j = 0; j < lines.length; ++j) {
            const cdouble v = buf[static_cast<size_t>(j)] * inv_n;
            dst[j * lines.stride] = v.real();
            imag_mass.add(std::abs(v.imag()));
        }
    }

    if (imag_mass.value() * grid.spec.cell_area() > kImagMassTol)
        throw GuardError("fourier pass discarded imaginary mass above tolerance");
    return out;
}

double spectral_tail_mass(const PhaseSpaceGrid& grid, Axis axis, double fraction) {
    const LineSet lines = line_set(grid.spec, axis);
    const int n = lines.length;
    const int cut = static_cast<int>(std::floor(fraction * (n / 2)));
    std::vector<cdouble> buf(static_cast<size_t>(n));
    KahanSum tail, total;
    for (int line = 0; line < lines.count; ++line) {
        const double* src = grid.values.data() + static_cast<size_t>(line) * lines.first_stride;
        for (int j = 0; j < n; ++j) buf[static_cast<size_t>(j)] = src[j * lines.stride];
        fft(buf.data(), n, +1);
        for (int k = 0; k < n; ++k) {
            int folded = k < n / 2 ? k : k - n;
            const double mag = std::abs(buf[static_cast<size_t>(k)]);
            total.add(mag);
            if (std::abs(folded) > cut) tail.add(mag);
        }
    }
    return total.value() > 0.0 ? tail.value() / total.value() : 0.0;
}

namespace {

// One axis of the contraction: returns the line transform evaluated at
// frequencies scaled by c, resynthesized on the original sample points.
// Keeping the zero-frequency bin as a plain sum makes the pass mass
// preserving to machine precision.
void contract_lines(PhaseSpaceGrid& grid, Axis axis, double c, KahanSum& imag_mass) {
    const LineSet lines = line_set(grid.spec, axis);
    const int n = lines.length;
    const int conv_len = 4 * n;
    const double x0 = axis == Axis::p ? grid.spec.p_min : grid.spec.q_min;
    const auto freqs = angular_freqs(n, lines.dx);
    const double chirp_rate = std::numbers::pi * c / n;

    std::vector<cdouble> chirp(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
        chirp[static_cast<size_t>(j)] = std::polar(1.0, chirp_rate * static_cast<double>(j) * j);

    // Post factor: W^{n~^2} * e^{i (c-1) k_n x0} folds the scaled analysis
    // phase and the synthesis phase into one table, indexed by DFT bin.
    std::vector<cdouble> post(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        int folded = k < n / 2 ? k : k - n;
        const double phase =
            chirp_rate * static_cast<double>(folded) * folded + (c - 1.0) * freqs[static_cast<size_t>(k)] * x0;
        post[static_cast<size_t>(k)] = std::polar(1.0, phase);
    }

    std::vector<cdouble> kernel_hat(static_cast<size_t>(conv_len), cdouble(0.0, 0.0));
    for (int m = -(3 * n / 2 - 1); m <= n / 2 - 1; ++m) {
        const int idx = (m + conv_len) % conv_len;
        kernel_hat[static_cast<size_t>(idx)] = std::polar(1.0, -chirp_rate * static_cast<double>(m) * m);
    }
    fft(kernel_hat.data(), conv_len, -1);

    std::vector<cdouble> work(static_cast<size_t>(conv_len));
    std::vector<cdouble> spectrum(static_cast<size_t>(n));
    const double inv_conv = 1.0 / conv_len;
    const double inv_n = 1.0 / n;

    for (int line = 0; line < lines.count; ++line) {
        double* dst = grid.values.data() + static_cast<size_t>(line) * lines.first_stride;
        std::fill(work.begin(), work.end(), cdouble(0.0, 0.0));
        for (int j = 0; j < n; ++j)
            work[static_cast<size_t>(j)] = dst[j * lines.stride] * chirp[static_cast<size_t>(j)];
        fft(work.data(), conv_len, -1);
        for (int k = 0; k < conv_len; ++k) work[static_cast<size_t>(k)] *= kernel_hat[static_cast<size_t>(k)];
        fft(work.data(), conv_len, +1);
        for (int k = 0; k < n; ++k) {
            int folded = k < n / 2 ? k : k - n;
            const int idx = (folded + conv_len) % conv_len;
            spectrum[static_cast<size_t>(k)] =
                work[static_cast<size_t>(idx)] * inv_conv * post[static_cast<size_t>(k)];
        }
        // Unpaired Nyquist bin: project onto its real synthesis mode so the
        // remaining discarded imaginary part is round-off only.
        spectrum[static_cast<size_t>(n / 2)] = spectrum[static_cast<size_t>(n / 2)].real();
        fft(spectrum.data(), n, -1);
        for (int j = 0; j < n; ++j) {
            const cdouble v = spectrum[static_cast<size_t>(j)] * inv_n;
            dst[j * lines.stride] = v.real();
            imag_mass.add(std::abs(v.imag()));
        }
    }
}

} // namespace

PhaseSpaceGrid contract_axes(const PhaseSpaceGrid& grid, double c) {
    if (!(c > 0.0 && c <= 1.0)) throw DomainError("contraction factor must lie in (0, 1]");
    if (c == 1.0) return grid;
    // A resolved Gaussian (sigma >= cell) keeps << 1% of its |F| mass beyond
    // c * Nyquist; a feature that would land below two cells carries > 10%.
    constexpr double kTailTol = 1e-2;
    for (Axis axis : {Axis::q, Axis::p}) {
        if (spectral_tail_mass(grid, axis, c) > kTailTol)
            throw GuardError("contraction would undersample features below two cells");
    }
    PhaseSpaceGrid out = grid;
    KahanSum imag_mass;
    contract_lines(out, Axis::q, c, imag_mass);
    contract_lines(out, Axis::p, c, imag_mass);
    if (imag_mass.value() * grid.spec.cell_area() > 2.0 * kImagMassTol)
        throw GuardError("contraction discarded imaginary mass above tolerance");
    return out;
}

} // namespace kho::detail
