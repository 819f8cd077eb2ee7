#pragma once

// Internal spectral machinery shared by grid-core, propagators and
// decoherence. Not part of the public surface.

#include <complex>
#include <functional>
#include <vector>

#include "kho/grid.hpp"

namespace kho::detail {

using cdouble = std::complex<double>;

/// In-place unnormalized FFT. sign=+1 uses the analysis kernel e^{+2 pi i jk/N},
/// sign=-1 the synthesis kernel e^{-2 pi i jk/N}. n must be a power of two
/// (FFTW handles any n; the engine only ever passes powers of two).
void fft(cdouble* data, int n, int sign);

/// Signed angular frequencies 2*pi*k~/(n*dx) in DFT bin order
/// (k~ = k for k < n/2, k - n otherwise).
std::vector<double> angular_freqs(int n, double dx);

/// Fills `table` (already sized n) with the multiplier for one line at the
/// given transverse coordinate.
using TableFn = std::function<void(double transverse, std::vector<cdouble>& table)>;

/// Applies a per-line Fourier multiplier along `axis`. With check_unimodular,
/// every bin is required to satisfy ||m|-1| <= kUnimodularTol and bin 0 must
/// be exactly 1 within the same tolerance (DomainError otherwise). The
/// discarded imaginary mass is guarded by kImagMassTol (GuardError).
PhaseSpaceGrid apply_axis_table(const PhaseSpaceGrid& grid, Axis axis, const TableFn& fill,
                                bool check_unimodular);

/// Relative |F| spectral mass beyond `fraction` of the Nyquist frequency,
/// aggregated over all lines along `axis`.
double spectral_tail_mass(const PhaseSpaceGrid& grid, Axis axis, double fraction);

/// Rescales the distribution about the origin by factor c in (0, 1]:
/// W'(x, y) = c^-2 W(x/c, y/c), realized per axis as an exact evaluation of
/// the line spectrum at dilated frequencies (Bluestein chirp transform).
/// Preserves the Riemann norm to machine precision. Raises GuardError when
/// input features would fall below two cells after contraction.
PhaseSpaceGrid contract_axes(const PhaseSpaceGrid& grid, double c);

/// Compensated (Kahan) accumulator used for all deterministic reductions.
struct KahanSum {
    double s = 0.0;
    double c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    double value() const { return s; }
};

} // namespace kho::detail
