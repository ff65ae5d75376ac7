#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "roughsing/errors.hpp"

namespace roughsing {

using cplx = std::complex<double>;

/// Uniform periodic lattice modeling R^n as the torus [-L, L)^n, n in {1,2}.
///
/// Per-axis index i in [0, M) sits at coordinate h*i for i < M/2 and
/// h*(i - M) otherwise, i.e. the origin is index 0 and storage is in FFT
/// order. Flat indices are row-major: idx = i0*M + i1 for n = 2.
struct GridSpec {
    int dim = 1;               // n
    int points_per_axis = 0;   // M, power of two >= 16
    double halfwidth = 0.0;    // L
    double spacing = 0.0;      // h = 2L/M exactly

    std::size_t size() const {
        std::size_t m = static_cast<std::size_t>(points_per_axis);
        return dim == 1 ? m : m * m;
    }
    double cell_volume() const { return dim == 1 ? spacing : spacing * spacing; }
    bool operator==(const GridSpec&) const = default;
};

GridSpec make_grid(int dim, int points_per_axis, double halfwidth);

/// Signed offset of a per-axis index: result in [-M/2, M/2).
inline int wrap_index(int i, int m) { return i < m / 2 ? i : i - m; }

/// Integer frequency multi-index, per axis in [-M/2, M/2).
/// index <-> kappa round trips are exact integer arithmetic.
struct FrequencyIndex {
    std::array<int, 2> kappa{0, 0};
    bool operator==(const FrequencyIndex&) const = default;
};

std::array<int, 2> axis_indices(const GridSpec& spec, std::size_t idx);
std::size_t flat_index(const GridSpec& spec, std::array<int, 2> axis_idx);

std::array<double, 2> point_of(const GridSpec& spec, std::size_t idx);
double point_abs(const GridSpec& spec, std::size_t idx);

FrequencyIndex frequency_index(const GridSpec& spec, std::size_t idx);
std::size_t index_of(const GridSpec& spec, const FrequencyIndex& fi);
/// Physical frequency xi = pi*kappa/L per axis.
std::array<double, 2> physical_frequency(const GridSpec& spec, const FrequencyIndex& fi);
std::array<double, 2> xi_of(const GridSpec& spec, std::size_t idx);
double xi_abs(const GridSpec& spec, std::size_t idx);

/// Complex samples on the lattice, one value per lattice point.
struct GridFunction {
    GridSpec spec;
    std::vector<cplx> values;

    std::size_t size() const { return values.size(); }
};

GridFunction make_zero(const GridSpec& spec);

/// Pointwise sampling. A non-finite value from fn aborts with the offending
/// lattice point in the message.
GridFunction sample(const GridSpec& spec, const std::function<cplx(double)>& fn);
GridFunction sample(const GridSpec& spec, const std::function<cplx(double, double)>& fn);

/// Forward/inverse transforms, normalized so that
///   sum |f|^2 h^n == sum |dft(f)|^2   (Parseval)
/// and dft of a constant concentrates at kappa = 0.
GridFunction dft(const GridFunction& f);
GridFunction idft(const GridFunction& F);

/// dft(f) * continuum_scale approximates the integral transform
/// \int f(x) e^{-i x.xi} dx at the lattice frequencies.
double continuum_scale(const GridSpec& spec);

/// out = idft(m .* dft(f)); exact periodic convolution with the kernel whose
/// integral-convention transform is m.
GridFunction apply_multiplier(const GridFunction& f, std::span<const cplx> m);
GridFunction apply_multiplier(const GridFunction& f, const std::function<cplx(std::size_t)>& m);

/// (sum |f|^p w h^n)^{1/p}; p = inf returns max |f| and ignores w
/// (ess-sup semantics). weight, when present, must be positive and
/// match f's size.
double lp_norm(const GridFunction& f, double p, std::span<const double> weight = {});

/// sum f conj(g) w h^n.
cplx weighted_inner_product(const GridFunction& f, const GridFunction& g,
                            std::span<const double> weight = {});

GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(cplx c, const GridFunction& a);
/// Pointwise product.
GridFunction hadamard(const GridFunction& a, const GridFunction& b);

/// Little-endian binary layout: u64 n, u64 M, f64 L (24-byte header), then
/// M^n interleaved (re, im) doubles in row-major order.
void write_binary(const GridFunction& f, const std::string& path);
GridFunction read_binary(const std::string& path);
/// CSV rows: index, re, im.
void write_csv(const GridFunction& f, const std::string& path);

} // namespace roughsing
