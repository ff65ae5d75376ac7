#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "roughsing/errors.hpp"

namespace roughsing {

/// The rough symbol Omega on S^{n-1}, real-valued and homogeneous of
/// degree zero.
///
/// n = 1: S^0 = {+1, -1} with counting measure; two values.
/// n = 2: S equispaced angles theta_i = 2*pi*i/S with trapezoidal weights
///        2*pi/S (exact for trigonometric polynomials of degree < S/2).
struct SphereSymbol {
    int dim = 2;                 // ambient dimension n
    std::vector<double> values;  // n=1: {Omega(+1), Omega(-1)}; n=2: node values
    // One-sided DFT coefficients of the node values, filled by the factories
    // (n = 2); eval_angle interpolates through them.
    std::vector<std::complex<double>> interp;

    int nodes() const { return static_cast<int>(values.size()); }
    double quad_weight() const;
    /// Node angle theta_i (n = 2 only).
    double angle(int i) const;
    /// Evaluate at a point of S^{n-1}: the sign for n = 1, the trigonometric
    /// interpolant through the nodes for n = 2 (exact for band-limited
    /// content below degree S/2).
    double eval_sign(double s) const;
    double eval_angle(double theta) const;
};

SphereSymbol make_symbol_1d(double plus, double minus);
SphereSymbol make_symbol_2d(std::vector<double> node_values);
SphereSymbol symbol_from_function(int nodes, const std::function<double(double)>& fn);

/// Omega(theta) = amplitude * cos(m*theta). Satisfies the sphere cancellation
/// condition iff |m| >= 2.
SphereSymbol from_harmonic(int dim, int m, double amplitude, int nodes = 256);

/// (sum |Omega|^q dsigma)^{1/q}; q = inf is the max over nodes.
double lq_norm(const SphereSymbol& omega, double q);

/// Moments int Omega(x') (x'_k)^N dsigma(x') for N in {0, 1}. The N = 0
/// moment is the same for every axis k and is reported once.
struct MomentReport {
    double zeroth = 0.0;
    std::vector<double> first;  // one entry per axis

    double max_abs() const;
};

MomentReport moments(const SphereSymbol& omega);

/// True iff every moment magnitude is <= tol.
bool check_cancellation(const SphereSymbol& omega, double tol);

/// Removes the circular-harmonic components of degree 0 and 1 (constant,
/// cos, sin), the obstruction to the cancellation condition. n = 2 only:
/// in n = 1 the full condition forces Omega == 0.
SphereSymbol project_cancellation(const SphereSymbol& omega);

/// CSV rows: theta, value (n = 2).
void write_symbol_csv(const SphereSymbol& omega, const std::string& path);
SphereSymbol read_symbol_csv(const std::string& path);

} // namespace roughsing
