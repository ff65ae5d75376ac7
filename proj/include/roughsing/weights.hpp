#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "roughsing/grid.hpp"

namespace roughsing {

/// A positive weight: either explicit positive samples on a lattice or the
/// tagged closed form w(x) = |x|^alpha.
struct Weight {
    bool is_power = true;
    double alpha = 0.0;  // power form
    int dim = 1;
    GridSpec spec;                 // sampled form
    std::vector<double> samples;
};

Weight power_weight(double alpha, int dim);
Weight sampled_weight(const GridSpec& spec, std::vector<double> samples);

/// Lattice samples of the weight. Power weights evaluate at radius
/// max(|x|, h/2); the half-cell floor keeps the origin sample finite and
/// positive for either sign of alpha.
std::vector<double> weight_samples(const Weight& w, const GridSpec& spec);

/// Pointwise w^{1-p'}; Power(alpha) maps to Power(alpha*(1-p')).
Weight dual_weight(const Weight& w, double p);

/// Pointwise w^expo (the change-of-measure weight w^{1+eps} and friends).
Weight weight_pow(const Weight& w, double expo);

/// Axis-parallel cube, closed; membership of a lattice point is per-axis
/// |x_a - center_a| <= side/2.
struct Cube {
    std::array<double, 2> center{0.0, 0.0};
    double side = 0.0;
};

/// Finite stand-in for the supremum over all cubes: dyadic sides with
/// translates on a step of side/3, all inside [-L, L)^n. Results computed
/// over a family are lower bounds of the true suprema.
struct CubeFamily {
    std::vector<Cube> cubes;
    std::uint64_t hash = 0;  // reproducibility tag carried into reports
};

/// Sides 2^e for e in [side_exp_min, side_exp_max].
CubeFamily make_cube_family(const GridSpec& spec, int side_exp_min, int side_exp_max);
/// Sides from 8h up to L.
CubeFamily default_cube_family(const GridSpec& spec);

/// max over the family of (avg_Q w)(avg_Q w^{1-p'})^{p-1}, averages taken
/// over the lattice points inside Q.
double ap_characteristic(const Weight& w, double p, const CubeFamily& family,
                         const GridSpec& spec);

/// Fujii-Wilson constant: max over the family of
/// (1/w(Q)) sum_{x in Q} M(w chi_Q)(x), with M the centered maximal function
/// over lattice cubes up to side(Q), clipped to the domain.
double ainfty_fujii_wilson(const Weight& w, const CubeFamily& family, const GridSpec& spec);

struct ApReport {
    double p = 2.0;
    double ap = 1.0;          // [w]_{A_p}
    double ainf_w = 1.0;      // [w]_{A_inf}
    double ainf_sigma = 1.0;  // [w^{1-p'}]_{A_inf}
    double round = 1.0;       // max of the two A_inf constants
    double curly = 1.0;       // ap^{1/p} * max(ainf_w^{1/p'}, ainf_sigma^{1/p})
    std::uint64_t family_hash = 0;
};

ApReport weight_report(const Weight& w, double p, const CubeFamily& family,
                       const GridSpec& spec);

/// eps = c_n / (2 * round), clamped into (0, 1).
double epsilon_of(const ApReport& report, double c_n);

std::string report_json(const ApReport& report);

} // namespace roughsing
