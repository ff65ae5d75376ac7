#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roughsing/operators.hpp"
#include "roughsing/weights.hpp"

namespace roughsing {

/// Matrix-free operator handle: apply plus the unweighted-L2 adjoint.
struct LinearOp {
    GridSpec spec;
    std::function<GridFunction(const GridFunction&)> apply;
    std::function<GridFunction(const GridFunction&)> apply_adjoint;
};

LinearOp identity_op(const GridSpec& spec);
LinearOp multiplier_op(const GridSpec& spec, std::vector<cplx> symbol);
/// [b, conv(symbol)] with its adjoint.
LinearOp commutator_op(const GridSpec& spec, std::vector<cplx> symbol, LipschitzSymbol b);

/// f -> W T (W f) with W the smooth plateau window on |x| <= L/4. The
/// experiments measure this composition: it keeps every iterate inside the
/// wraparound guard, where the torus seam (a linear b is not Lipschitz
/// across it) cannot contribute to the estimate.
LinearOp guarded_op(LinearOp inner);

/// Band-limited complex Gaussian field; windowed probes are supported in
/// |x| <= L/4 (wraparound guard). Deterministic in (spec, seed).
GridFunction random_probe(const GridSpec& spec, std::uint64_t seed, bool windowed = true,
                          double xi_lo = -1.0, double xi_hi = -1.0);

/// Lower-bound estimate of ||T||_{L^p(w) -> L^p(w)}.
struct NormEstimate {
    double value = 0.0;  // max ratio ||Tf||/||f|| actually observed
    double p = 2.0;
    std::string weight_desc = "w==1";
    int trials = 0;
    std::string method;  // "power-iteration" (p=2) or "random-probe"
    double residual = 0.0;
    bool converged = false;
};

struct OpnormOptions {
    int max_iters = 400;
    double tol = 1e-7;
};

/// p = 2: power iteration on the weighted adjoint composition, converged when
/// the Rayleigh quotient moves less than tol relatively. p != 2: max over
/// random probes of the norm ratio. Always a lower bound.
NormEstimate opnorm(const LinearOp& T, double p, const Weight* w, int trials,
                    std::uint64_t seed, const OpnormOptions& opts = {});

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
    int count = 0;
};

/// Least squares y ~ intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct FittedRate {
    std::string experiment;
    std::string abscissa;
    double slope = 0.0;
    double residual = 0.0;
    int count = 0;
};

struct DecayRow {
    int j = 0;
    long n_prev = 0;  // N(j-1)
    double value = 0.0;
    double residual = 0.0;
    bool converged = false;
};

struct DecayResult {
    std::vector<DecayRow> rows;
    FittedRate fit;   // log2(norm) against N(j-1), zero norms excluded
    double rate = 0.0;  // -slope; positive means decay
};

/// Norms of [b, T_{i,j}^N] per j with a fitted decay rate against N(j-1).
DecayResult decay_experiment(const LipschitzSymbol& b, const SphereSymbol& omega, BandSide side,
                             int jmax, double p, const Weight* w, int trials,
                             std::uint64_t seed, const JumpSchedule& schedule,
                             const OpnormOptions& opts = {});

struct GrowthRow {
    int j = 0;
    long nj = 0;
    double value = 0.0;
    double ratio = 0.0;  // value / ((1 + N(j)) {w}_Ap ||Omega|| ||grad b||)
};

struct GrowthResult {
    std::vector<GrowthRow> rows;
    double ratio_max = 0.0;
    double ratio_min = 0.0;
};

GrowthResult growth_experiment(const LipschitzSymbol& b, const SphereSymbol& omega,
                               BandSide side, int jmax, double p, const Weight& w,
                               const ApReport& report, int trials, std::uint64_t seed,
                               const JumpSchedule& schedule, const OpnormOptions& opts = {});

/// ||Omega||_{L^q} {w}_{A_p} (w)_{A_p} ||grad b||, constant-free.
double predicted_bound_thm11(const ApReport& report, double omega_lq, double grad_norm);

/// (l2norm + C_K + dini) * curly.
double hrt_bound(double l2norm, double c_k, double dini, double curly);

struct ScalingRow {
    double alpha = 0.0;
    ApReport report;
    double value = 0.0;      // || [b, sum_k T_k] ||_{L^2(w)} estimate
    double predicted = 0.0;  // predicted_bound_thm11
};

struct ScalingResult {
    std::vector<ScalingRow> rows;
    FittedRate fit;        // log(norm) against log(ap)
    double ratio_spread = 0.0;  // max/min of value/predicted
};

/// Power-weight sweep of the full commutator norm in L^2(|x|^alpha).
ScalingResult weight_scaling_experiment(const LipschitzSymbol& b, const SphereSymbol& omega,
                                        std::span<const double> alphas, double p,
                                        const CubeFamily& family, double q, int trials,
                                        std::uint64_t seed, const OpnormOptions& opts = {});

/// M0^lambda M1^{1-lambda}.
double sw_combine(double m0, double m1, double lambda);

enum class Sw1Variant { statement, proof };

/// statement: k0^{1/(1+eps)} k1^{eps/(1+eps)};
/// proof:     k0^{eps/(1+eps)} k1^{1/(1+eps)}.
double sw1_combine(double k0, double k1, double eps, Sw1Variant variant);

/// sum_{j>=1} (1 + N(j)) 2^{-gamma N(j-1)/R}.
double geometric_sum(double gamma, double r, const JumpSchedule& schedule);

struct InterpReport {
    double eps = 0.0;
    double k0 = 0.0;        // unweighted norm of [b, T_{1,j}^N]
    double k1 = 0.0;        // norm in L^p(w^{1+eps})
    double measured = 0.0;  // norm in L^p(w)
    double combined = 0.0;  // sw1 proof-variant combination
    bool upper_bound_holds = false;
    std::vector<std::array<double, 2>> geo;  // (R, geometric_sum)
};

InterpReport interpolation_consistency_experiment(const LipschitzSymbol& b,
                                                  const SphereSymbol& omega, int j, double p,
                                                  const Weight& w, double c_n,
                                                  const CubeFamily& family, int trials,
                                                  std::uint64_t seed,
                                                  const JumpSchedule& schedule,
                                                  double gamma = 0.5,
                                                  std::span<const double> r_values = {},
                                                  const OpnormOptions& opts = {});

} // namespace roughsing
