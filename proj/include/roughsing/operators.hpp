#pragma once

#include <array>
#include <optional>
#include <vector>

#include "roughsing/grid.hpp"
#include "roughsing/lp.hpp"
#include "roughsing/sphere.hpp"

namespace roughsing {

/// Real-valued Lipschitz symbol b as lattice samples plus the analytic
/// gradient bound. Construction validates the discrete gradient against the
/// bound on non-wrapping differences (b need not be periodic; the wrap seam
/// is excluded).
struct LipschitzSymbol {
    GridFunction field;
    double grad_bound = 0.0;
};

LipschitzSymbol lipschitz_symbol(GridFunction field, double grad_bound);
/// b(x) = direction . x, grad_bound = |direction|.
LipschitzSymbol linear_symbol(const GridSpec& spec, std::array<double, 2> direction);

/// Kernel band K_k = Omega(x') / |x|^degree restricted to the shell
/// 2^k < |x| <= 2^{k+1}, realized on the lattice and zeroed on |x| >= L/2
/// (wraparound guard). degree = n+1 is the commutator kernel, degree = n the
/// plain homogeneous one.
struct KernelBand {
    int k = 0;
    int degree = 0;
    GridFunction realization;
};

KernelBand make_band(const GridSpec& spec, const SphereSymbol& omega, int degree, int k);

/// Innermost/outermost shell scales honored on this grid:
/// 2^{k_min} >= h and 2^{k_max} < L/2.
std::pair<int, int> shell_range(const GridSpec& spec);

/// Frequency symbol of the band: continuum-convention transform of the
/// realization on the frequency lattice.
std::vector<cplx> band_symbol(const GridSpec& spec, const KernelBand& band);

/// Quadrature transform of the ideal (un-gridded) band:
///   K_hat_k(xi) = int_{2^k}^{2^{k+1}} int_{S^{n-1}} Omega(y')
///                 e^{-i r xi.y'} dsigma(y') r^{n-1-degree} dr,
/// composite Gauss-Legendre in r, the symbol's own nodes on the sphere.
cplx khat(const SphereSymbol& omega, int degree, int k, std::array<double, 2> xi);

/// K_k * f by frequency-side periodic convolution.
GridFunction apply_band(const KernelBand& band, const GridFunction& f);

/// Truncated operator: kernel Omega(x')/|x|^degree on {eps <= |x| < L/2}
/// (cells kept by center membership; the closed form keeps the innermost
/// lattice ring when eps == h). Equals the sum of apply_band over the shells
/// with the eps-boundary band clipped.
GridFunction apply_T_eps(const SphereSymbol& omega, const GridFunction& f, double eps,
                         int degree);
std::vector<cplx> truncated_symbol(const GridSpec& spec, const SphereSymbol& omega, double eps,
                                   int degree);

/// [b, T]f = b . Tf - T(bf) for the convolution with the given frequency
/// symbol; the unweighted-L2 adjoint is conv*(b g) - b conv*(g).
GridFunction commutator_apply(const LipschitzSymbol& b, std::span<const cplx> symbol,
                              const GridFunction& f);
GridFunction commutator_apply_adjoint(const LipschitzSymbol& b, std::span<const cplx> symbol,
                                      const GridFunction& g);

/// [b, T_k]f in two-term form.
GridFunction commutator_band(const LipschitzSymbol& b, const KernelBand& band,
                             const GridFunction& f);

struct CommutatorTail {
    std::vector<std::pair<int, double>> band_l2;  // (k, ||[b,T_k]f||_2), ascending k
};

/// Full commutator over shells k in [kmin, kmax]:
/// sum_k [b, T_k]f, assembled as one fused frequency symbol. When
/// require_cancellation is set, Omega must pass check_cancellation.
/// tail, when non-null, receives per-band norms (small-k convergence report).
GridFunction apply_C(const LipschitzSymbol& b, const SphereSymbol& omega, const GridFunction& f,
                     int kmin, int kmax, bool require_cancellation,
                     CommutatorTail* tail = nullptr);

/// Frequency symbol of sum_k T_k over [kmin, kmax].
std::vector<cplx> commutator_sum_symbol(const GridSpec& spec, const SphereSymbol& omega,
                                        int kmin, int kmax);

/// Frequency symbol of T_{1,j}^N (side = low) or T_{2,j}^N (side = high):
///   sum_k K_hat_k(xi) [phi_hat(2^{k -+ N(j)} xi) - phi_hat(2^{k -+ N(j-1)} xi)]
/// over the grid shells.
std::vector<cplx> tij_symbol(const GridSpec& spec, const SphereSymbol& omega, int j,
                             BandSide side, const JumpSchedule& schedule,
                             const MollifierProfile& profile = default_profile());

/// [b, T_{1,j}^N]f / [b, T_{2,j}^N]f. The high side requires cancellation.
GridFunction apply_comm_T1jN(const LipschitzSymbol& b, const SphereSymbol& omega,
                             const GridFunction& f, int j, const JumpSchedule& schedule);
GridFunction apply_comm_T2jN(const LipschitzSymbol& b, const SphereSymbol& omega,
                             const GridFunction& f, int j, const JumpSchedule& schedule);

/// Tabulated m_{i,k} = K_hat_k(xi) psi_hat(2^{k-i} xi) (side = low) or
/// m~_{i,k} = K_hat_k(xi) psi_hat(2^{k+i} xi) (side = high) on the frequency
/// lattice; zero outside the psi annulus.
struct MultiplierTable {
    int i = 0;
    int k = 0;
    BandSide side = BandSide::low;
    GridSpec spec;
    std::vector<cplx> values;
};

MultiplierTable multiplier_table(const SphereSymbol& omega, int i, int k, BandSide side,
                                 const GridSpec& spec, int degree,
                                 const MollifierProfile& profile = default_profile());
void write_multiplier_csv(const MultiplierTable& table, const std::string& path);

/// max |m_{i,k}| over a deterministic subsample of the annulus lattice points
/// (a lower bound of the annulus max; cheap at large i).
double multiplier_annulus_max(const SphereSymbol& omega, int i, int k, BandSide side,
                              const GridSpec& spec, int degree, int max_samples = 200,
                              const MollifierProfile& profile = default_profile());

/// max over samples of |second centered difference of m_{i,k}| / 2^k,
/// steps at scale 2^{-k}/16 along each axis.
double multiplier_d2_max(const SphereSymbol& omega, int i, int k, BandSide side,
                         const GridSpec& spec, int degree, int max_samples = 50,
                         const MollifierProfile& profile = default_profile());

/// Sample triple for the kernel size/smoothness check; lattice-aligned,
/// 2|h| <= |x - y| required.
struct KernelSample {
    std::array<double, 2> x{0.0, 0.0};
    std::array<double, 2> y{0.0, 0.0};
    std::array<double, 2> h{0.0, 0.0};
};

std::vector<KernelSample> make_kernel_samples(const GridSpec& spec, int count,
                                              std::uint64_t seed, double rmin, double rmax);

struct KernelCheckReport {
    double size_ratio = 0.0;    // max |K(x,y)| |x-y|^n / (||Omega|| ||grad b||)
    double smooth_ratio = 0.0;  // max (|dK_y| + |dK_x|) |x-y|^n / omega_{i,j}(t)
    int samples = 0;
};

/// Evaluates the assembled kernel (b(x)-b(y)) sum_k (K_k * phi_{k -+ N(j)})(x-y)
/// at the samples. Low side normalizes by ||Omega||_inf, high side by
/// ||Omega||_1 (the high side requires cancellation).
KernelCheckReport kernel_estimate_check(const LipschitzSymbol& b, const SphereSymbol& omega,
                                        int j, const JumpSchedule& schedule, BandSide side,
                                        const std::vector<KernelSample>& samples,
                                        const MollifierProfile& profile = default_profile());

/// omega(t) = omega_norm * grad_norm * min(1, 2^N t).
std::function<double(double)> dini_modulus(long N, double omega_norm, double grad_norm);
/// int_0^1 omega(t) dt/t = omega_norm * grad_norm * (1 + N ln 2), closed form.
double dini_norm(long N, double omega_norm = 1.0, double grad_norm = 1.0);

} // namespace roughsing
