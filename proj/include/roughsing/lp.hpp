#pragma once

#include <string>
#include <vector>

#include "roughsing/grid.hpp"

namespace roughsing {

/// Radial mollifier pair: phi_hat(xi) = eta(|xi|) with eta == 1 on [0, 1/2],
/// 0 on [1, inf), C-infinity and nonincreasing in between (built from the
/// exp(-1/t) smoothstep), and psi_hat = (phi_hat(xi) - phi_hat(2 xi))^{1/3}.
/// The cube root keeps the defining identity
///   psi_hat(xi)^3 + phi_hat(2 xi) = phi_hat(xi)
/// exact; psi_hat is supported in {1/4 <= |xi| <= 1}.
class MollifierProfile {
public:
    MollifierProfile();

    double eta(double r) const;
    double phi_hat(double xi_abs) const;
    double psi_hat(double xi_abs) const;

    /// Evaluation at dyadic scale 2^e * |xi|, safe for any integer e.
    double phi_hat_scaled(double xi_abs, long e) const;
    double psi_hat_scaled(double xi_abs, long e) const;

    /// Dense-sampled sup of |d/dr psi_hat| and |d^2/dr^2 psi_hat|; inputs to
    /// the multiplier second-derivative bound.
    double psi_d1_sup() const { return d1_; }
    double psi_d2_sup() const { return d2_; }

private:
    double d1_ = 0.0;
    double d2_ = 0.0;
};

const MollifierProfile& default_profile();

/// Increasing jump sequence 0 = N(0) < N(1) < ...; groups annuli into bands.
class JumpSchedule {
public:
    /// N(j) = 2^j for j >= 1 (the default throughout).
    static JumpSchedule pow2();
    /// N(j) = j.
    static JumpSchedule linear();
    static JumpSchedule from_values(std::vector<long> values);

    long at(int j) const;
    const std::string& name() const { return name_; }

private:
    JumpSchedule(std::string name, std::vector<long> values);
    std::string name_;
    std::vector<long> values_;  // empty slots computed for the closed forms
};

JumpSchedule schedule_by_name(const std::string& name);

/// S_j f: frequency multiplier phi_hat(2^j xi). S_j -> identity as j -> -inf.
GridFunction partial_sum(const GridFunction& f, long j,
                         const MollifierProfile& profile = default_profile());

/// Multiplier psi_hat(2^j xi)^power. power = 3 telescopes:
/// delta_j(f, j, 3) == partial_sum(f, j) - partial_sum(f, j + 1).
GridFunction delta_j(const GridFunction& f, long j, int power,
                     const MollifierProfile& profile = default_profile());

enum class BandSide { low, high };

/// side = low:  S_{k-N(j)} - S_{k-N(j-1)}  (annuli i = N(j-1)+1 .. N(j) below k)
/// side = high: S_{k+N(j-1)} - S_{k+N(j)}  (the same annuli above k)
GridFunction band_sum(const GridFunction& f, long k, int j, BandSide side,
                      const JumpSchedule& schedule,
                      const MollifierProfile& profile = default_profile());

/// True when the multiplier phi_hat(2^j xi) is not constant across the whole
/// frequency lattice (i.e. the scale is visible on this grid).
bool scale_resolvable(const GridSpec& spec, long j,
                      const MollifierProfile& profile = default_profile());

struct SquareFunctionReport {
    double square_norm = 0.0;  // || (sum_j 2^{-2j} |[b, Delta_j] f|^2)^{1/2} ||_p
    double reference = 0.0;    // grad_bound * ||f||_p
    double ratio = 0.0;
};

/// b given as lattice samples with its Lipschitz bound supplied analytically.
SquareFunctionReport square_function_commutator_check(
    const GridFunction& b, double grad_bound, const GridFunction& f, double p, long jlo,
    long jhi, const MollifierProfile& profile = default_profile());

/// CSV rows: r, phi_hat, psi_hat (for cross-checking the fixed profile).
void write_profile_csv(const MollifierProfile& profile, const std::string& path,
                       int samples = 512);

} // namespace roughsing
