#include "roughsing/lp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

namespace roughsing {

namespace {

double smooth_step(double t) {
    // exp(-1/t) transition: 0 at t <= 0, 1 at t >= 1, C-infinity and flat at
    // both ends, which keeps psi_hat smooth across its support boundary.
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double scaled_abs(double xi_abs, long e) {
    if (xi_abs == 0.0) return 0.0;
    const int cap = 4000;  // past this ldexp has long since saturated
    const int ee = static_cast<int>(std::max<long>(-cap, std::min<long>(cap, e)));
    return std::ldexp(xi_abs, ee);
}

} // namespace

double MollifierProfile::eta(double r) const {
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    return smooth_step(2.0 * (1.0 - r));
}

double MollifierProfile::phi_hat(double xi_abs) const { return eta(std::abs(xi_abs)); }

double MollifierProfile::psi_hat(double xi_abs) const {
    const double r = std::abs(xi_abs);
    const double d = eta(r) - eta(2.0 * r);
    return d <= 0.0 ? 0.0 : std::cbrt(d);
}

double MollifierProfile::phi_hat_scaled(double xi_abs, long e) const {
    return phi_hat(scaled_abs(xi_abs, e));
}

double MollifierProfile::psi_hat_scaled(double xi_abs, long e) const {
    return psi_hat(scaled_abs(xi_abs, e));
}

MollifierProfile::MollifierProfile() {
    // Dense central differences over the support. psi_hat is C-infinity and
    // flat at the support edges, but there the defining difference underneath
    // the cube root sits at roundoff level and the root amplifies that noise
    // without bound; the scan stays where the value is solidly above it. The
    // true derivatives in the skipped flat tails vanish.
    const int n = 200000;
    const double lo = 0.2, hi = 1.05, dr = (hi - lo) / n;
    double d1 = 0.0, d2 = 0.0;
    for (int i = 1; i < n; ++i) {
        const double r = lo + i * dr;
        const double pm = psi_hat(r - dr), p0 = psi_hat(r), pp = psi_hat(r + dr);
        if (std::min({pm, p0, pp}) < 1e-3) continue;
        d1 = std::max(d1, std::abs((pp - pm) / (2.0 * dr)));
        d2 = std::max(d2, std::abs((pp - 2.0 * p0 + pm) / (dr * dr)));
    }
    d1_ = d1;
    d2_ = d2;
}

const MollifierProfile& default_profile() {
    static const MollifierProfile profile;
    return profile;
}

JumpSchedule::JumpSchedule(std::string name, std::vector<long> values)
    : name_(std::move(name)), values_(std::move(values)) {}

JumpSchedule JumpSchedule::pow2() { return JumpSchedule("pow2", {}); }

JumpSchedule JumpSchedule::linear() { return JumpSchedule("linear", {}); }

JumpSchedule JumpSchedule::from_values(std::vector<long> values) {
    if (values.empty() || values.front() != 0)
        throw config_error("JumpSchedule: values must start with N(0) = 0");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] <= values[i - 1])
            throw config_error("JumpSchedule: values must be strictly increasing");
    return JumpSchedule("custom", std::move(values));
}

long JumpSchedule::at(int j) const {
    if (j < 0) throw config_error("JumpSchedule: negative index");
    if (!values_.empty()) {
        if (static_cast<std::size_t>(j) >= values_.size())
            throw config_error("JumpSchedule: index beyond custom table");
        return values_[static_cast<std::size_t>(j)];
    }
    if (j == 0) return 0;
    if (name_ == "linear") return j;
    if (j >= 62) throw config_error("JumpSchedule: pow2 overflow");
    return 1L << j;
}

JumpSchedule schedule_by_name(const std::string& name) {
    if (name == "pow2") return JumpSchedule::pow2();
    if (name == "linear") return JumpSchedule::linear();
    throw config_error("unknown schedule '" + name + "'");
}

GridFunction partial_sum(const GridFunction& f, long j, const MollifierProfile& profile) {
    return apply_multiplier(f, [&](std::size_t i) {
        return cplx{profile.phi_hat_scaled(xi_abs(f.spec, i), j), 0.0};
    });
}

GridFunction delta_j(const GridFunction& f, long j, int power, const MollifierProfile& profile) {
    if (power < 1 || power > 3) throw config_error("delta_j: power must be 1, 2 or 3");
    return apply_multiplier(f, [&](std::size_t i) {
        const double p = profile.psi_hat_scaled(xi_abs(f.spec, i), j);
        double v = p;
        for (int q = 1; q < power; ++q) v *= p;
        return cplx{v, 0.0};
    });
}

GridFunction band_sum(const GridFunction& f, long k, int j, BandSide side,
                      const JumpSchedule& schedule, const MollifierProfile& profile) {
    if (j < 1) throw config_error("band_sum: j must be >= 1");
    const long nj = schedule.at(j);
    const long njm1 = schedule.at(j - 1);
    const long ea = side == BandSide::low ? k - nj : k + njm1;
    const long eb = side == BandSide::low ? k - njm1 : k + nj;
    return apply_multiplier(f, [&](std::size_t i) {
        const double x = xi_abs(f.spec, i);
        return cplx{profile.phi_hat_scaled(x, ea) - profile.phi_hat_scaled(x, eb), 0.0};
    });
}

bool scale_resolvable(const GridSpec& spec, long j, const MollifierProfile& profile) {
    const double xi_min = std::numbers::pi / spec.halfwidth;
    const double xi_max_axis = xi_min * (spec.points_per_axis / 2);
    const double xi_max = spec.dim == 1 ? xi_max_axis : std::sqrt(2.0) * xi_max_axis;
    const bool all_one = profile.phi_hat_scaled(xi_max, j) == 1.0;
    const bool all_zero = profile.phi_hat_scaled(xi_min, j) == 0.0;
    return !all_one && !all_zero;
}

SquareFunctionReport square_function_commutator_check(const GridFunction& b, double grad_bound,
                                                      const GridFunction& f, double p, long jlo,
                                                      long jhi,
                                                      const MollifierProfile& profile) {
    if (!(b.spec == f.spec)) throw config_error("square_function_commutator_check: grid mismatch");
    if (jlo > jhi) throw config_error("square_function_commutator_check: empty j range");
    GridFunction bf = hadamard(b, f);
    std::vector<double> acc(f.size(), 0.0);
    for (long j = jlo; j <= jhi; ++j) {
        GridFunction comm = hadamard(b, delta_j(f, j, 1, profile)) - delta_j(bf, j, 1, profile);
        const double scale = std::ldexp(1.0, static_cast<int>(std::max<long>(
                                                 -1000, std::min<long>(1000, -2 * j))));
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * std::norm(comm.values[i]);
    }
    GridFunction sq = make_zero(f.spec);
    for (std::size_t i = 0; i < acc.size(); ++i) sq.values[i] = std::sqrt(acc[i]);

    SquareFunctionReport rep;
    rep.square_norm = lp_norm(sq, p);
    rep.reference = grad_bound * lp_norm(f, p);
    rep.ratio = rep.reference > 0.0 ? rep.square_norm / rep.reference
                                    : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

void write_profile_csv(const MollifierProfile& profile, const std::string& path, int samples) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw numeric_error("write_profile_csv: cannot open " + path);
    os << "r,phi_hat,psi_hat\n";
    char buf[96];
    for (int i = 0; i <= samples; ++i) {
        const double r = 2.5 * i / samples;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r, profile.phi_hat(r),
                      profile.psi_hat(r));
        os << buf;
    }
}

} // namespace roughsing
