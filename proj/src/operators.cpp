#include "roughsing/operators.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace roughsing {

namespace {

constexpr double kCancellationTol = 1e-8;

void require_real(const GridFunction& f, const char* who) {
    for (const cplx& v : f.values)
        if (v.imag() != 0.0) throw config_error(std::string(who) + ": field must be real-valued");
}

double omega_norm_for(const SphereSymbol& omega, BandSide side) {
    return side == BandSide::low ? lq_norm(omega, std::numeric_limits<double>::infinity())
                                 : lq_norm(omega, 1.0);
}

void require_cancellation_of(const SphereSymbol& omega, const char* who) {
    const double scale = std::max(1.0, lq_norm(omega, 1.0));
    if (moments(omega).max_abs() > kCancellationTol * scale)
        throw config_error(std::string(who) +
                           ": symbol fails the sphere cancellation condition");
}

} // namespace

LipschitzSymbol lipschitz_symbol(GridFunction field, double grad_bound) {
    if (!(grad_bound >= 0.0) || !std::isfinite(grad_bound))
        throw config_error("lipschitz_symbol: bad gradient bound");
    require_real(field, "lipschitz_symbol");
    const GridSpec& spec = field.spec;
    const int m = spec.points_per_axis;
    const double cap = 1.05 * grad_bound + 1e-12;
    // Forward differences along each axis, skipping the periodic seam.
    for (std::size_t idx = 0; idx < field.size(); ++idx) {
        const auto ai = axis_indices(spec, idx);
        for (int a = 0; a < spec.dim; ++a) {
            const int w = wrap_index(ai[static_cast<std::size_t>(a)], m);
            if (w + 1 >= m / 2) continue;  // neighbor would wrap
            auto bj = ai;
            bj[static_cast<std::size_t>(a)] += 1;
            const double diff = std::abs(field.values[flat_index(spec, bj)].real() -
                                         field.values[idx].real());
            if (diff > cap * spec.spacing)
                throw config_error("lipschitz_symbol: discrete gradient exceeds the stated bound");
        }
    }
    return LipschitzSymbol{std::move(field), grad_bound};
}

LipschitzSymbol linear_symbol(const GridSpec& spec, std::array<double, 2> direction) {
    GridFunction b = make_zero(spec);
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto p = point_of(spec, i);
        b.values[i] = cplx{direction[0] * p[0] + direction[1] * p[1], 0.0};
    }
    return LipschitzSymbol{std::move(b), std::hypot(direction[0], direction[1])};
}

std::pair<int, int> shell_range(const GridSpec& spec) {
    const int kmin = static_cast<int>(std::ceil(std::log2(spec.spacing) - 1e-12));
    const int kmax = static_cast<int>(std::ceil(std::log2(spec.halfwidth / 2.0) - 1e-12)) - 1;
    return {kmin, kmax};
}

namespace {

double symbol_at_point(const SphereSymbol& omega, const GridSpec& spec,
                       std::array<double, 2> p) {
    if (spec.dim == 1) return omega.eval_sign(p[0]);
    return omega.eval_angle(std::atan2(p[1], p[0]));
}

// Shared by single shells and eps-truncations: kernel on {rlo < r <= rhi},
// optionally with the inclusive inner boundary (r >= rlo), always r < L/2.
GridFunction realize_annulus(const GridSpec& spec, const SphereSymbol& omega, int degree,
                             double rlo, double rhi, bool inclusive_inner) {
    if (omega.dim != spec.dim) throw config_error("kernel realization: dimension mismatch");
    GridFunction ker = make_zero(spec);
    const double guard = spec.halfwidth / 2.0;
    const double hi = std::min(rhi, guard);
    const int m = spec.points_per_axis;
    const double h = spec.spacing;
    const int reach = std::min(m / 2, static_cast<int>(std::floor(hi / h)) + 1);
    auto consider = [&](int w0, int w1) {
        const double x0 = h * w0, x1 = h * w1;
        const double r = spec.dim == 1 ? std::abs(x0) : std::hypot(x0, x1);
        const bool inner_ok = inclusive_inner ? r >= rlo : r > rlo;
        if (!inner_ok || r > rhi || r >= guard) return;
        const double v = symbol_at_point(omega, spec, {x0, x1}) / std::pow(r, degree);
        ker.values[flat_index(spec, {w0, w1})] = cplx{v, 0.0};
    };
    if (spec.dim == 1) {
        for (int w0 = -reach; w0 <= reach; ++w0) consider(w0, 0);
    } else {
        for (int w0 = -reach; w0 <= reach; ++w0)
            for (int w1 = -reach; w1 <= reach; ++w1) consider(w0, w1);
    }
    return ker;
}

} // namespace

KernelBand make_band(const GridSpec& spec, const SphereSymbol& omega, int degree, int k) {
    if (degree != spec.dim && degree != spec.dim + 1)
        throw config_error("make_band: degree must be n or n+1");
    KernelBand band;
    band.k = k;
    band.degree = degree;
    band.realization =
        realize_annulus(spec, omega, degree, std::ldexp(1.0, k), std::ldexp(1.0, k + 1), false);
    return band;
}

std::vector<cplx> band_symbol(const GridSpec& spec, const KernelBand& band) {
    if (!(band.realization.spec == spec)) throw config_error("band_symbol: grid mismatch");
    GridFunction F = dft(band.realization);
    const double cs = continuum_scale(spec);
    for (auto& v : F.values) v *= cs;
    return std::move(F.values);
}

cplx khat(const SphereSymbol& omega, int degree, int k, std::array<double, 2> xi) {
    const int n = omega.dim;
    const double rlo = std::ldexp(1.0, k), rhi = std::ldexp(1.0, k + 1);
    const double xi_len = n == 1 ? std::abs(xi[0]) : std::hypot(xi[0], xi[1]);
    const int panels =
        std::max(1, std::min(20000, static_cast<int>(std::ceil(rlo * xi_len / 3.0)) + 1));
    const double rpow = static_cast<double>(n - 1 - degree);

    // xi . y' at the sphere nodes, reused across radial nodes.
    std::vector<double> dots;
    if (n == 2) {
        dots.resize(static_cast<std::size_t>(omega.nodes()));
        for (int s = 0; s < omega.nodes(); ++s) {
            const double t = omega.angle(s);
            dots[static_cast<std::size_t>(s)] = xi[0] * std::cos(t) + xi[1] * std::sin(t);
        }
    }
    const double qw = omega.quad_weight();

    auto sphere_part = [&](double r) -> cplx {
        if (n == 1) {
            const double ph = r * xi[0];
            return omega.values[0] * cplx{std::cos(ph), -std::sin(ph)} +
                   omega.values[1] * cplx{std::cos(ph), std::sin(ph)};
        }
        double re = 0.0, im = 0.0;
        for (int s = 0; s < omega.nodes(); ++s) {
            const double ph = r * dots[static_cast<std::size_t>(s)];
            const double v = omega.values[static_cast<std::size_t>(s)];
            re += v * std::cos(ph);
            im -= v * std::sin(ph);
        }
        return cplx{re * qw, im * qw};
    };

    using G = boost::math::quadrature::gauss<double, 16>;
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    cplx acc{0.0, 0.0};
    const double pw = (rhi - rlo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = rlo + (p + 0.5) * pw;
        const double half = 0.5 * pw;
        for (std::size_t q = 0; q < xs.size(); ++q) {
            const double rp = mid + half * xs[q];
            const double rm = mid - half * xs[q];
            acc += ws[q] * half *
                   (std::pow(rp, rpow) * sphere_part(rp) + std::pow(rm, rpow) * sphere_part(rm));
        }
    }
    return acc;
}

GridFunction apply_band(const KernelBand& band, const GridFunction& f) {
    if (!(band.realization.spec == f.spec)) throw config_error("apply_band: grid mismatch");
    return apply_multiplier(f, band_symbol(f.spec, band));
}

std::vector<cplx> truncated_symbol(const GridSpec& spec, const SphereSymbol& omega, double eps,
                                   int degree) {
    if (!(eps >= spec.spacing))
        throw config_error("truncated operator: eps below the grid spacing");
    GridFunction ker = realize_annulus(spec, omega, degree, eps, spec.halfwidth, true);
    GridFunction F = dft(ker);
    const double cs = continuum_scale(spec);
    for (auto& v : F.values) v *= cs;
    return std::move(F.values);
}

GridFunction apply_T_eps(const SphereSymbol& omega, const GridFunction& f, double eps,
                         int degree) {
    return apply_multiplier(f, truncated_symbol(f.spec, omega, eps, degree));
}

GridFunction commutator_apply(const LipschitzSymbol& b, std::span<const cplx> symbol,
                              const GridFunction& f) {
    if (!(b.field.spec == f.spec)) throw config_error("commutator: grid mismatch");
    return hadamard(b.field, apply_multiplier(f, symbol)) -
           apply_multiplier(hadamard(b.field, f), symbol);
}

GridFunction commutator_apply_adjoint(const LipschitzSymbol& b, std::span<const cplx> symbol,
                                      const GridFunction& g) {
    if (!(b.field.spec == g.spec)) throw config_error("commutator adjoint: grid mismatch");
    std::vector<cplx> conj_symbol(symbol.begin(), symbol.end());
    for (auto& v : conj_symbol) v = std::conj(v);
    return apply_multiplier(hadamard(b.field, g), conj_symbol) -
           hadamard(b.field, apply_multiplier(g, conj_symbol));
}

GridFunction commutator_band(const LipschitzSymbol& b, const KernelBand& band,
                             const GridFunction& f) {
    return commutator_apply(b, band_symbol(f.spec, band), f);
}

std::vector<cplx> commutator_sum_symbol(const GridSpec& spec, const SphereSymbol& omega,
                                        int kmin, int kmax) {
    if (kmin > kmax) throw config_error("commutator_sum_symbol: empty shell range");
    std::vector<cplx> acc(spec.size(), cplx{0.0, 0.0});
    for (int k = kmin; k <= kmax; ++k) {
        const KernelBand band = make_band(spec, omega, spec.dim + 1, k);
        const std::vector<cplx> sym = band_symbol(spec, band);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sym[i];
    }
    return acc;
}

GridFunction apply_C(const LipschitzSymbol& b, const SphereSymbol& omega, const GridFunction& f,
                     int kmin, int kmax, bool require_cancellation, CommutatorTail* tail) {
    if (require_cancellation) require_cancellation_of(omega, "apply_C");
    if (tail) {
        tail->band_l2.clear();
        for (int k = kmin; k <= kmax; ++k) {
            const KernelBand band = make_band(f.spec, omega, f.spec.dim + 1, k);
            tail->band_l2.emplace_back(k, lp_norm(commutator_band(b, band, f), 2.0));
        }
    }
    return commutator_apply(b, commutator_sum_symbol(f.spec, omega, kmin, kmax), f);
}

std::vector<cplx> tij_symbol(const GridSpec& spec, const SphereSymbol& omega, int j,
                             BandSide side, const JumpSchedule& schedule,
                             const MollifierProfile& profile) {
    if (j < 1) throw config_error("tij_symbol: j must be >= 1");
    const auto [kmin, kmax] = shell_range(spec);
    const long nj = schedule.at(j), njm1 = schedule.at(j - 1);

    std::vector<double> xiabs(spec.size());
    for (std::size_t i = 0; i < xiabs.size(); ++i) xiabs[i] = xi_abs(spec, i);

    std::vector<cplx> acc(spec.size(), cplx{0.0, 0.0});
    for (int k = kmin; k <= kmax; ++k) {
        const long ea = side == BandSide::low ? k - nj : k + njm1;
        const long eb = side == BandSide::low ? k - njm1 : k + nj;
        // Skip shells whose band factor vanishes on the whole lattice.
        double factor_max = 0.0;
        for (std::size_t i = 0; i < xiabs.size() && factor_max == 0.0; ++i)
            factor_max = std::abs(profile.phi_hat_scaled(xiabs[i], ea) -
                                  profile.phi_hat_scaled(xiabs[i], eb));
        if (factor_max == 0.0) continue;

        const KernelBand band = make_band(spec, omega, spec.dim + 1, k);
        const std::vector<cplx> sym = band_symbol(spec, band);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            const double factor = profile.phi_hat_scaled(xiabs[i], ea) -
                                  profile.phi_hat_scaled(xiabs[i], eb);
            acc[i] += sym[i] * factor;
        }
    }
    return acc;
}

GridFunction apply_comm_T1jN(const LipschitzSymbol& b, const SphereSymbol& omega,
                             const GridFunction& f, int j, const JumpSchedule& schedule) {
    return commutator_apply(b, tij_symbol(f.spec, omega, j, BandSide::low, schedule), f);
}

GridFunction apply_comm_T2jN(const LipschitzSymbol& b, const SphereSymbol& omega,
                             const GridFunction& f, int j, const JumpSchedule& schedule) {
    require_cancellation_of(omega, "apply_comm_T2jN");
    return commutator_apply(b, tij_symbol(f.spec, omega, j, BandSide::high, schedule), f);
}

namespace {

long psi_scale_exponent(int i, int k, BandSide side) {
    return side == BandSide::low ? static_cast<long>(k) - i : static_cast<long>(k) + i;
}

} // namespace

MultiplierTable multiplier_table(const SphereSymbol& omega, int i, int k, BandSide side,
                                 const GridSpec& spec, int degree,
                                 const MollifierProfile& profile) {
    if (omega.dim != spec.dim) throw config_error("multiplier_table: dimension mismatch");
    MultiplierTable table;
    table.i = i;
    table.k = k;
    table.side = side;
    table.spec = spec;
    table.values.assign(spec.size(), cplx{0.0, 0.0});
    const long e = psi_scale_exponent(i, k, side);
    for (std::size_t idx = 0; idx < spec.size(); ++idx) {
        const double psi = profile.psi_hat_scaled(xi_abs(spec, idx), e);
        if (psi == 0.0) continue;
        table.values[idx] = khat(omega, degree, k, xi_of(spec, idx)) * psi;
    }
    return table;
}

void write_multiplier_csv(const MultiplierTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw numeric_error("write_multiplier_csv: cannot open " + path);
    os << "index,xi0,xi1,re,im\n";
    char buf[160];
    for (std::size_t idx = 0; idx < table.values.size(); ++idx) {
        if (table.values[idx] == cplx{0.0, 0.0}) continue;
        const auto xi = xi_of(table.spec, idx);
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", idx, xi[0], xi[1],
                      table.values[idx].real(), table.values[idx].imag());
        os << buf;
    }
}

namespace {

std::vector<std::size_t> annulus_subsample(const GridSpec& spec, long e, int max_samples,
                                           const MollifierProfile& profile) {
    std::vector<std::size_t> annulus;
    for (std::size_t idx = 0; idx < spec.size(); ++idx)
        if (profile.psi_hat_scaled(xi_abs(spec, idx), e) > 0.0) annulus.push_back(idx);
    if (annulus.empty() || max_samples <= 0) return annulus;
    if (annulus.size() <= static_cast<std::size_t>(max_samples)) return annulus;
    std::vector<std::size_t> picked;
    const std::size_t stride = annulus.size() / static_cast<std::size_t>(max_samples);
    for (std::size_t s = 0; s < annulus.size(); s += stride) picked.push_back(annulus[s]);
    return picked;
}

} // namespace

double multiplier_annulus_max(const SphereSymbol& omega, int i, int k, BandSide side,
                              const GridSpec& spec, int degree, int max_samples,
                              const MollifierProfile& profile) {
    const long e = psi_scale_exponent(i, k, side);
    double best = 0.0;
    for (std::size_t idx : annulus_subsample(spec, e, max_samples, profile)) {
        const double psi = profile.psi_hat_scaled(xi_abs(spec, idx), e);
        best = std::max(best, std::abs(khat(omega, degree, k, xi_of(spec, idx))) * psi);
    }
    return best;
}

double multiplier_d2_max(const SphereSymbol& omega, int i, int k, BandSide side,
                         const GridSpec& spec, int degree, int max_samples,
                         const MollifierProfile& profile) {
    const long e = psi_scale_exponent(i, k, side);
    const double step = std::ldexp(1.0, -k) / 16.0;
    auto m_at = [&](std::array<double, 2> xi) {
        const double len = spec.dim == 1 ? std::abs(xi[0]) : std::hypot(xi[0], xi[1]);
        const double psi = profile.psi_hat_scaled(len, e);
        return psi == 0.0 ? cplx{0.0, 0.0} : khat(omega, degree, k, xi) * psi;
    };
    double best = 0.0;
    for (std::size_t idx : annulus_subsample(spec, e, max_samples, profile)) {
        const auto xi = xi_of(spec, idx);
        for (int a = 0; a < spec.dim; ++a) {
            auto xp = xi, xm = xi;
            xp[static_cast<std::size_t>(a)] += step;
            xm[static_cast<std::size_t>(a)] -= step;
            const cplx d2 = m_at(xp) - 2.0 * m_at(xi) + m_at(xm);
            best = std::max(best, std::abs(d2) / (step * step));
        }
    }
    return best / std::ldexp(1.0, k);
}

std::vector<KernelSample> make_kernel_samples(const GridSpec& spec, int count,
                                              std::uint64_t seed, double rmin, double rmax) {
    if (!(rmin > 2.0 * spec.spacing) || !(rmax <= spec.halfwidth / 4.0) || rmin >= rmax)
        throw config_error("make_kernel_samples: need 2h < rmin < rmax <= L/4");
    std::mt19937_64 rng(seed);
    const double h = spec.spacing;
    const int xcap = static_cast<int>(std::floor(spec.halfwidth / 4.0 / h));
    std::uniform_int_distribution<int> xpick(-xcap, xcap);
    const int zcap = static_cast<int>(std::floor(rmax / h));
    std::uniform_int_distribution<int> zpick(-zcap, zcap);
    std::uniform_int_distribution<int> hexp(0, 30);

    std::vector<KernelSample> out;
    while (static_cast<int>(out.size()) < count) {
        const int z0 = zpick(rng);
        const int z1 = spec.dim == 2 ? zpick(rng) : 0;
        const double r = h * (spec.dim == 1 ? std::abs(z0) : std::hypot(z0, z1));
        if (r < rmin || r > rmax) continue;
        // |h| drawn log-uniformly over the lattice magnitudes allowed by 2|h| <= r
        const int hcap = static_cast<int>(std::floor(r / (2.0 * h)));
        if (hcap < 1) continue;
        const int hmag = std::min(hcap, 1 << (hexp(rng) % (1 + static_cast<int>(std::log2(hcap)))));
        const int axis = spec.dim == 2 && (rng() & 1) ? 1 : 0;
        KernelSample s;
        const int x0 = xpick(rng), x1 = spec.dim == 2 ? xpick(rng) : 0;
        s.x = {h * x0, h * x1};
        s.y = {h * (x0 - z0), h * (x1 - z1)};
        s.h = {axis == 0 ? h * hmag : 0.0, axis == 1 ? h * hmag : 0.0};
        out.push_back(s);
    }
    return out;
}

KernelCheckReport kernel_estimate_check(const LipschitzSymbol& b, const SphereSymbol& omega,
                                        int j, const JumpSchedule& schedule, BandSide side,
                                        const std::vector<KernelSample>& samples,
                                        const MollifierProfile& profile) {
    const GridSpec& spec = b.field.spec;
    if (side == BandSide::high) require_cancellation_of(omega, "kernel_estimate_check");
    const long nj = schedule.at(j);
    const auto [kmin, kmax] = shell_range(spec);

    // G = sum_k K_k * phi_{k -+ N(j)} as one grid function. A shell whose
    // mollifier transition band straddles the lattice Nyquist box is omitted:
    // its grid realization rings globally (truncated spectrum of a sharp
    // ring) while its true contribution at the admissible sample distances is
    // negligible. Kept shells are either fully resolved or exact plateaus.
    const double xi_axis_max = std::numbers::pi / spec.spacing;
    const double xi_corner_max = spec.dim == 2 ? std::sqrt(2.0) * xi_axis_max : xi_axis_max;
    GridFunction g = make_zero(spec);
    for (int k = kmin; k <= kmax; ++k) {
        const long e = side == BandSide::low ? k - nj : k + nj;
        const bool resolved = profile.phi_hat_scaled(xi_axis_max, e) == 0.0;
        const bool plateau = profile.phi_hat_scaled(xi_corner_max, e) == 1.0;
        if (!resolved && !plateau) continue;
        const KernelBand band = make_band(spec, omega, spec.dim + 1, k);
        g = g + apply_multiplier(band.realization, [&](std::size_t i) {
                return cplx{profile.phi_hat_scaled(xi_abs(spec, i), e), 0.0};
            });
    }

    const double h = spec.spacing;
    auto lattice = [&](std::array<double, 2> p) {
        const long i0 = std::lround(p[0] / h);
        const long i1 = std::lround(p[1] / h);
        if (std::abs(p[0] - i0 * h) > 1e-9 * h || std::abs(p[1] - i1 * h) > 1e-9 * h)
            throw config_error("kernel_estimate_check: sample not lattice-aligned");
        return flat_index(spec, {static_cast<int>(i0), static_cast<int>(i1)});
    };
    auto bval = [&](std::array<double, 2> p) { return b.field.values[lattice(p)].real(); };
    auto gval = [&](std::array<double, 2> p) { return g.values[lattice(p)]; };
    auto minus = [](std::array<double, 2> u, std::array<double, 2> v) {
        return std::array<double, 2>{u[0] - v[0], u[1] - v[1]};
    };
    auto plus = [](std::array<double, 2> u, std::array<double, 2> v) {
        return std::array<double, 2>{u[0] + v[0], u[1] + v[1]};
    };
    auto len = [&](std::array<double, 2> u) {
        return spec.dim == 1 ? std::abs(u[0]) : std::hypot(u[0], u[1]);
    };
    auto kernel = [&](std::array<double, 2> x, std::array<double, 2> y) {
        return (bval(x) - bval(y)) * gval(minus(x, y));
    };

    const double norm_factor = omega_norm_for(omega, side) * b.grad_bound;
    if (!(norm_factor > 0.0)) {
        // Constant b or zero symbol: the kernel vanishes, ratios are zero.
        return KernelCheckReport{0.0, 0.0, static_cast<int>(samples.size())};
    }

    KernelCheckReport rep;
    rep.samples = static_cast<int>(samples.size());
    for (const KernelSample& s : samples) {
        const double dist = len(minus(s.x, s.y));
        const double hlen = len(s.h);
        if (!(2.0 * hlen <= dist) || hlen == 0.0)
            throw config_error("kernel_estimate_check: sample violates 2|h| <= |x-y|");
        const double dn = std::pow(dist, spec.dim);
        const cplx k00 = kernel(s.x, s.y);
        rep.size_ratio = std::max(rep.size_ratio, std::abs(k00) * dn / norm_factor);

        const double t = hlen / dist;
        const double mod = norm_factor * std::min(1.0, std::ldexp(t, static_cast<int>(
                                                          std::min<long>(nj, 4000))));
        const double dy = std::abs(kernel(s.x, plus(s.y, s.h)) - k00);
        const double dx = std::abs(kernel(plus(s.x, s.h), s.y) - k00);
        rep.smooth_ratio = std::max(rep.smooth_ratio, (dy + dx) * dn / mod);
    }
    return rep;
}

std::function<double(double)> dini_modulus(long N, double omega_norm, double grad_norm) {
    if (N < 0) throw config_error("dini_modulus: N must be >= 0");
    const double amp = omega_norm * grad_norm;
    return [N, amp](double t) {
        if (t <= 0.0) return 0.0;
        const double scaled = std::ldexp(t, static_cast<int>(std::min<long>(N, 4000)));
        return amp * std::min(1.0, scaled);
    };
}

double dini_norm(long N, double omega_norm, double grad_norm) {
    if (N < 0) throw config_error("dini_norm: N must be >= 0");
    return omega_norm * grad_norm * (1.0 + static_cast<double>(N) * std::numbers::ln2);
}

} // namespace roughsing
