#include "roughsing/normlab.hpp"

#include "roughsing/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>

namespace roughsing {

LinearOp identity_op(const GridSpec& spec) {
    return LinearOp{spec, [](const GridFunction& f) { return f; },
                    [](const GridFunction& f) { return f; }};
}

LinearOp multiplier_op(const GridSpec& spec, std::vector<cplx> symbol) {
    if (symbol.size() != spec.size()) throw config_error("multiplier_op: symbol size mismatch");
    auto sym = std::make_shared<std::vector<cplx>>(std::move(symbol));
    auto conj_sym = std::make_shared<std::vector<cplx>>(*sym);
    for (auto& v : *conj_sym) v = std::conj(v);
    return LinearOp{
        spec,
        [sym](const GridFunction& f) { return apply_multiplier(f, *sym); },
        [conj_sym](const GridFunction& g) { return apply_multiplier(g, *conj_sym); }};
}

LinearOp commutator_op(const GridSpec& spec, std::vector<cplx> symbol, LipschitzSymbol b) {
    if (symbol.size() != spec.size()) throw config_error("commutator_op: symbol size mismatch");
    if (!(b.field.spec == spec)) throw config_error("commutator_op: grid mismatch");
    auto sym = std::make_shared<std::vector<cplx>>(std::move(symbol));
    auto bb = std::make_shared<LipschitzSymbol>(std::move(b));
    return LinearOp{
        spec,
        [sym, bb](const GridFunction& f) { return commutator_apply(*bb, *sym, f); },
        [sym, bb](const GridFunction& g) { return commutator_apply_adjoint(*bb, *sym, g); }};
}

LinearOp guarded_op(LinearOp inner) {
    const GridSpec spec = inner.spec;
    GridFunction wf = make_zero(spec);
    const MollifierProfile& profile = default_profile();
    const double quarter = spec.halfwidth / 4.0;
    for (std::size_t i = 0; i < wf.size(); ++i)
        wf.values[i] = cplx{profile.eta(point_abs(spec, i) / quarter), 0.0};
    auto window = std::make_shared<GridFunction>(std::move(wf));
    auto base = std::make_shared<LinearOp>(std::move(inner));
    return LinearOp{
        spec,
        [base, window](const GridFunction& f) {
            return hadamard(*window, base->apply(hadamard(*window, f)));
        },
        // W real diagonal: (W T W)* = W T* W
        [base, window](const GridFunction& g) {
            return hadamard(*window, base->apply_adjoint(hadamard(*window, g)));
        }};
}

GridFunction random_probe(const GridSpec& spec, std::uint64_t seed, bool windowed, double xi_lo,
                          double xi_hi) {
    const double xi_min = std::numbers::pi / spec.halfwidth;
    const double xi_axis_max = xi_min * (spec.points_per_axis / 2);
    if (xi_lo < 0.0) xi_lo = xi_min;
    if (xi_hi < 0.0) xi_hi = 0.5 * xi_axis_max;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    GridFunction F = make_zero(spec);
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double r = xi_abs(spec, i);
        if (r < xi_lo || r > xi_hi) continue;
        F.values[i] = cplx{gauss(rng), gauss(rng)};
    }
    GridFunction f = idft(F);
    if (windowed) {
        const MollifierProfile& profile = default_profile();
        const double quarter = spec.halfwidth / 4.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            f.values[i] *= profile.eta(point_abs(spec, i) / quarter);
    }
    const double n2 = lp_norm(f, 2.0);
    if (n2 > 0.0) f = cplx{1.0 / n2, 0.0} * f;
    return f;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string weight_desc(const Weight* w) {
    if (!w) return "w==1";
    if (w->is_power) return "power alpha=" + std::to_string(w->alpha);
    return "sampled";
}

} // namespace

NormEstimate opnorm(const LinearOp& T, double p, const Weight* w, int trials,
                    std::uint64_t seed, const OpnormOptions& opts) {
    if (!(p > 1.0) || std::isinf(p)) throw config_error("opnorm: need 1 < p < inf");
    if (trials < 1) throw config_error("opnorm: trials must be >= 1");

    std::vector<double> ws;
    if (w) ws = weight_samples(*w, T.spec);
    std::span<const double> wspan(ws);

    NormEstimate est;
    est.p = p;
    est.weight_desc = weight_desc(w);
    est.trials = trials;
    est.method = p == 2.0 ? "power-iteration" : "random-probe";
    est.residual = std::numeric_limits<double>::infinity();

    for (int trial = 0; trial < trials; ++trial) {
        GridFunction v = random_probe(T.spec, mix_seed(seed, static_cast<std::uint64_t>(trial)));
        if (p != 2.0) {
            const double denom = lp_norm(v, p, wspan);
            if (denom == 0.0) continue;
            const double ratio = lp_norm(T.apply(v), p, wspan) / denom;
            est.value = std::max(est.value, ratio);
            est.converged = true;
            est.residual = 0.0;
            continue;
        }

        double nv = lp_norm(v, 2.0, wspan);
        if (nv == 0.0) continue;
        v = cplx{1.0 / nv, 0.0} * v;
        double rho_prev = -1.0;
        for (int it = 0; it < opts.max_iters; ++it) {
            GridFunction u = T.apply(v);
            const double rho = lp_norm(u, 2.0, wspan);
            est.value = std::max(est.value, rho);
            const double change = std::abs(rho - rho_prev) / std::max(rho, 1e-300);
            if (rho_prev >= 0.0 && change < opts.tol) {
                est.converged = true;
                est.residual = std::min(est.residual, change);
                break;
            }
            if (it + 1 == opts.max_iters) est.residual = std::min(est.residual, change);
            rho_prev = rho;
            // weighted adjoint: T*_w = w^{-1} T* (w .)
            GridFunction wu = u;
            if (w)
                for (std::size_t i = 0; i < wu.size(); ++i) wu.values[i] *= ws[i];
            GridFunction z = T.apply_adjoint(wu);
            if (w)
                for (std::size_t i = 0; i < z.size(); ++i) z.values[i] /= ws[i];
            const double nz = lp_norm(z, 2.0, wspan);
            if (nz == 0.0) break;
            v = cplx{1.0 / nz, 0.0} * z;
        }
    }
    if (std::isinf(est.residual)) est.residual = 0.0;
    return est;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw config_error("fit_line: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw config_error("fit_line: degenerate abscissa");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    fit.count = static_cast<int>(x.size());
    return fit;
}

DecayResult decay_experiment(const LipschitzSymbol& b, const SphereSymbol& omega, BandSide side,
                             int jmax, double p, const Weight* w, int trials,
                             std::uint64_t seed, const JumpSchedule& schedule,
                             const OpnormOptions& opts) {
    if (jmax < 1) throw config_error("decay_experiment: jmax must be >= 1");
    const GridSpec& spec = b.field.spec;
    DecayResult result;
    result.rows.resize(static_cast<std::size_t>(jmax));
    parallel_for(1, static_cast<std::size_t>(jmax) + 1, [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        LinearOp op =
            guarded_op(commutator_op(spec, tij_symbol(spec, omega, j, side, schedule), b));
        const NormEstimate est =
            opnorm(op, p, w, trials, mix_seed(seed, static_cast<std::uint64_t>(j)), opts);
        result.rows[jj - 1] =
            DecayRow{j, schedule.at(j - 1), est.value, est.residual, est.converged};
    });
    std::vector<double> xs, ys;
    for (const DecayRow& row : result.rows) {
        if (row.value <= 0.0) continue;  // band entirely below grid resolution
        xs.push_back(static_cast<double>(row.n_prev));
        ys.push_back(std::log2(row.value));
    }
    if (xs.size() >= 2) {
        const LineFit fit = fit_line(xs, ys);
        result.fit = FittedRate{"decay", "N(j-1)", fit.slope, fit.rms_residual, fit.count};
        result.rate = -fit.slope;
    }
    return result;
}

GrowthResult growth_experiment(const LipschitzSymbol& b, const SphereSymbol& omega,
                               BandSide side, int jmax, double p, const Weight& w,
                               const ApReport& report, int trials, std::uint64_t seed,
                               const JumpSchedule& schedule, const OpnormOptions& opts) {
    const GridSpec& spec = b.field.spec;
    const double omega_norm =
        side == BandSide::low ? lq_norm(omega, std::numeric_limits<double>::infinity())
                              : lq_norm(omega, 1.0);
    const double denom_base = omega_norm * b.grad_bound * report.curly;
    if (!(denom_base > 0.0)) throw config_error("growth_experiment: degenerate normalization");

    GrowthResult result;
    result.ratio_min = std::numeric_limits<double>::infinity();
    result.rows.resize(static_cast<std::size_t>(jmax));
    parallel_for(1, static_cast<std::size_t>(jmax) + 1, [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        LinearOp op =
            guarded_op(commutator_op(spec, tij_symbol(spec, omega, j, side, schedule), b));
        const NormEstimate est =
            opnorm(op, p, &w, trials, mix_seed(seed, static_cast<std::uint64_t>(j)), opts);
        const long nj = schedule.at(j);
        const double ratio = est.value / ((1.0 + static_cast<double>(nj)) * denom_base);
        result.rows[jj - 1] = GrowthRow{j, nj, est.value, ratio};
    });
    for (const GrowthRow& row : result.rows) {
        if (row.ratio > 0.0) {
            result.ratio_max = std::max(result.ratio_max, row.ratio);
            result.ratio_min = std::min(result.ratio_min, row.ratio);
        }
    }
    if (std::isinf(result.ratio_min)) result.ratio_min = 0.0;
    return result;
}

double predicted_bound_thm11(const ApReport& report, double omega_lq, double grad_norm) {
    if (!(omega_lq >= 0.0) || !(grad_norm >= 0.0))
        throw config_error("predicted_bound_thm11: negative inputs");
    return omega_lq * report.curly * report.round * grad_norm;
}

double hrt_bound(double l2norm, double c_k, double dini, double curly) {
    if (l2norm < 0.0 || c_k < 0.0 || dini < 0.0 || curly < 0.0)
        throw config_error("hrt_bound: negative inputs");
    return (l2norm + c_k + dini) * curly;
}

ScalingResult weight_scaling_experiment(const LipschitzSymbol& b, const SphereSymbol& omega,
                                        std::span<const double> alphas, double p,
                                        const CubeFamily& family, double q, int trials,
                                        std::uint64_t seed, const OpnormOptions& opts) {
    const GridSpec& spec = b.field.spec;
    if (moments(omega).max_abs() > 1e-8 * std::max(1.0, lq_norm(omega, 1.0)))
        throw config_error("weight_scaling_experiment: symbol must satisfy cancellation");
    const auto [kmin, kmax] = shell_range(spec);
    LinearOp op = guarded_op(
        commutator_op(spec, commutator_sum_symbol(spec, omega, kmin, kmax), b));
    const double omega_lq = lq_norm(omega, q);

    for (double alpha : alphas)
        if (!(alpha > -spec.dim) || !(alpha < spec.dim * (p - 1.0)))
            throw config_error("weight_scaling_experiment: alpha " + std::to_string(alpha) +
                               " inadmissible at p");
    ScalingResult result;
    result.rows.resize(alphas.size());
    parallel_for(0, alphas.size(), [&](std::size_t a) {
        const Weight w = power_weight(alphas[a], spec.dim);
        ScalingRow row;
        row.alpha = alphas[a];
        row.report = weight_report(w, p, family, spec);
        row.value = opnorm(op, p, &w, trials, mix_seed(seed, a), opts).value;
        row.predicted = predicted_bound_thm11(row.report, omega_lq, b.grad_bound);
        result.rows[a] = row;
    });

    std::vector<double> xs, ys;
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (const ScalingRow& row : result.rows) {
        xs.push_back(std::log(row.report.ap));
        ys.push_back(std::log(row.value));
        const double ratio = row.value / row.predicted;
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
    }
    const LineFit fit = fit_line(xs, ys);
    result.fit = FittedRate{"scaling", "log ap", fit.slope, fit.rms_residual, fit.count};
    result.ratio_spread = rmin > 0.0 ? rmax / rmin : std::numeric_limits<double>::infinity();
    return result;
}

double sw_combine(double m0, double m1, double lambda) {
    if (!(m0 > 0.0) || !(m1 > 0.0)) throw config_error("sw_combine: norms must be positive");
    if (!(lambda >= 0.0) || !(lambda <= 1.0)) throw config_error("sw_combine: lambda in [0,1]");
    return std::pow(m0, lambda) * std::pow(m1, 1.0 - lambda);
}

double sw1_combine(double k0, double k1, double eps, Sw1Variant variant) {
    if (!(k0 > 0.0) || !(k1 > 0.0)) throw config_error("sw1_combine: norms must be positive");
    if (!(eps > 0.0)) throw config_error("sw1_combine: eps must be positive");
    const double lo = 1.0 / (1.0 + eps);
    const double hi = eps / (1.0 + eps);
    return variant == Sw1Variant::statement ? std::pow(k0, lo) * std::pow(k1, hi)
                                            : std::pow(k0, hi) * std::pow(k1, lo);
}

double geometric_sum(double gamma, double r, const JumpSchedule& schedule) {
    if (!(gamma > 0.0) || !(r > 0.0)) throw config_error("geometric_sum: need gamma, R > 0");
    double acc = 0.0;
    for (int j = 1; j <= 60; ++j) {
        const double nprev = static_cast<double>(schedule.at(j - 1));
        const double nj = static_cast<double>(schedule.at(j));
        const double term = (1.0 + nj) * std::exp2(-gamma * nprev / r);
        acc += term;
        if (term < 1e-14 * acc) break;
    }
    return acc;
}

InterpReport interpolation_consistency_experiment(
    const LipschitzSymbol& b, const SphereSymbol& omega, int j, double p, const Weight& w,
    double c_n, const CubeFamily& family, int trials, std::uint64_t seed,
    const JumpSchedule& schedule, double gamma, std::span<const double> r_values,
    const OpnormOptions& opts) {
    const GridSpec& spec = b.field.spec;
    const ApReport rep = weight_report(w, p, family, spec);

    InterpReport out;
    out.eps = epsilon_of(rep, c_n);
    LinearOp op = guarded_op(
        commutator_op(spec, tij_symbol(spec, omega, j, BandSide::low, schedule), b));
    out.k0 = opnorm(op, p, nullptr, trials, mix_seed(seed, 1), opts).value;
    const Weight over = weight_pow(w, 1.0 + out.eps);
    out.k1 = opnorm(op, p, &over, trials, mix_seed(seed, 2), opts).value;
    out.measured = opnorm(op, p, &w, trials, mix_seed(seed, 3), opts).value;
    out.combined = sw1_combine(out.k0, out.k1, out.eps, Sw1Variant::proof);
    out.upper_bound_holds = out.measured <= out.combined;

    static constexpr double default_rs[] = {1.0, 2.0, 4.0, 8.0};
    std::span<const double> rs = r_values.empty() ? std::span<const double>(default_rs)
                                                  : r_values;
    for (double r : rs) out.geo.push_back({r, geometric_sum(gamma, r, schedule)});
    return out;
}

} // namespace roughsing
