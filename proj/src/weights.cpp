#include "roughsing/weights.hpp"

#include "roughsing/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace roughsing {

Weight power_weight(double alpha, int dim) {
    if (dim != 1 && dim != 2) throw config_error("power_weight: unsupported dimension");
    if (!std::isfinite(alpha)) throw config_error("power_weight: alpha must be finite");
    Weight w;
    w.is_power = true;
    w.alpha = alpha;
    w.dim = dim;
    return w;
}

Weight sampled_weight(const GridSpec& spec, std::vector<double> samples) {
    if (samples.size() != spec.size()) throw config_error("sampled_weight: size mismatch");
    for (double v : samples)
        if (!(v > 0.0) || !std::isfinite(v))
            throw numeric_error("sampled_weight: weight samples must be positive and finite");
    Weight w;
    w.is_power = false;
    w.dim = spec.dim;
    w.spec = spec;
    w.samples = std::move(samples);
    return w;
}

namespace {

// (1/h) int_{x-h/2}^{x+h/2} |t|^alpha dt, any cell, alpha > -1.
double power_cell_average_1d(double alpha, double x, double h) {
    const double a = std::abs(x) - h / 2.0, b = std::abs(x) + h / 2.0;
    if (a <= 0.0) {  // origin cell
        return 2.0 * std::pow(h / 2.0, 1.0 + alpha) / ((1.0 + alpha) * h);
    }
    if (std::abs(1.0 + alpha) < 1e-12) return (std::log(b) - std::log(a)) / h;
    return (std::pow(b, 1.0 + alpha) - std::pow(a, 1.0 + alpha)) / ((1.0 + alpha) * h);
}

// int over the unit square [-1/2,1/2]^2 of |u|^alpha, alpha > -2, by polar
// slices: 8 int_0^{pi/4} R(t)^{2+alpha}/(2+alpha) dt with R = 1/(2 cos t).
double unit_square_power_integral_2d(double alpha) {
    const int n = 4000;
    double acc = 0.0;
    const double quarter = std::numbers::pi / 4.0;
    for (int i = 0; i < n; ++i) {
        const double t = quarter * (i + 0.5) / n;
        acc += std::pow(0.5 / std::cos(t), 2.0 + alpha);
    }
    return 8.0 * acc * quarter / n / (2.0 + alpha);
}

// Midpoint sub-quadrature over one lattice cell away from the origin.
double power_near_cell_average_2d(double alpha, double x0, double x1, double h) {
    const int n = 32;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double u = x0 + h * ((i + 0.5) / n - 0.5);
            const double v = x1 + h * ((j + 0.5) / n - 0.5);
            acc += std::pow(std::hypot(u, v), alpha);
        }
    return acc / (n * n);
}

} // namespace

std::vector<double> weight_samples(const Weight& w, const GridSpec& spec) {
    if (!w.is_power) {
        if (!(w.spec == spec)) throw config_error("weight_samples: sampled weight grid mismatch");
        return w.samples;
    }
    if (w.dim != spec.dim) throw config_error("weight_samples: dimension mismatch");
    if (!(w.alpha > -spec.dim))
        throw config_error("weight_samples: |x|^alpha not locally integrable at this alpha");
    // Samples are exact (or sub-quadrature) cell averages near the origin,
    // midpoint values elsewhere; the singular mass of |x|^alpha concentrates
    // in the innermost cells and midpoint sampling would misstate it badly.
    std::vector<double> out(spec.size());
    const double h = spec.spacing;
    const int m = spec.points_per_axis;
    const double origin_2d =
        spec.dim == 2 ? unit_square_power_integral_2d(w.alpha) * std::pow(h, w.alpha) : 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto ai = axis_indices(spec, i);
        const int w0 = wrap_index(ai[0], m);
        const int w1 = spec.dim == 2 ? wrap_index(ai[1], m) : 0;
        double v;
        if (spec.dim == 1) {
            v = power_cell_average_1d(w.alpha, h * w0, h);
        } else if (w0 == 0 && w1 == 0) {
            v = origin_2d;
        } else if (std::abs(w0) <= 4 && std::abs(w1) <= 4) {
            v = power_near_cell_average_2d(w.alpha, h * w0, h * w1, h);
        } else {
            v = std::pow(std::hypot(h * w0, h * w1), w.alpha);
        }
        if (!(v > 0.0) || !std::isfinite(v))
            throw numeric_error("weight_samples: power weight overflow near the origin");
        out[i] = v;
    }
    return out;
}

Weight dual_weight(const Weight& w, double p) {
    if (!(p > 1.0) || std::isinf(p)) throw config_error("dual_weight: need 1 < p < inf");
    const double expo = -1.0 / (p - 1.0);  // 1 - p'
    if (w.is_power) return power_weight(w.alpha * expo, w.dim);
    std::vector<double> s(w.samples.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = std::pow(w.samples[i], expo);
        if (!(s[i] > 0.0) || !std::isfinite(s[i]))
            throw numeric_error("dual_weight: overflow on extreme sample");
    }
    return sampled_weight(w.spec, std::move(s));
}

Weight weight_pow(const Weight& w, double expo) {
    if (!std::isfinite(expo)) throw config_error("weight_pow: exponent must be finite");
    if (w.is_power) return power_weight(w.alpha * expo, w.dim);
    std::vector<double> s(w.samples.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = std::pow(w.samples[i], expo);
        if (!(s[i] > 0.0) || !std::isfinite(s[i]))
            throw numeric_error("weight_pow: overflow on extreme sample");
    }
    return sampled_weight(w.spec, std::move(s));
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t family_hash_of(const GridSpec& spec, int emin, int emax) {
    std::uint64_t h = 14695981039346656037ull;
    h = fnv1a(h, &spec.dim, sizeof spec.dim);
    h = fnv1a(h, &spec.points_per_axis, sizeof spec.points_per_axis);
    h = fnv1a(h, &spec.halfwidth, sizeof spec.halfwidth);
    h = fnv1a(h, &emin, sizeof emin);
    h = fnv1a(h, &emax, sizeof emax);
    return h;
}

// Rectangle sums over lattice points, natural (sorted-coordinate) order.
// Axis coordinate of natural row r is h*(r - M/2).
class SummedTable {
public:
    SummedTable(const GridSpec& spec, const std::vector<double>& samples) : spec_(spec) {
        const int m = spec.points_per_axis;
        if (spec.dim == 1) {
            acc_.assign(static_cast<std::size_t>(m) + 1, 0.0);
            for (int r = 0; r < m; ++r)
                acc_[static_cast<std::size_t>(r) + 1] =
                    acc_[static_cast<std::size_t>(r)] + samples[storage_index(r, 0)];
        } else {
            stride_ = static_cast<std::size_t>(m) + 1;
            acc_.assign(stride_ * stride_, 0.0);
            for (int r0 = 0; r0 < m; ++r0)
                for (int r1 = 0; r1 < m; ++r1) {
                    const double v = samples[storage_index(r0, r1)];
                    at(r0 + 1, r1 + 1) = v + at(r0, r1 + 1) + at(r0 + 1, r1) - at(r0, r1);
                }
        }
    }

    // Sum over natural rows [a0, b0] x [a1, b1], clipped to [0, M).
    double sum(int a0, int b0, int a1, int b1) const {
        const int m = spec_.points_per_axis;
        a0 = std::max(a0, 0); a1 = std::max(a1, 0);
        b0 = std::min(b0, m - 1); b1 = std::min(b1, m - 1);
        if (a0 > b0 || (spec_.dim == 2 && a1 > b1)) return 0.0;
        if (spec_.dim == 1)
            return acc_[static_cast<std::size_t>(b0) + 1] - acc_[static_cast<std::size_t>(a0)];
        return at(b0 + 1, b1 + 1) - at(a0, b1 + 1) - at(b0 + 1, a1) + at(a0, a1);
    }

    static std::int64_t count(const GridSpec& spec, int a0, int b0, int a1, int b1) {
        const int m = spec.points_per_axis;
        a0 = std::max(a0, 0); a1 = std::max(a1, 0);
        b0 = std::min(b0, m - 1); b1 = std::min(b1, m - 1);
        if (a0 > b0) return 0;
        const std::int64_t n0 = b0 - a0 + 1;
        if (spec.dim == 1) return n0;
        if (a1 > b1) return 0;
        return n0 * (b1 - a1 + 1);
    }

private:
    std::size_t storage_index(int r0, int r1) const {
        const int m = spec_.points_per_axis;
        const int i0 = (r0 - m / 2 + m) % m;  // natural row -> FFT-order index
        const int i1 = (r1 - m / 2 + m) % m;
        return spec_.dim == 1 ? static_cast<std::size_t>(i0)
                              : static_cast<std::size_t>(i0) * static_cast<std::size_t>(m) +
                                    static_cast<std::size_t>(i1);
    }

    double& at(int r0, int r1) { return acc_[static_cast<std::size_t>(r0) * stride_ +
                                             static_cast<std::size_t>(r1)]; }
    double at(int r0, int r1) const { return acc_[static_cast<std::size_t>(r0) * stride_ +
                                                  static_cast<std::size_t>(r1)]; }

    GridSpec spec_;
    std::size_t stride_ = 0;
    std::vector<double> acc_;
};

struct NaturalRange {
    int lo0, hi0, lo1, hi1;
};

// Natural-row ranges of the lattice points inside a cube.
NaturalRange cube_range(const GridSpec& spec, const Cube& q) {
    const double h = spec.spacing;
    const int m = spec.points_per_axis;
    auto lo = [&](double c) { return static_cast<int>(std::ceil((c - q.side / 2) / h - 1e-12)) + m / 2; };
    auto hi = [&](double c) { return static_cast<int>(std::floor((c + q.side / 2) / h + 1e-12)) + m / 2; };
    NaturalRange r{lo(q.center[0]), hi(q.center[0]), 0, 0};
    if (spec.dim == 2) {
        r.lo1 = lo(q.center[1]);
        r.hi1 = hi(q.center[1]);
    }
    return r;
}

void check_cube(const GridSpec& spec, const Cube& q) {
    for (int a = 0; a < spec.dim; ++a) {
        if (q.center[static_cast<std::size_t>(a)] - q.side / 2 < -spec.halfwidth - 1e-12 ||
            q.center[static_cast<std::size_t>(a)] + q.side / 2 > spec.halfwidth + 1e-12)
            throw config_error("cube outside domain");
    }
    if (!(q.side > 0.0)) throw config_error("cube with nonpositive side");
}

} // namespace

CubeFamily make_cube_family(const GridSpec& spec, int side_exp_min, int side_exp_max) {
    if (side_exp_min > side_exp_max) throw config_error("make_cube_family: empty scale range");
    CubeFamily fam;
    fam.hash = family_hash_of(spec, side_exp_min, side_exp_max);
    for (int e = side_exp_min; e <= side_exp_max; ++e) {
        const double side = std::ldexp(1.0, e);
        if (side > 2.0 * spec.halfwidth) break;
        const double step = side / 3.0;
        const double cmax = spec.halfwidth - side / 2.0;
        if (cmax < 0.0) continue;
        const int kmax = static_cast<int>(std::floor(cmax / step + 1e-12));
        for (int k0 = -kmax; k0 <= kmax; ++k0) {
            if (spec.dim == 1) {
                fam.cubes.push_back(Cube{{k0 * step, 0.0}, side});
            } else {
                for (int k1 = -kmax; k1 <= kmax; ++k1)
                    fam.cubes.push_back(Cube{{k0 * step, k1 * step}, side});
            }
        }
    }
    if (fam.cubes.empty()) throw config_error("make_cube_family: no cubes fit the domain");
    return fam;
}

CubeFamily default_cube_family(const GridSpec& spec) {
    const int emin = static_cast<int>(std::ceil(std::log2(8.0 * spec.spacing) - 1e-9));
    const int emax = static_cast<int>(std::floor(std::log2(spec.halfwidth) + 1e-9));
    return make_cube_family(spec, emin, emax);
}

double ap_characteristic(const Weight& w, double p, const CubeFamily& family,
                         const GridSpec& spec) {
    if (!(p > 1.0) || std::isinf(p)) throw config_error("ap_characteristic: need 1 < p < inf");
    const std::vector<double> ws = weight_samples(w, spec);
    const std::vector<double> ss = weight_samples(dual_weight(w, p), spec);
    SummedTable tw(spec, ws), ts(spec, ss);
    for (const Cube& q : family.cubes) check_cube(spec, q);
    // cubes are independent; the reduction is a max, so the worker split
    // cannot change the result
    std::vector<double> per_cube(family.cubes.size(), 0.0);
    parallel_for(0, family.cubes.size(), [&](std::size_t c) {
        const NaturalRange r = cube_range(spec, family.cubes[c]);
        const auto cnt = SummedTable::count(spec, r.lo0, r.hi0, r.lo1, r.hi1);
        if (cnt == 0) return;
        const double avg_w = tw.sum(r.lo0, r.hi0, r.lo1, r.hi1) / static_cast<double>(cnt);
        const double avg_s = ts.sum(r.lo0, r.hi0, r.lo1, r.hi1) / static_cast<double>(cnt);
        per_cube[c] = avg_w * std::pow(avg_s, p - 1.0);
    });
    double best = 0.0;
    for (double v : per_cube) best = std::max(best, v);
    return best;
}

double ainfty_fujii_wilson(const Weight& w, const CubeFamily& family, const GridSpec& spec) {
    const std::vector<double> ws = weight_samples(w, spec);
    SummedTable tw(spec, ws);
    const int m = spec.points_per_axis;
    for (const Cube& q : family.cubes) check_cube(spec, q);
    std::vector<double> per_cube(family.cubes.size(), 0.0);
    parallel_for(0, family.cubes.size(), [&](std::size_t c) {
        const Cube& q = family.cubes[c];
        const NaturalRange r = cube_range(spec, q);
        if (SummedTable::count(spec, r.lo0, r.hi0, r.lo1, r.hi1) == 0) return;

        // Centered radii in lattice steps: 0 (the point itself), dyadic, and
        // the largest radius allowed by side(Q).
        const int rad_cap = static_cast<int>(std::floor(q.side / (2.0 * spec.spacing) + 1e-12));
        std::vector<int> radii{0};
        for (int rad = 1; rad <= rad_cap; rad *= 2) radii.push_back(rad);
        if (radii.back() != rad_cap) radii.push_back(rad_cap);

        double total_max = 0.0;
        double mass = 0.0;
        for (int n0 = std::max(r.lo0, 0); n0 <= std::min(r.hi0, m - 1); ++n0) {
            for (int n1 = std::max(r.lo1, 0); n1 <= std::min(r.hi1, spec.dim == 2 ? m - 1 : 0);
                 ++n1) {
                double mx = 0.0;
                for (int rad : radii) {
                    // numerator restricted to Q, denominator clipped to the domain
                    const double num =
                        tw.sum(std::max(n0 - rad, r.lo0), std::min(n0 + rad, r.hi0),
                               std::max(n1 - rad, r.lo1), std::min(n1 + rad, r.hi1));
                    const auto den = SummedTable::count(spec, n0 - rad, n0 + rad, n1 - rad,
                                                        n1 + rad);
                    if (den > 0) mx = std::max(mx, num / static_cast<double>(den));
                }
                total_max += mx;
                mass += tw.sum(n0, n0, n1, n1);
            }
        }
        if (mass > 0.0) per_cube[c] = total_max / mass;
    });
    double best = 0.0;
    for (double v : per_cube) best = std::max(best, v);
    return best;
}

ApReport weight_report(const Weight& w, double p, const CubeFamily& family,
                       const GridSpec& spec) {
    ApReport rep;
    rep.p = p;
    rep.family_hash = family.hash;
    rep.ap = ap_characteristic(w, p, family, spec);
    rep.ainf_w = ainfty_fujii_wilson(w, family, spec);
    rep.ainf_sigma = ainfty_fujii_wilson(dual_weight(w, p), family, spec);
    rep.round = std::max(rep.ainf_w, rep.ainf_sigma);
    const double pp = p / (p - 1.0);
    rep.curly = std::pow(rep.ap, 1.0 / p) *
                std::max(std::pow(rep.ainf_w, 1.0 / pp), std::pow(rep.ainf_sigma, 1.0 / p));
    return rep;
}

double epsilon_of(const ApReport& report, double c_n) {
    if (!(c_n > 0.0)) throw config_error("epsilon_of: c_n must be positive");
    if (!(report.round >= 1.0))
        throw config_error("epsilon_of: report with (w)_{A_p} < 1 rejected");
    const double eps = c_n / (2.0 * report.round);
    return std::clamp(eps, 1e-12, 1.0 - 1e-12);
}

std::string report_json(const ApReport& rep) {
    char buf[360];
    std::snprintf(buf, sizeof buf,
                  "{\"p\": %.17g, \"ap\": %.17g, \"ainf_w\": %.17g, \"ainf_sigma\": %.17g, "
                  "\"round\": %.17g, \"curly\": %.17g, \"family_hash\": \"%016llx\"}",
                  rep.p, rep.ap, rep.ainf_w, rep.ainf_sigma, rep.round, rep.curly,
                  static_cast<unsigned long long>(rep.family_hash));
    return std::string(buf);
}

} // namespace roughsing
