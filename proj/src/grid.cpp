#include "roughsing/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace roughsing {

namespace {

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

std::string point_string(const GridSpec& spec, std::size_t idx) {
    auto p = point_of(spec, idx);
    std::ostringstream os;
    os << "(" << p[0];
    if (spec.dim == 2) os << ", " << p[1];
    os << ")";
    return os.str();
}

} // namespace

GridSpec make_grid(int dim, int points_per_axis, double halfwidth) {
    if (dim != 1 && dim != 2)
        throw config_error("make_grid: unsupported dimension " + std::to_string(dim));
    if (points_per_axis < 16 || !is_power_of_two(points_per_axis))
        throw config_error("make_grid: points per axis must be a power of two >= 16, got " +
                           std::to_string(points_per_axis));
    if (!(halfwidth > 0.0) || !std::isfinite(halfwidth))
        throw config_error("make_grid: halfwidth must be positive and finite");
    GridSpec spec;
    spec.dim = dim;
    spec.points_per_axis = points_per_axis;
    spec.halfwidth = halfwidth;
    spec.spacing = 2.0 * halfwidth / points_per_axis;
    return spec;
}

std::array<int, 2> axis_indices(const GridSpec& spec, std::size_t idx) {
    const int m = spec.points_per_axis;
    if (spec.dim == 1) return {static_cast<int>(idx), 0};
    return {static_cast<int>(idx / static_cast<std::size_t>(m)),
            static_cast<int>(idx % static_cast<std::size_t>(m))};
}

std::size_t flat_index(const GridSpec& spec, std::array<int, 2> axis_idx) {
    const int m = spec.points_per_axis;
    auto norm = [m](int i) { return ((i % m) + m) % m; };
    if (spec.dim == 1) return static_cast<std::size_t>(norm(axis_idx[0]));
    return static_cast<std::size_t>(norm(axis_idx[0])) * static_cast<std::size_t>(m) +
           static_cast<std::size_t>(norm(axis_idx[1]));
}

std::array<double, 2> point_of(const GridSpec& spec, std::size_t idx) {
    auto ai = axis_indices(spec, idx);
    const int m = spec.points_per_axis;
    return {spec.spacing * wrap_index(ai[0], m),
            spec.dim == 2 ? spec.spacing * wrap_index(ai[1], m) : 0.0};
}

double point_abs(const GridSpec& spec, std::size_t idx) {
    auto p = point_of(spec, idx);
    return spec.dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}

FrequencyIndex frequency_index(const GridSpec& spec, std::size_t idx) {
    auto ai = axis_indices(spec, idx);
    const int m = spec.points_per_axis;
    FrequencyIndex fi;
    fi.kappa = {wrap_index(ai[0], m), spec.dim == 2 ? wrap_index(ai[1], m) : 0};
    return fi;
}

std::size_t index_of(const GridSpec& spec, const FrequencyIndex& fi) {
    return flat_index(spec, fi.kappa);
}

std::array<double, 2> physical_frequency(const GridSpec& spec, const FrequencyIndex& fi) {
    const double step = std::numbers::pi / spec.halfwidth;
    return {step * fi.kappa[0], step * fi.kappa[1]};
}

std::array<double, 2> xi_of(const GridSpec& spec, std::size_t idx) {
    return physical_frequency(spec, frequency_index(spec, idx));
}

double xi_abs(const GridSpec& spec, std::size_t idx) {
    auto x = xi_of(spec, idx);
    return spec.dim == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
}

GridFunction make_zero(const GridSpec& spec) {
    return GridFunction{spec, std::vector<cplx>(spec.size(), cplx{0.0, 0.0})};
}

namespace {

GridFunction sample_impl(const GridSpec& spec,
                         const std::function<cplx(std::array<double, 2>)>& fn) {
    GridFunction f = make_zero(spec);
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
        const cplx v = fn(point_of(spec, idx));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw numeric_error("sample: non-finite value at lattice point " +
                                point_string(spec, idx));
        f.values[idx] = v;
    }
    return f;
}

} // namespace

GridFunction sample(const GridSpec& spec, const std::function<cplx(double)>& fn) {
    if (spec.dim != 1) throw config_error("sample: 1-argument sampler requires dim 1");
    return sample_impl(spec, [&fn](std::array<double, 2> p) { return fn(p[0]); });
}

GridFunction sample(const GridSpec& spec, const std::function<cplx(double, double)>& fn) {
    if (spec.dim != 2) throw config_error("sample: 2-argument sampler requires dim 2");
    return sample_impl(spec, [&fn](std::array<double, 2> p) { return fn(p[0], p[1]); });
}

namespace {

// One FFTW plan per (dim, M, sign). Plan creation is serialized; execution
// uses the new-array interface, which is safe to call concurrently.
// FFTW_UNALIGNED keeps the plans valid for arbitrary caller buffers.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    void execute(const GridSpec& spec, int sign, const cplx* in, cplx* out) {
        fftw_plan plan = get_plan(spec, sign);
        fftw_execute_dft(plan,
                         reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

private:
    fftw_plan get_plan(const GridSpec& spec, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_tuple(spec.dim, spec.points_per_axis, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::vector<cplx> a(spec.size()), b(spec.size());
        auto* pa = reinterpret_cast<fftw_complex*>(a.data());
        auto* pb = reinterpret_cast<fftw_complex*>(b.data());
        const int m = spec.points_per_axis;
        fftw_plan plan = spec.dim == 1
            ? fftw_plan_dft_1d(m, pa, pb, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
            : fftw_plan_dft_2d(m, m, pa, pb, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

} // namespace

GridFunction dft(const GridFunction& f) {
    GridFunction out = make_zero(f.spec);
    PlanCache::instance().execute(f.spec, FFTW_FORWARD, f.values.data(), out.values.data());
    // c^2 * M^n = h^n makes Parseval hold with the h^n measure on the space side.
    const double c = std::pow(f.spec.spacing / f.spec.points_per_axis, 0.5 * f.spec.dim);
    for (auto& v : out.values) v *= c;
    return out;
}

GridFunction idft(const GridFunction& F) {
    GridFunction out = make_zero(F.spec);
    PlanCache::instance().execute(F.spec, FFTW_BACKWARD, F.values.data(), out.values.data());
    const double c = std::pow(2.0 * F.spec.halfwidth, -0.5 * F.spec.dim);
    for (auto& v : out.values) v *= c;
    return out;
}

double continuum_scale(const GridSpec& spec) {
    return std::pow(2.0 * spec.halfwidth, 0.5 * spec.dim);
}

GridFunction apply_multiplier(const GridFunction& f, std::span<const cplx> m) {
    if (m.size() != f.size()) throw config_error("apply_multiplier: size mismatch");
    GridFunction F = dft(f);
    for (std::size_t i = 0; i < F.size(); ++i) F.values[i] *= m[i];
    return idft(F);
}

GridFunction apply_multiplier(const GridFunction& f, const std::function<cplx(std::size_t)>& m) {
    GridFunction F = dft(f);
    for (std::size_t i = 0; i < F.size(); ++i) F.values[i] *= m(i);
    return idft(F);
}

namespace {

void check_weight(std::span<const double> weight, std::size_t n, const char* who) {
    if (weight.empty()) return;
    if (weight.size() != n) throw config_error(std::string(who) + ": weight size mismatch");
    for (double w : weight)
        if (!(w > 0.0) || !std::isfinite(w))
            throw numeric_error(std::string(who) + ": nonpositive or non-finite weight sample");
}

} // namespace

double lp_norm(const GridFunction& f, double p, std::span<const double> weight) {
    if (!(p >= 1.0)) throw config_error("lp_norm: p must satisfy 1 <= p <= inf");
    if (std::isinf(p)) {
        double m = 0.0;
        for (const cplx& v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    check_weight(weight, f.size(), "lp_norm");
    const double vol = f.spec.cell_volume();
    double acc = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < f.size(); ++i)
            acc += std::norm(f.values[i]) * (weight.empty() ? 1.0 : weight[i]);
    } else {
        for (std::size_t i = 0; i < f.size(); ++i)
            acc += std::pow(std::abs(f.values[i]), p) * (weight.empty() ? 1.0 : weight[i]);
    }
    return std::pow(acc * vol, 1.0 / p);
}

cplx weighted_inner_product(const GridFunction& f, const GridFunction& g,
                            std::span<const double> weight) {
    if (!(f.spec == g.spec)) throw config_error("weighted_inner_product: grid mismatch");
    check_weight(weight, f.size(), "weighted_inner_product");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += f.values[i] * std::conj(g.values[i]) * (weight.empty() ? 1.0 : weight[i]);
    return acc * f.spec.cell_volume();
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    if (!(a.spec == b.spec)) throw config_error("GridFunction +: grid mismatch");
    GridFunction out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b.values[i];
    return out;
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    if (!(a.spec == b.spec)) throw config_error("GridFunction -: grid mismatch");
    GridFunction out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= b.values[i];
    return out;
}

GridFunction operator*(cplx c, const GridFunction& a) {
    GridFunction out = a;
    for (auto& v : out.values) v *= c;
    return out;
}

GridFunction hadamard(const GridFunction& a, const GridFunction& b) {
    if (!(a.spec == b.spec)) throw config_error("hadamard: grid mismatch");
    GridFunction out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= b.values[i];
    return out;
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(os, bits);
}

double get_f64(std::istream& is) {
    std::uint64_t bits = get_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

} // namespace

void write_binary(const GridFunction& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw numeric_error("write_binary: cannot open " + path);
    put_u64(os, static_cast<std::uint64_t>(f.spec.dim));
    put_u64(os, static_cast<std::uint64_t>(f.spec.points_per_axis));
    put_f64(os, f.spec.halfwidth);
    for (const cplx& v : f.values) {
        put_f64(os, v.real());
        put_f64(os, v.imag());
    }
    if (!os) throw numeric_error("write_binary: write failed for " + path);
}

GridFunction read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw config_error("read_binary: cannot open " + path);
    const int dim = static_cast<int>(get_u64(is));
    const int m = static_cast<int>(get_u64(is));
    const double L = get_f64(is);
    GridFunction f = make_zero(make_grid(dim, m, L));
    for (auto& v : f.values) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        v = cplx{re, im};
    }
    if (!is) throw config_error("read_binary: truncated file " + path);
    return f;
}

void write_csv(const GridFunction& f, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw numeric_error("write_csv: cannot open " + path);
    os << "index,re,im\n";
    char buf[80];
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, f.values[i].real(),
                      f.values[i].imag());
        os << buf;
    }
}

} // namespace roughsing
