#include "roughsing/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace roughsing {

using std::numbers::pi;

double SphereSymbol::quad_weight() const {
    return dim == 1 ? 1.0 : 2.0 * pi / nodes();
}

double SphereSymbol::angle(int i) const {
    return 2.0 * pi * i / nodes();
}

double SphereSymbol::eval_sign(double s) const {
    if (dim != 1) throw config_error("SphereSymbol::eval_sign: dim 1 only");
    return s >= 0.0 ? values[0] : values[1];
}

double SphereSymbol::eval_angle(double theta) const {
    if (dim != 2) throw config_error("SphereSymbol::eval_angle: dim 2 only");
    // p(theta) = Re c_0 + 2 Re sum_{m<S/2} c_m e^{im theta} + c_{S/2} cos(S theta / 2)
    const std::complex<double> rot{std::cos(theta), std::sin(theta)};
    std::complex<double> wheel{1.0, 0.0};
    double acc = interp[0].real();
    const int half = nodes() / 2;
    for (int m = 1; m < half; ++m) {
        wheel *= rot;
        acc += 2.0 * (interp[static_cast<std::size_t>(m)] * wheel).real();
    }
    wheel *= rot;
    acc += interp[static_cast<std::size_t>(half)].real() * wheel.real();
    return acc;
}

namespace {

void check_values(const std::vector<double>& v, const char* who) {
    for (double x : v)
        if (!std::isfinite(x)) throw numeric_error(std::string(who) + ": non-finite value");
}

std::vector<std::complex<double>> build_interp(const std::vector<double>& v) {
    const int s = static_cast<int>(v.size());
    std::vector<std::complex<double>> c(static_cast<std::size_t>(s / 2 + 1));
    for (int m = 0; m <= s / 2; ++m) {
        std::complex<double> acc{0.0, 0.0};
        for (int i = 0; i < s; ++i) {
            const double ang = -2.0 * pi * m * i / s;
            acc += v[static_cast<std::size_t>(i)] *
                   std::complex<double>{std::cos(ang), std::sin(ang)};
        }
        c[static_cast<std::size_t>(m)] = acc / static_cast<double>(s);
    }
    return c;
}

} // namespace

SphereSymbol make_symbol_1d(double plus, double minus) {
    SphereSymbol om;
    om.dim = 1;
    om.values = {plus, minus};
    check_values(om.values, "make_symbol_1d");
    return om;
}

SphereSymbol make_symbol_2d(std::vector<double> node_values) {
    const int s = static_cast<int>(node_values.size());
    if (s < 8 || s % 2 != 0)
        throw config_error("make_symbol_2d: need an even node count >= 8, got " +
                           std::to_string(s));
    check_values(node_values, "make_symbol_2d");
    SphereSymbol om;
    om.dim = 2;
    om.values = std::move(node_values);
    om.interp = build_interp(om.values);
    return om;
}

SphereSymbol symbol_from_function(int nodes, const std::function<double(double)>& fn) {
    std::vector<double> v(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) v[static_cast<std::size_t>(i)] = fn(2.0 * pi * i / nodes);
    return make_symbol_2d(std::move(v));
}

SphereSymbol from_harmonic(int dim, int m, double amplitude, int nodes) {
    if (dim != 2) throw config_error("from_harmonic: dim 2 only");
    if (nodes <= 2 * std::abs(m)) nodes = 4 * std::abs(m) + 8;
    return symbol_from_function(nodes,
                                [m, amplitude](double t) { return amplitude * std::cos(m * t); });
}

double lq_norm(const SphereSymbol& omega, double q) {
    if (!(q >= 1.0)) throw config_error("lq_norm: q must satisfy 1 <= q <= inf");
    if (std::isinf(q)) {
        double mx = 0.0;
        for (double v : omega.values) mx = std::max(mx, std::abs(v));
        return mx;
    }
    double acc = 0.0;
    for (double v : omega.values) acc += std::pow(std::abs(v), q);
    return std::pow(acc * omega.quad_weight(), 1.0 / q);
}

double MomentReport::max_abs() const {
    double m = std::abs(zeroth);
    for (double v : first) m = std::max(m, std::abs(v));
    return m;
}

MomentReport moments(const SphereSymbol& omega) {
    MomentReport rep;
    if (omega.dim == 1) {
        rep.zeroth = omega.values[0] + omega.values[1];
        rep.first = {omega.values[0] - omega.values[1]};
        return rep;
    }
    const double w = omega.quad_weight();
    double m0 = 0.0, mc = 0.0, ms = 0.0;
    for (int i = 0; i < omega.nodes(); ++i) {
        const double t = omega.angle(i);
        const double v = omega.values[static_cast<std::size_t>(i)];
        m0 += v;
        mc += v * std::cos(t);
        ms += v * std::sin(t);
    }
    rep.zeroth = m0 * w;
    rep.first = {mc * w, ms * w};
    return rep;
}

bool check_cancellation(const SphereSymbol& omega, double tol) {
    if (!(tol > 0.0)) throw config_error("check_cancellation: tol must be positive");
    return moments(omega).max_abs() <= tol;
}

SphereSymbol project_cancellation(const SphereSymbol& omega) {
    if (omega.dim == 1)
        throw config_error("project_cancellation: in dimension 1 the condition forces the zero "
                           "symbol; construct it explicitly instead");
    const MomentReport mom = moments(omega);
    const double c0 = mom.zeroth / (2.0 * pi);
    const double c1 = mom.first[0] / pi;
    const double s1 = mom.first[1] / pi;
    std::vector<double> v = omega.values;
    for (int i = 0; i < omega.nodes(); ++i) {
        const double t = omega.angle(i);
        v[static_cast<std::size_t>(i)] -= c0 + c1 * std::cos(t) + s1 * std::sin(t);
    }
    return make_symbol_2d(std::move(v));
}

void write_symbol_csv(const SphereSymbol& omega, const std::string& path) {
    if (omega.dim != 2) throw config_error("write_symbol_csv: dim 2 only");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw numeric_error("write_symbol_csv: cannot open " + path);
    os << "theta,value\n";
    char buf[80];
    for (int i = 0; i < omega.nodes(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", omega.angle(i),
                      omega.values[static_cast<std::size_t>(i)]);
        os << buf;
    }
}

SphereSymbol read_symbol_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("read_symbol_csv: cannot open " + path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<double> v;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw config_error("read_symbol_csv: malformed row '" + line + "'");
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    return make_symbol_2d(std::move(v));
}

} // namespace roughsing
