#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "roughsing/operators.hpp"

using namespace roughsing;
using std::numbers::pi;

namespace {

GridFunction random_field(const GridSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    GridFunction f = make_zero(spec);
    for (auto& v : f.values) v = cplx{uni(rng), uni(rng)};
    return f;
}

// compactly supported smooth bump, zero outside |x| <= L/4
GridFunction bump(const GridSpec& spec) {
    const MollifierProfile& prof = default_profile();
    GridFunction f = make_zero(spec);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.values[i] = cplx{prof.eta(point_abs(spec, i) / (spec.halfwidth / 4.0)), 0.0};
    return f;
}

double rel_diff(const GridFunction& a, const GridFunction& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a.values[i] - b.values[i]);
        den += std::norm(b.values[i]);
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

} // namespace

TEST_CASE("lipschitz symbols") {
    const GridSpec spec = make_grid(2, 32, 4.0);
    const LipschitzSymbol b = linear_symbol(spec, {1.0, 0.0});
    CHECK(b.grad_bound == doctest::Approx(1.0));
    CHECK(b.field.values[flat_index(spec, {3, 5})].real() == doctest::Approx(3.0 * spec.spacing));

    // a sample violating its own stated bound is rejected
    GridFunction bad = make_zero(spec);
    for (std::size_t i = 0; i < bad.size(); ++i)
        bad.values[i] = cplx{5.0 * point_of(spec, i)[0], 0.0};
    CHECK_THROWS_AS(lipschitz_symbol(std::move(bad), 1.0), config_error);
}

TEST_CASE("shell range and band realization") {
    const GridSpec spec = make_grid(2, 64, 8.0);  // h = 0.25
    const auto [kmin, kmax] = shell_range(spec);
    CHECK(kmin == -2);
    CHECK(kmax == 1);

    const SphereSymbol om = from_harmonic(2, 2, 1.0);
    const KernelBand band = make_band(spec, om, 3, 0);
    for (std::size_t i = 0; i < band.realization.size(); ++i) {
        const double r = point_abs(spec, i);
        const cplx v = band.realization.values[i];
        if (r <= 1.0 || r > 2.0 || r >= spec.halfwidth / 2.0) {
            CHECK(v == cplx{0.0, 0.0});
        } else {
            const auto p = point_of(spec, i);
            const double expect = std::cos(2.0 * std::atan2(p[1], p[0])) / std::pow(r, 3);
            CHECK(v.real() == doctest::Approx(expect).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(make_band(spec, om, 5, 0), config_error);
}

TEST_CASE("khat point values") {
    SUBCASE("zero frequency, mean-zero symbol") {
        const SphereSymbol om = from_harmonic(2, 2, 1.0);
        CHECK(std::abs(khat(om, 3, 0, {0.0, 0.0})) <= 1e-12);
        CHECK(std::abs(khat(om, 3, -2, {0.0, 0.0})) <= 1e-12);
    }
    SUBCASE("zero frequency, constant symbol, commutator degree") {
        const SphereSymbol one = symbol_from_function(64, [](double) { return 1.0; });
        for (int k : {-1, 0, 2}) {
            const cplx v = khat(one, 3, k, {0.0, 0.0});
            CHECK(v.real() == doctest::Approx(2.0 * pi * std::ldexp(1.0, -k - 1)).epsilon(1e-12));
            CHECK(std::abs(v.imag()) <= 1e-12);
        }
    }
    SUBCASE("quadrature agrees with the transform of the realized band") {
        const GridSpec spec = make_grid(2, 1024, 16.0);
        const SphereSymbol om = from_harmonic(2, 2, 1.0);
        const KernelBand band = make_band(spec, om, 3, 2);  // shell (4, 8]
        const std::vector<cplx> hat = band_symbol(spec, band);
        double worst = 0.0;
        std::mt19937_64 rng(5);
        const double scale = std::ldexp(1.0, -band.k);  // ~ max |khat| for this band
        for (int t = 0; t < 40; ++t) {
            const std::size_t idx = rng() % spec.size();
            const double r = xi_abs(spec, idx);
            if (r < 0.05 || r > 2.0) continue;  // resolvable oscillation on this shell
            const cplx q = khat(om, 3, band.k, xi_of(spec, idx));
            worst = std::max(worst, std::abs(q - hat[idx]) / scale);
        }
        CHECK(worst <= 0.02);
    }
}

TEST_CASE("band application") {
    const GridSpec spec = make_grid(1, 64, 8.0);
    const SphereSymbol om = make_symbol_1d(1.0, -1.0);
    const KernelBand band = make_band(spec, om, 2, 0);

    SUBCASE("impulse reproduces the realized kernel") {
        GridFunction imp = make_zero(spec);
        imp.values[0] = cplx{1.0, 0.0};
        const GridFunction out = apply_band(band, imp);
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK(out.values[i].real() ==
                  doctest::Approx(band.realization.values[i].real() * spec.cell_volume())
                      .epsilon(1e-10));
    }

    SUBCASE("linearity") {
        const GridFunction f = random_field(spec, 11);
        const GridFunction g = random_field(spec, 12);
        const cplx c{0.7, -0.3};
        const GridFunction lhs = apply_band(band, f + c * g);
        const GridFunction rhs = apply_band(band, f) + c * apply_band(band, g);
        CHECK(rel_diff(lhs, rhs) <= 1e-12);
    }

    SUBCASE("direct spatial quadrature oracle") {
        const GridFunction f = random_field(spec, 13);
        const GridFunction fast = apply_band(band, f);
        GridFunction slow = make_zero(spec);
        const int m = spec.points_per_axis;
        for (int i = 0; i < m; ++i) {
            cplx acc{0.0, 0.0};
            for (int j = 0; j < m; ++j)
                acc += band.realization.values[flat_index(spec, {i - j, 0})] *
                       f.values[static_cast<std::size_t>(j)];
            slow.values[static_cast<std::size_t>(i)] = acc * spec.cell_volume();
        }
        CHECK(rel_diff(fast, slow) <= 1e-10);
    }
}

TEST_CASE("truncated operator") {
    SUBCASE("mean-zero symbol annihilates constants") {
        const GridSpec spec = make_grid(2, 64, 8.0);
        const SphereSymbol om = from_harmonic(2, 2, 1.0);
        const GridFunction ones = sample(spec, [](double, double) { return cplx{1.0, 0.0}; });
        const GridFunction out = apply_T_eps(om, ones, spec.spacing, 2);
        CHECK(lp_norm(out, 2.0) <= 1e-12 * lp_norm(ones, 2.0));
    }

    SUBCASE("eps below spacing is rejected") {
        const GridSpec spec = make_grid(1, 64, 8.0);
        const SphereSymbol om = make_symbol_1d(1.0, -1.0);
        const GridFunction f = random_field(spec, 14);
        CHECK_THROWS_AS(apply_T_eps(om, f, spec.spacing / 2.0, 1), config_error);
    }

    SUBCASE("doubling eps removes exactly the clipped annulus") {
        const GridSpec spec = make_grid(1, 128, 8.0);
        const SphereSymbol om = make_symbol_1d(1.0, -1.0);
        const GridFunction f = random_field(spec, 15);
        const double eps = 3.1 * spec.spacing;  // no lattice radius hits eps or 2 eps
        const GridFunction diff = apply_T_eps(om, f, eps, 1) - apply_T_eps(om, f, 2.0 * eps, 1);
        GridFunction annulus = make_zero(spec);
        for (std::size_t i = 0; i < annulus.size(); ++i) {
            const double r = point_abs(spec, i);
            if (r >= eps && r < 2.0 * eps)
                annulus.values[i] =
                    cplx{om.eval_sign(point_of(spec, i)[0]) / r, 0.0};
        }
        GridFunction hat = dft(annulus);
        for (auto& v : hat.values) v *= continuum_scale(spec);
        CHECK(rel_diff(diff, apply_multiplier(f, hat.values)) <= 1e-12);
    }

    SUBCASE("shells sum to the truncation") {
        const GridSpec spec = make_grid(1, 128, 8.0);
        const SphereSymbol om = make_symbol_1d(1.0, -1.0);
        const GridFunction f = random_field(spec, 16);
        const double eps = 0.25;  // = 2^{-2}, aligned with the shell grid
        GridFunction acc = make_zero(spec);
        for (int k = -2; k <= 2; ++k) acc = acc + apply_band(make_band(spec, om, 1, k), f);
        // the eps boundary ring |x| = eps belongs to the truncation but to no shell
        GridFunction ring = make_zero(spec);
        for (std::size_t i = 0; i < ring.size(); ++i)
            if (point_abs(spec, i) == eps)
                ring.values[i] = cplx{om.eval_sign(point_of(spec, i)[0]) / eps, 0.0};
        GridFunction ring_hat = dft(ring);
        for (auto& v : ring_hat.values) v *= continuum_scale(spec);
        acc = acc + apply_multiplier(f, ring_hat.values);
        CHECK(rel_diff(acc, apply_T_eps(om, f, eps, 1)) <= 1e-12);
    }
}

TEST_CASE("hilbert multiplier oracle") {
    const GridSpec spec = make_grid(1, 4096, 64.0);
    const SphereSymbol om = make_symbol_1d(1.0, -1.0);
    // band-limited probe centered near |xi| = 1
    GridFunction F = make_zero(spec);
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double r = xi_abs(spec, i);
        if (r < 0.6 || r > 1.6) continue;
        const double g = std::exp(-8.0 * (r - 1.1) * (r - 1.1));
        F.values[i] = cplx{g, 0.0};
    }
    const GridFunction f = idft(F);
    const GridFunction out = apply_T_eps(om, f, spec.spacing, 1);
    GridFunction expect = make_zero(spec);
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double s = xi_of(spec, i)[0] > 0.0 ? 1.0 : (xi_of(spec, i)[0] < 0.0 ? -1.0 : 0.0);
        expect.values[i] = cplx{0.0, -pi * s} * F.values[i];
    }
    expect = idft(expect);
    CHECK(rel_diff(out, expect) <= 0.02);
}

TEST_CASE("commutators") {
    const GridSpec spec = make_grid(1, 64, 8.0);
    const SphereSymbol om = make_symbol_1d(1.0, -1.0);
    const KernelBand band = make_band(spec, om, 2, -1);
    const GridFunction f = random_field(spec, 21);

    SUBCASE("constant b commutes") {
        const LipschitzSymbol b{sample(spec, [](double) { return cplx{2.0, 0.0}; }), 0.0};
        CHECK(lp_norm(commutator_band(b, band, f), 2.0) <= 1e-13 * lp_norm(f, 2.0));
    }

    SUBCASE("antisymmetry in b") {
        const LipschitzSymbol b = linear_symbol(spec, {1.0, 0.0});
        const LipschitzSymbol nb = linear_symbol(spec, {-1.0, 0.0});
        const GridFunction sum = commutator_band(b, band, f) + commutator_band(nb, band, f);
        CHECK(lp_norm(sum, 2.0) <= 1e-12 * lp_norm(f, 2.0));
    }

    SUBCASE("two-term form equals the kernel form") {
        const GridSpec spec2 = make_grid(2, 32, 4.0);
        const SphereSymbol om2 = from_harmonic(2, 2, 1.0);
        const KernelBand band2 = make_band(spec2, om2, 3, -1);
        const LipschitzSymbol b2 = linear_symbol(spec2, {0.6, -0.8});
        const GridFunction g = random_field(spec2, 22);
        const GridFunction two_term = commutator_band(b2, band2, g);

        GridFunction kernel_form = make_zero(spec2);
        const int m = spec2.points_per_axis;
        for (int i0 = 0; i0 < m; ++i0)
            for (int i1 = 0; i1 < m; ++i1) {
                cplx acc{0.0, 0.0};
                const std::size_t xi = flat_index(spec2, {i0, i1});
                for (int j0 = 0; j0 < m; ++j0)
                    for (int j1 = 0; j1 < m; ++j1) {
                        const std::size_t yi = flat_index(spec2, {j0, j1});
                        const cplx kv = band2.realization.values[flat_index(
                            spec2, {i0 - j0, i1 - j1})];
                        if (kv == cplx{0.0, 0.0}) continue;
                        acc += kv *
                               (b2.field.values[xi].real() - b2.field.values[yi].real()) *
                               g.values[yi];
                    }
                kernel_form.values[xi] = acc * spec2.cell_volume();
            }
        CHECK(rel_diff(two_term, kernel_form) <= 1e-10);
    }

    SUBCASE("linear b reduces to the degree-n operator with tilted symbol") {
        const GridSpec spec2 = make_grid(2, 64, 8.0);
        const SphereSymbol om2 = from_harmonic(2, 2, 1.0);
        const LipschitzSymbol b2 = linear_symbol(spec2, {1.0, 0.0});
        const SphereSymbol tilted = symbol_from_function(
            om2.nodes(), [&om2](double t) { return om2.eval_angle(t) * std::cos(t); });
        const GridFunction g = bump(spec2);

        const auto [kmin, kmax] = shell_range(spec2);
        GridFunction comm = make_zero(spec2);
        GridFunction sio = make_zero(spec2);
        for (int k = kmin; k <= kmax; ++k) {
            comm = comm + commutator_band(b2, make_band(spec2, om2, 3, k), g);
            sio = sio + apply_band(make_band(spec2, tilted, 2, k), g);
        }
        CHECK(rel_diff(comm, sio) <= 0.02);
    }
}

TEST_CASE("full commutator") {
    const GridSpec spec = make_grid(2, 32, 4.0);
    const SphereSymbol om = from_harmonic(2, 2, 1.0);
    const LipschitzSymbol b = linear_symbol(spec, {1.0, 0.0});
    const GridFunction f = random_field(spec, 31);
    const auto [kmin, kmax] = shell_range(spec);

    SUBCASE("degenerate inputs give zero") {
        const LipschitzSymbol bc{sample(spec, [](double, double) { return cplx{1.5, 0.0}; }),
                                 0.0};
        CHECK(lp_norm(apply_C(bc, om, f, kmin, kmax, true), 2.0) <= 1e-13);
        const SphereSymbol zero = symbol_from_function(16, [](double) { return 0.0; });
        CHECK(lp_norm(apply_C(b, zero, f, kmin, kmax, true), 2.0) <= 1e-14);
    }

    SUBCASE("cancellation flag") {
        const SphereSymbol noncancel = symbol_from_function(16, [](double) { return 1.0; });
        CHECK_THROWS_AS(apply_C(b, noncancel, f, kmin, kmax, true), config_error);
        CHECK_NOTHROW(apply_C(b, noncancel, f, kmin, kmax, false));
    }

    SUBCASE("linearity in f and in b") {
        const GridFunction g = random_field(spec, 32);
        const cplx c{0.3, 0.4};
        CHECK(rel_diff(apply_C(b, om, f + c * g, kmin, kmax, false),
                       apply_C(b, om, f, kmin, kmax, false) +
                           c * apply_C(b, om, g, kmin, kmax, false)) <= 1e-12);

        const LipschitzSymbol b2 = linear_symbol(spec, {0.0, 1.0});
        GridFunction bsum = b.field + b2.field;
        const LipschitzSymbol b12{bsum, std::hypot(1.0, 1.0)};
        CHECK(rel_diff(apply_C(b12, om, f, kmin, kmax, false),
                       apply_C(b, om, f, kmin, kmax, false) +
                           apply_C(b2, om, f, kmin, kmax, false)) <= 1e-12);
    }

    SUBCASE("small-k tail stays bounded") {
        const GridSpec fine = make_grid(1, 4096, 8.0);  // h = 2^{-8}
        const SphereSymbol om1 = make_symbol_1d(1.0, -1.0);
        const LipschitzSymbol b1 = linear_symbol(fine, {1.0, 0.0});
        const GridFunction g = sample(fine, [](double x) { return cplx{std::exp(-x * x), 0.0}; });
        CommutatorTail tail;
        apply_C(b1, om1, g, -8, -1, false, &tail);
        const double cap = lq_norm(om1, 1.0) * b1.grad_bound * lp_norm(g, 2.0);
        REQUIRE(tail.band_l2.size() == 8);
        for (const auto& [k, norm] : tail.band_l2) CHECK(norm <= cap);
    }
}

TEST_CASE("band-restricted commutators") {
    const GridSpec spec = make_grid(2, 64, 8.0);
    const SphereSymbol om = from_harmonic(2, 2, 1.0);
    const LipschitzSymbol b = linear_symbol(spec, {1.0, 0.0});
    const JumpSchedule schedule = JumpSchedule::pow2();

    SUBCASE("constant b gives zero at every j") {
        const LipschitzSymbol bc{sample(spec, [](double, double) { return cplx{1.0, 0.0}; }),
                                 0.0};
        const GridFunction f = random_field(spec, 41);
        for (int j : {1, 2, 3}) {
            CHECK(lp_norm(apply_comm_T1jN(bc, om, f, j, schedule), 2.0) <= 1e-13);
            CHECK(lp_norm(apply_comm_T2jN(bc, om, f, j, schedule), 2.0) <= 1e-13);
        }
    }

    SUBCASE("high side requires cancellation") {
        const SphereSymbol noncancel = symbol_from_function(16, [](double) { return 1.0; });
        const GridFunction f = random_field(spec, 42);
        CHECK_THROWS_AS(apply_comm_T2jN(b, noncancel, f, 1, schedule), config_error);
    }

    SUBCASE("pieces sum back to the full commutator") {
        // zero-mean band-limited probe; Omega = cos 2theta so the kappa = 0
        // commutator term vanishes by lattice symmetry
        GridFunction F = make_zero(spec);
        std::mt19937_64 rng(43);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (std::size_t i = 0; i < F.size(); ++i) {
            const double r = xi_abs(spec, i);
            if (r >= 0.5 && r <= 8.0) F.values[i] = cplx{uni(rng), uni(rng)};
        }
        const GridFunction f = idft(F);
        const auto [kmin, kmax] = shell_range(spec);
        const GridFunction whole = apply_C(b, om, f, kmin, kmax, true);
        GridFunction acc = make_zero(spec);
        for (int j = 1; j <= 9; ++j) {
            acc = acc + apply_comm_T1jN(b, om, f, j, schedule);
            acc = acc + apply_comm_T2jN(b, om, f, j, schedule);
        }
        CHECK(rel_diff(acc, whole) <= 1e-8);
    }
}

TEST_CASE("multiplier tables") {
    const GridSpec spec = make_grid(2, 64, 16.0);
    const SphereSymbol om = from_harmonic(2, 2, 1.0);
    const MollifierProfile& prof = default_profile();

    for (const BandSide side : {BandSide::low, BandSide::high}) {
        const int i = 2, k = side == BandSide::low ? 2 : -2;  // psi scale 2^0 on this lattice
        const MultiplierTable table = multiplier_table(om, i, k, side, spec, 3);
        const long e = side == BandSide::low ? k - i : k + i;
        double nonzero = 0.0;
        for (std::size_t idx = 0; idx < table.values.size(); ++idx) {
            const double psi = prof.psi_hat_scaled(xi_abs(spec, idx), e);
            if (psi == 0.0) {
                CHECK(table.values[idx] == cplx{0.0, 0.0});
            } else {
                nonzero += std::abs(table.values[idx]);
                const cplx expect = khat(om, 3, k, xi_of(spec, idx)) * psi;
                CHECK(std::abs(table.values[idx] - expect) <= 1e-12 * (1.0 + std::abs(expect)));
            }
        }
        CHECK(nonzero > 0.0);

        // |m| <= max |khat| over the annulus since |psi_hat| <= 1
        double khat_max = 0.0, m_max = 0.0;
        for (std::size_t idx = 0; idx < table.values.size(); ++idx) {
            if (prof.psi_hat_scaled(xi_abs(spec, idx), e) == 0.0) continue;
            khat_max = std::max(khat_max, std::abs(khat(om, 3, k, xi_of(spec, idx))));
            m_max = std::max(m_max, std::abs(table.values[idx]));
        }
        CHECK(m_max <= khat_max + 1e-15);
        CHECK(multiplier_annulus_max(om, i, k, side, spec, 3, 0) ==
              doctest::Approx(m_max).epsilon(1e-12));
    }
}

TEST_CASE("kernel size and smoothness probes") {
    const GridSpec spec = make_grid(2, 64, 8.0);
    const SphereSymbol om = from_harmonic(2, 2, 1.0);
    const JumpSchedule schedule = JumpSchedule::pow2();
    const auto samples = make_kernel_samples(spec, 50, 7, 0.6, 2.0);

    SUBCASE("constant b vanishes") {
        const LipschitzSymbol bc{sample(spec, [](double, double) { return cplx{1.0, 0.0}; }),
                                 0.0};
        const KernelCheckReport rep =
            kernel_estimate_check(bc, om, 1, schedule, BandSide::low, samples);
        CHECK(rep.size_ratio == 0.0);
        CHECK(rep.smooth_ratio == 0.0);
    }

    SUBCASE("ratios are finite and positive for linear b") {
        const LipschitzSymbol b = linear_symbol(spec, {1.0, 0.0});
        const KernelCheckReport rep =
            kernel_estimate_check(b, om, 1, schedule, BandSide::low, samples);
        CHECK(rep.size_ratio > 0.0);
        CHECK(std::isfinite(rep.size_ratio));
        CHECK(std::isfinite(rep.smooth_ratio));
    }

    SUBCASE("bad sample rejected") {
        const LipschitzSymbol b = linear_symbol(spec, {1.0, 0.0});
        KernelSample bad;
        bad.x = {0.0, 0.0};
        bad.y = {spec.spacing * 4, 0.0};
        bad.h = {spec.spacing * 3, 0.0};  // 2|h| > |x-y|
        CHECK_THROWS_AS(kernel_estimate_check(b, om, 1, schedule, BandSide::low, {bad}),
                        config_error);
    }
}

TEST_CASE("dini modulus and norm") {
    CHECK(dini_norm(0) == doctest::Approx(1.0));
    CHECK(dini_norm(4) == doctest::Approx(1.0 + 4.0 * std::numbers::ln2));
    CHECK(dini_norm(4, 2.0, 3.0) == doctest::Approx(6.0 * (1.0 + 4.0 * std::numbers::ln2)));
    CHECK_THROWS_AS(dini_norm(-1), config_error);

    const auto om4 = dini_modulus(4, 1.0, 1.0);
    CHECK(om4(1.0) == doctest::Approx(1.0));
    CHECK(om4(std::ldexp(1.0, -4)) == doctest::Approx(1.0));
    CHECK(om4(std::ldexp(1.0, -6)) == doctest::Approx(0.25));
    CHECK(om4(0.0) == 0.0);

    // numeric quadrature of the modulus matches the closed form
    for (long n : {0L, 2L, 5L}) {
        const auto mod = dini_modulus(n, 1.0, 1.0);
        double acc = 0.0;
        const int steps = 400000;
        for (int s = 1; s <= steps; ++s) {
            const double t = (s - 0.5) / steps;
            acc += mod(t) / t / steps;
        }
        CHECK(acc == doctest::Approx(dini_norm(n)).epsilon(1e-4));
    }
}
