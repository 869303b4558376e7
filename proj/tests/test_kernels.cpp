#include "doctest.h"

#include "ultrametric/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace ultrametric;

namespace {

TestFunction random_function(std::mt19937_64& rng, const CosetWindow& window) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TestFunction f(window);
    for (auto& v : f.values()) v = Complex(u(rng), u(rng));
    return f;
}

// e^{2πi{a x}_p} on the window, which must be fine enough for a.
TestFunction character(const CosetWindow& window, const Rational& a) {
    TestFunction chi(window);
    const int p = window.group().prime();
    for (std::size_t c = 0; c < window.size(); ++c) {
        double phase = static_cast<double>(fractional_part(Rational(a * window.representative(c).coords[0]), p));
        chi[c] = std::polar(1.0, 2 * std::numbers::pi * phase);
    }
    return chi;
}

}  // namespace

TEST_CASE("riesz_gamma") {
    CHECK(riesz_gamma(0.5, 3.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(riesz_gamma(2.0, 3.0) == doctest::Approx(-9.0 / 4.0).epsilon(1e-15));
    for (double s = -2.05; s < 3.0; s += 0.1)
        CHECK(riesz_gamma(s, 5.0) * riesz_gamma(1 - s, 5.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(riesz_gamma(0.0, 3.0), DomainError);
    CHECK_THROWS_AS(riesz_gamma(1.0, 3.0), DomainError);
}

TEST_CASE("Riesz pairing") {
    auto z3 = GroupDescriptor::abelian(3, 1);
    const double kappa = 3.0;
    // f ≡ 1: geometric shell series of the direct formula
    for (double s : {0.3, 0.6, 1.7, 2.5}) {
        double series = 0;
        for (int n = 0; n < 4000; ++n) series += std::pow(kappa, -n * s) * (1 - 1 / kappa);
        series *= (1 - std::pow(kappa, -s)) / (1 - std::pow(kappa, s - 1));
        for (int outer : {0, 2}) {
            TestFunction one = constant_function(CosetWindow(z3, 0, 3), 1.0);
            CHECK(std::abs(riesz_pair(s, one) - series) < 1e-12);
            CHECK(std::abs(riesz_pair(s, one) - (1 - 1 / kappa) / (1 - std::pow(kappa, s - 1))) < 1e-12);
            // indicator of G_outer: the same series cut at the outer level
            auto ball = constant_function(CosetWindow(z3, outer, 3), 1.0);
            double partial = 0;
            for (int n = outer; n < 4000; ++n) partial += std::pow(kappa, -n * s) * (1 - 1 / kappa);
            partial *= (1 - std::pow(kappa, -s)) / (1 - std::pow(kappa, s - 1));
            CHECK(std::abs(riesz_pair(s, ball) - partial) < 1e-12);
        }
    }

    // characters: ⟨r_s, χ_a⟩ = ⟨χ_a⟩^{-s} for nontrivial χ_a, with ⟨χ_a⟩ = |a|_3
    CosetWindow w(z3, 0, 3);
    for (double s : {0.3, 0.6, 1.7, -0.4, -1.3}) {
        for (Rational a : {Rational(1, 3), Rational(2, 9), Rational(5, 27), Rational(1, 27)}) {
            double weight = std::pow(3.0, norm(a, 3).exponent);
            CHECK(std::abs(riesz_pair(s, character(w, a)) - std::pow(weight, -s)) < 1e-9);
        }
    }

    // s -> 0 recovers the value at the identity
    std::mt19937_64 rng(0);
    auto f = random_function(rng, w);
    CHECK(std::abs(riesz_pair(1e-6, f) - f[0]) < 1e-4);
    CHECK(std::abs(riesz_pair(1e-6, f) - f[0]) > 0.0);

    CHECK_THROWS_AS(riesz_pair(1.0, f), DomainError);
    CHECK_THROWS_AS(riesz_pair(0.5, constant_function(CosetWindow(z3, -1, 1), 1.0)), DomainError);
}

TEST_CASE("convolve_radial against a brute-force cell sum") {
    auto z3 = GroupDescriptor::abelian(3, 1);
    std::mt19937_64 rng(1);
    CosetWindow w(z3, 0, 3);
    auto f = random_function(rng, w);
    for (double s : {0.4, 1.7}) {
        auto kernel = riesz_kernel_profile(s, z3);
        const double c = 1 / riesz_gamma(s, 3.0);
        // ∫_{G_3} c|x|^{s-1}: shells 3^{-n}, n >= 3, each of measure 3^{-n}(2/3)
        double ball = 0;
        for (int n = 3; n < 4000; ++n) ball += c * std::pow(3.0, -n * s) * (2.0 / 3.0);
        auto conv = convolve_radial(f, kernel).values;
        for (std::size_t x = 0; x < w.size(); ++x) {
            Complex sum = f[x] * ball;
            for (std::size_t y = 0; y < w.size(); ++y) {
                if (y == x) continue;
                Rational diff = w.representative(y).coords[0] - w.representative(x).coords[0];
                sum += f[y] * c * std::pow(3.0, -valuation(diff, 3) * (s - 1)) / 27.0;
            }
            CHECK(std::abs(conv[x] - sum) < 1e-12);
        }
    }
    // off the window the convolution is E(|x|) ∫f
    auto kernel = fundamental_solution_profile(0.5, Setting::Graded, z3);
    auto conv = convolve_radial(f, kernel);
    GroupElement far{z3, {Rational(1, 9)}};
    CHECK(std::abs(conv.at(far) - integrate(f) / 3.0) < 1e-12);
}

TEST_CASE("Riesz semigroup on mean-zero functions") {
    auto z3 = GroupDescriptor::abelian(3, 1);
    CosetWindow w(z3, 0, 3);
    for (double s : {0.3, 0.6, 1.7}) {
        for (double t : {0.3, 0.6, 1.7}) {
            auto kernel = riesz_kernel_profile(t, z3);
            for (const auto& f : basis_mean_zero(w)) {
                Complex lhs = riesz_pair(s, convolve_radial(f, kernel).values);
                CHECK(std::abs(lhs - riesz_pair(s + t, f)) < 1e-9);
            }
        }
    }
}

TEST_CASE("fundamental solution profiles") {
    auto q3 = GroupDescriptor::abelian(3, 1);
    auto e = fundamental_solution_profile(0.5, Setting::Graded, q3);
    for (int m = -5; m <= 5; ++m) CHECK(e(m) == doctest::Approx(std::pow(3.0, -0.5 * m)).epsilon(1e-14));
    auto h = fundamental_solution_profile(2.0, Setting::Graded, GroupDescriptor::heisenberg(3, 1));
    for (int m = -5; m <= 5; ++m) CHECK(h(m) == doctest::Approx(std::pow(3.0, -2.0 * m)).epsilon(1e-14));
    GroupElement x{GroupDescriptor::heisenberg(3, 1), {0, 0, Rational(1, 9)}};
    CHECK(h.at(x) == doctest::Approx(std::pow(3.0, -2.0)).epsilon(1e-14));
    auto lg = fundamental_solution_profile(1.0, Setting::Compact, q3);
    for (int m = -5; m <= 0; ++m)
        CHECK(lg(m) == doctest::Approx((1 - 3.0) / (3 * std::log(3.0)) * std::log(std::pow(3.0, m))).epsilon(1e-14));
    CHECK_THROWS_AS(fundamental_solution_profile(4.0, Setting::Graded, GroupDescriptor::heisenberg(3, 1)), DomainError);
    CHECK_THROWS_AS(fundamental_solution_profile(1.0, Setting::LocallyCompactVilenkin, q3), DomainError);
    CHECK_THROWS_AS(fundamental_solution_profile(0.0, Setting::Graded, q3), DomainError);
}

TEST_CASE("compact fundamental solution inverts the VT-type operator") {
    auto z3 = GroupDescriptor::abelian(3, 1);
    CosetWindow w(z3, 0, 3);
    for (double alpha : {0.5, 2.3, 1.0}) {
        auto kernel = fundamental_solution_profile(alpha, Setting::Compact, z3);
        double worst = 0;
        for (const auto& f : basis_mean_zero(w))
            worst = std::max(worst, max_abs_difference(vt_compact_apply(convolve_radial(f, kernel).values, alpha, 0), f));
        CHECK(worst <= 1e-8);
    }
    // the logarithmic constant with the opposite sign does not invert 𝔻^1
    const double kappa = 3.0;
    ShellLaw flipped{0.0, 0.0, (1 - 1 / kappa) / std::log(kappa) * std::log(3.0)};
    std::vector<double> shells;
    for (int m = -12; m <= 0; ++m) shells.push_back(flipped(3, m));
    RadialProfile wrong(3, 1, -12, shells, flipped, flipped);
    auto f = basis_mean_zero(w)[0];
    CHECK(max_abs_difference(vt_compact_apply(convolve_radial(f, wrong).values, 1.0, 0), f) > 0.5);
}

TEST_CASE("locally compact fundamental solution") {
    std::mt19937_64 rng(2);
    for (int p : {2, 3}) {
        auto group = GroupDescriptor::abelian(p, 1);
        const double alpha = 0.7, kappa = p;
        auto kernel = fundamental_solution_profile(alpha, Setting::LocallyCompactVilenkin, group);
        CosetWindow w(group, 0, 2);
        for (int trial = 0; trial < 4; ++trial) {
            auto f = project_mean_zero(random_function(rng, w));
            CHECK(max_abs_difference(convolve_radial(vt_apply(f, alpha), kernel), f) <= 1e-8);
        }
        // with its tail the image of a non-mean-zero function is inverted as well
        auto ind = constant_function(CosetWindow(group, 0, 0), 1.0);
        auto g = random_function(rng, w);
        for (const auto& h : {ind, g}) {
            CHECK(max_abs_difference(convolve_radial(vt_apply(h, alpha), kernel), embed(h, 0, h.window().inner())) <= 1e-8);
            // keeping only the compact part at level l loses K C_V ϰ^{l-1} ∫f on G_l
            for (int l : {0, -1, -2}) {
                auto split = vt_split_decompose(h, alpha, l);
                auto partial = convolve_radial(split.main, kernel);
                Complex residual = split_residual(split, alpha, kernel);
                const double k_alpha = (1 - std::pow(kappa, -alpha)) / (1 - std::pow(kappa, alpha - 1));
                Complex closed = k_alpha * vt_constant(kappa, alpha, 1) * std::pow(kappa, l - 1) * integrate(h);
                CHECK(std::abs(residual - closed) < 1e-12);
                double worst = 0;
                for (std::size_t c = 0; c < h.window().size(); ++c)
                    worst = std::max(worst, std::abs(partial.at(h.window().representative(c)) - (h[c] - residual)));
                CHECK(worst <= 1e-8);
            }
        }
    }
}

TEST_CASE("graded fundamental solution on the Heisenberg group") {
    auto h = GroupDescriptor::heisenberg(3, 1);
    std::mt19937_64 rng(3);
    for (double alpha : {1.2, 2.0}) {
        auto kernel = fundamental_solution_profile(alpha, Setting::Graded, h);
        auto f = project_mean_zero(random_function(rng, CosetWindow(h, 0, 1)));
        CHECK(max_abs_difference(convolve_radial(vt_apply(f, alpha), kernel), f) <= 1e-8);
        auto one = constant_function(CosetWindow(h, 0, 0), 1.0);
        auto wide = vt_apply(one, alpha, CosetWindow(h, -1, 0));
        CHECK(max_abs_difference(convolve_radial(wide, kernel), embed(one, -1, 0)) <= 1e-8);
    }
    // a kernel growing faster than |x|^{α} cannot absorb the operator tail of a non-mean-zero f
    auto one = constant_function(CosetWindow(h, 0, 0), 1.0);
    ShellLaw steep{1.0, 5.0, 0.0};
    RadialProfile growing(3, 4, -2, std::vector<double>(5, 1.0), steep, steep);
    CHECK_THROWS_AS(convolve_radial(vt_apply(one, 1.0), growing), DomainError);
}

TEST_CASE("character sphere integrals") {
    const int p = 3;
    for (int d : {1, 2}) {
        for (int m = -2; m <= 2; ++m) {
            std::vector<Rational> x(static_cast<std::size_t>(d), 0);
            x[0] = rational_power(p, m) * 2;  // ‖x‖ = p^{-m}
            if (d == 2) x[1] = rational_power(p, m + 1);
            NormExponent x_norm = NormExponent::power(-m);
            for (int k = -2; k <= 2; ++k) {
                // ξ = p^{-k} n over cosets of p^L Z_3^d; L >= -m keeps the character constant on each
                const int level = std::max(-m, 1 - k);
                const int span = k + level;
                if (span * d > 4) continue;
                const std::int64_t count = static_cast<std::int64_t>(std::llround(std::pow(p, span)));
                Complex sum{};
                std::vector<std::int64_t> n(static_cast<std::size_t>(d), 0);
                const std::int64_t total = d == 1 ? count : count * count;
                for (std::int64_t idx = 0; idx < total; ++idx) {
                    n[0] = idx % count;
                    if (d == 2) n[1] = idx / count;
                    std::vector<Rational> xi;
                    int min_val = kInfiniteValuation;
                    for (auto v : n) {
                        xi.push_back(Rational(v) * rational_power(p, -k));
                        min_val = std::min(min_val, valuation(xi.back(), p));
                    }
                    if (min_val != -k) continue;
                    Rational dot = 0;
                    for (int i = 0; i < d; ++i) dot += x[static_cast<std::size_t>(i)] * xi[static_cast<std::size_t>(i)];
                    sum += std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(fractional_part(dot, p)));
                }
                sum *= std::pow(p, -level * d);
                CHECK(std::abs(sum - character_sphere_integral(x_norm, p, d, k)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("abelian heat kernel") {
    const int p = 3;
    for (int d : {1, 2}) {
        for (double alpha : {0.5, 1.0, 2.0}) {
            double low = 1e300, high = 0;
            for (int i = -4; i <= 4; ++i) {
                const double t = std::pow(p, i);
                auto profile = heat_profile_abelian(t, alpha, p, d);
                CHECK(profile.integral() == doctest::Approx(1.0).epsilon(1e-10));
                for (int m = -4; m <= 4; ++m) {
                    double ratio = profile(m) / heat_estimate(t, alpha, d, std::pow(p, m));
                    CHECK(profile(m) > 0);
                    low = std::min(low, ratio);
                    high = std::max(high, ratio);
                    // series against the direct shell sum Σ_k e^{-tp^{kα}} S_k(x)
                    double direct = 0;
                    for (int k = -200; k <= 1 - m; ++k)
                        direct += std::exp(-t * std::pow(p, k * alpha)) *
                                  character_sphere_integral(NormExponent::power(m), p, d, k);
                    CHECK(std::abs(profile(m) - direct) <= 1e-12 * std::abs(profile.identity_value.value()) + 1e-300);
                }
            }
            CHECK(high / low <= 100.0);
        }
    }
}

TEST_CASE("heat semigroup") {
    const int p = 3;
    for (int d : {1, 2}) {
        for (double alpha : {0.5, 1.0, 2.0}) {
            for (auto [t, s] : {std::pair{1.0, 1.0}, std::pair{1.0 / 9, 3.0}, std::pair{0.5, 2.0}}) {
                auto a = heat_profile_abelian(t, alpha, p, d), b = heat_profile_abelian(s, alpha, p, d);
                auto c = heat_profile_abelian(t + s, alpha, p, d);
                auto conv = convolve_profiles(a, b, -6, 6);
                for (int m = -6; m <= 6; ++m)
                    CHECK(std::abs(conv[static_cast<std::size_t>(m + 6)] - c(m)) <= 1e-6 * c.identity_value.value());
            }
        }
    }
}

TEST_CASE("fundamental solution and Riesz potentials from the heat kernel") {
    const int p = 3;
    auto e = fundamental_solution_via_heat(0.5, p, 1);
    for (int m = e.m_min(); m <= e.m_max(); ++m) CHECK(e(m) == doctest::Approx(std::pow(3.0, -0.5 * m)).epsilon(1e-6));
    // graded VT on H_1 shares the heat kernel of Q_p^4
    auto eh = fundamental_solution_via_heat(2.0, p, 4);
    for (int m = eh.m_min(); m <= eh.m_max(); ++m) CHECK(eh(m) == doctest::Approx(std::pow(3.0, -2.0 * m)).epsilon(1e-6));
    auto e2 = fundamental_solution_via_heat(1.5, p, 2);
    const double k = (1 - std::pow(3.0, -1.5)) / (1 - std::pow(3.0, -0.5));
    for (int m = e2.m_min(); m <= e2.m_max(); ++m) CHECK(e2(m) == doctest::Approx(k * std::pow(3.0, -0.5 * m)).epsilon(1e-6));

    for (auto [beta, alpha, d] : {std::tuple{0.3, 1.0, 1}, std::tuple{0.7, 2.0, 1}, std::tuple{1.5, 0.5, 2}}) {
        auto potential = riesz_potential(beta, alpha, p, d);
        for (int m = potential.m_min(); m < potential.m_max(); ++m)
            CHECK(potential(m + 1) / potential(m) == doctest::Approx(std::pow(3.0, beta - d)).epsilon(1e-6));
    }
    auto same = riesz_potential(0.5, 0.5, p, 1);
    for (int m = e.m_min(); m <= e.m_max(); ++m) CHECK(same(m) == doctest::Approx(e(m)).epsilon(1e-12));

    CHECK_THROWS_AS(fundamental_solution_via_heat(1.0, p, 1), DomainError);
    CHECK_THROWS_AS(riesz_potential(1.2, 0.5, p, 1), DomainError);
    CHECK_THROWS_AS(heat_profile_abelian(0.0, 1.0, p, 1), DomainError);
}
