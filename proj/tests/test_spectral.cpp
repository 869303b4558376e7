#include "doctest.h"

#include "ultrametric/spectral.hpp"
#include "ultrametric/vt.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

using namespace ultrametric;

namespace {

constexpr int kP = 3;

Rational random_rational(std::mt19937_64& rng, int valuation, int digits) {
    std::int64_t bound = 1;
    for (int i = 0; i < digits; ++i) bound *= kP;
    std::uniform_int_distribution<std::int64_t> n(0, bound - 1);
    return rational_power(kP, valuation) * Rational(n(rng));
}

ComplexVector random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g;
    ComplexVector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = Complex(g(rng), g(rng));
    return v;
}

GroupElement heisenberg_element(const Rational& x, const Rational& y, const Rational& z) {
    return {GroupDescriptor::heisenberg(kP, 1), {x, y, z}};
}

// Zero mean along every central fibre: ∫ f(x,y,z) dz = 0 for all (x,y).
TestFunction central_mean_zero(std::mt19937_64& rng, const CosetWindow& window) {
    std::normal_distribution<double> g;
    TestFunction f(window);
    std::map<std::pair<std::int64_t, std::int64_t>, Complex> sum;
    std::map<std::pair<std::int64_t, std::int64_t>, int> count;
    for (std::size_t c = 0; c < window.size(); ++c) {
        f[c] = Complex(g(rng), g(rng));
        auto d = window.digits(c);
        sum[{d[0], d[1]}] += f[c];
        ++count[{d[0], d[1]}];
    }
    for (std::size_t c = 0; c < window.size(); ++c) {
        auto d = window.digits(c);
        f[c] -= sum[{d[0], d[1]}] / static_cast<double>(count[{d[0], d[1]}]);
    }
    return f;
}

// C ∫ (e^{2πi{a t}} - 1) |t|^{-alpha-1} dt summed sphere by sphere; the one sphere where the
// character is neither trivial nor averaging to zero is a brute-force character sum.
double vt_character_quadrature(const Rational& a, double alpha) {
    const int e = -valuation(a, kP);  // |a| = p^e
    const int m = 1 - e;              // sphere |t| = p^m
    std::int64_t count = 1;
    for (int i = 0; i < e + m; ++i) count *= kP;
    double sphere = 0.0;
    for (std::int64_t n = 1; n < count; ++n) {
        if (n % kP == 0) continue;
        const Rational t = rational_power(kP, -m) * Rational(n);
        const double phase = fractional_part(Rational(a * t), kP).convert_to<double>();
        sphere += std::cos(2 * std::numbers::pi * phase) - 1.0;
    }
    sphere *= std::pow(kP, m) / static_cast<double>(count);
    double total = sphere * std::pow(kP, -m * (alpha + 1));
    for (int j = m + 1; j < m + 400; ++j) total -= (1.0 - 1.0 / kP) * std::pow(kP, -j * alpha);
    return vt_constant(kP, alpha, 1.0) * total;
}

}  // namespace

TEST_CASE("representation windows") {
    RepWindow w(kP, 2, 1, 1);
    CHECK(w.size() == 81);
    CHECK(w.side() == 9);
    CHECK(w.outer() == 0);
    CHECK(w.inner() == 2);
    CHECK(w.cell_weight() == doctest::Approx(std::pow(3.0, -4)));
    for (std::size_t c = 0; c < w.size(); ++c) CHECK(w.index(w.digits(c)) == c);
    CHECK(w.representative(w.index({4, 3}))[1] == Rational(3));
    CHECK(*w.norm_exponent(w.index({3, 0}), 0) == -1);
    CHECK_FALSE(w.norm_exponent(w.index({3, 0}), 1).has_value());
    CHECK_THROWS_AS(w.shift_permutation({Rational(1, 3), Rational(0)}), DomainError);
    CHECK(heisenberg_window_scale(-3) == -1);
    CHECK(heisenberg_window_scale(3) == 2);
    CHECK(engel_window_scale(-2) == 0);
    CHECK(engel_window_scale(4) == 2);
}

TEST_CASE("Schrödinger representation") {
    std::mt19937_64 rng(11);
    RepWindow window(kP, 1, 2, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> shell(-1, 1);
        std::uniform_int_distribution<int> unit(1, 8);
        int u = unit(rng);
        if (u % 3 == 0) ++u;
        auto point = RepPoint::heisenberg(rational_power(kP, -shell(rng)) * Rational(u), kP);
        auto a = heisenberg_element(random_rational(rng, -1, 3), random_rational(rng, 0, 3), random_rational(rng, -3, 6));
        auto b = heisenberg_element(random_rational(rng, -1, 3), random_rational(rng, 0, 3), random_rational(rng, -3, 6));
        auto pa = schrodinger_matrix(point, a, window);
        auto pb = schrodinger_matrix(point, b, window);
        auto pab = schrodinger_matrix(point, group_law(a, b), window);
        CHECK((pa * pb - pab).cwiseAbs().maxCoeff() < 1e-12);
        auto phi = random_vector(rng, window.size());
        CHECK(std::abs(schrodinger_apply(point, a, window, phi).norm() - phi.norm()) < 1e-12 * phi.norm());
        CHECK((schrodinger_matrix(point, inverse(a), window) - pa.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
    auto point = RepPoint::heisenberg(Rational(2, 3), kP);
    auto phi = random_vector(rng, window.size());
    // central element: a scalar phase
    const double phase = fractional_part(Rational(Rational(2, 3) * Rational(5, 9)), kP).convert_to<double>();
    auto central = schrodinger_apply(point, heisenberg_element(0, 0, Rational(5, 9)), window, phi);
    CHECK((central - std::polar(1.0, 2 * std::numbers::pi * phase) * phi).norm() < 1e-12);
    // pure shift: φ(u + x)
    auto shifted = schrodinger_apply(point, heisenberg_element(Rational(1, 3), 0, 0), window, phi);
    auto permutation = window.shift_permutation({Rational(1, 3)});
    for (std::size_t c = 0; c < window.size(); ++c)
        CHECK(shifted[static_cast<Eigen::Index>(c)] == phi[static_cast<Eigen::Index>(permutation[c])]);
    CHECK_THROWS_AS(RepPoint::heisenberg(Rational(0), kP), DomainError);
    CHECK_THROWS_AS(schrodinger_matrix(point, heisenberg_element(Rational(1, 27), 0, 0), window), DomainError);
    CHECK_THROWS_AS(schrodinger_matrix(point, heisenberg_element(0, Rational(1, 27), 0), window), DomainError);
}

TEST_CASE("Engel representation") {
    std::mt19937_64 rng(12);
    auto e4 = GroupDescriptor::engel(kP);
    RepWindow window(kP, 1, 2, 0);
    for (int trial = 0; trial < 100; ++trial) {
        auto point = RepPoint::engel(random_rational(rng, 0, 3) + 1, random_rational(rng, -2, 4), kP);
        if (valuation(point.lambda, kP) != 0) continue;
        auto sample = [&] {
            return GroupElement{e4, {random_rational(rng, -1, 3), random_rational(rng, 1, 3), random_rational(rng, 0, 3),
                                     random_rational(rng, -3, 6)}};
        };
        auto a = sample(), b = sample();
        auto pab = engel_rep_matrix(point, group_law(a, b), window);
        CHECK((engel_rep_matrix(point, a, window) * engel_rep_matrix(point, b, window) - pab).cwiseAbs().maxCoeff() < 1e-12);
    }
    auto point = RepPoint::engel(Rational(1), Rational(2, 3), kP);
    auto phi = random_vector(rng, window.size());
    const double phase = fractional_part(Rational(4, 27), kP).convert_to<double>();
    auto central = engel_rep_apply(point, GroupElement{e4, {0, 0, 0, Rational(4, 27)}}, window, phi);
    CHECK((central - std::polar(1.0, 2 * std::numbers::pi * phase) * phi).norm() < 1e-12);
    auto shifted = engel_rep_apply(point, GroupElement{e4, {Rational(2, 9), 0, 0, 0}}, window, phi);
    auto permutation = window.shift_permutation({Rational(2, 9)});
    for (std::size_t c = 0; c < window.size(); ++c)
        CHECK(shifted[static_cast<Eigen::Index>(c)] == phi[static_cast<Eigen::Index>(permutation[c])]);
    CHECK_THROWS_AS(RepPoint::engel(Rational(0), Rational(1), kP), DomainError);
}

TEST_CASE("kinetic symbol is the VT operator on the window") {
    std::mt19937_64 rng(13);
    auto line = GroupDescriptor::abelian(kP, 1);
    for (double alpha : {0.6, 1.0, 2.3}) {
        for (int k : {1, 2}) {
            RepWindow window(kP, 1, k, 0);
            CosetWindow cells(line, -k, k);
            auto point = RepPoint::heisenberg(Rational(1), kP);
            auto sigma = directional_symbol(point, 0, alpha, window);
            auto phi = random_vector(rng, window.size());
            TestFunction f(cells, std::vector<Complex>(phi.begin(), phi.end()));
            auto image = directional_vt_apply(f, 0, alpha).values;
            ComplexVector expected = sigma * phi;
            for (std::size_t c = 0; c < cells.size(); ++c)
                CHECK(std::abs(expected[static_cast<Eigen::Index>(c)] - image[c]) < 1e-11 * (1 + std::abs(image[c])));
            CHECK((sigma - sigma.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    // two coordinates: Kronecker structure, the second digit is untouched by D_{u_1}
    RepWindow plane(kP, 2, 1, 0);
    auto sigma = directional_symbol(RepPoint::heisenberg(Rational(1), kP), 0, 1.0, plane);
    for (std::size_t a = 0; a < plane.size(); ++a)
        for (std::size_t b = 0; b < plane.size(); ++b)
            if (plane.digits(a)[1] != plane.digits(b)[1])
                CHECK(sigma(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) == Complex(0.0));
}

TEST_CASE("central and potential symbols") {
    RepWindow window(kP, 1, 2, 1);
    for (double alpha : {0.5, 1.3, 2.0}) {
        for (const Rational& lambda : {Rational(2, 3), Rational(9), Rational(1, 27)}) {
            auto point = RepPoint::heisenberg(lambda, kP);
            const double size = norm(lambda, kP).value(kP);
            auto z = directional_symbol(point, 2, alpha, window);
            CHECK((z - std::pow(size, alpha) * ComplexMatrix::Identity(81, 81)).cwiseAbs().maxCoeff() < 1e-12 * std::pow(size, alpha));
            auto y = directional_symbol(point, 1, alpha, window);
            for (std::size_t c = 1; c < window.size(); ++c) {
                const double u = norm(window.representative(c)[0], kP).value(kP);
                const double entry = y(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)).real();
                CHECK(entry == doctest::Approx(std::pow(size * u, alpha)).epsilon(1e-13));
                CHECK(entry == doctest::Approx(vt_character_quadrature(lambda * window.representative(c)[0], alpha)).epsilon(1e-9));
            }
            CHECK(std::pow(size, alpha) == doctest::Approx(vt_character_quadrature(lambda, alpha)).epsilon(1e-9));
            // the origin cell carries the mean of |λu|^alpha over ‖u‖ <= p^{-3}
            double mean = 0.0;
            for (int m = 3; m < 400; ++m) mean += (1 - 1.0 / kP) * std::pow(kP, -m) * std::pow(kP, -m * alpha);
            mean *= std::pow(kP, 3) * std::pow(size, alpha);
            CHECK(y(0, 0).real() == doctest::Approx(mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("Laplacian symbols") {
    for (double alpha : {0.7, 2.0}) {
        for (int k = -2; k <= 2; ++k) {
            RepWindow window(kP, 1, 2, heisenberg_window_scale(k));
            auto point = RepPoint::heisenberg(rational_power(kP, -k) * 2, kP);
            auto full = symbol_matrix(SymbolKind::Laplacian, point, alpha, window);
            auto sub = symbol_matrix(SymbolKind::SubLaplacian, point, alpha, window);
            CHECK(full.hermitian_defect() < 1e-12 * full.matrix().cwiseAbs().maxCoeff());
            CHECK(full.eigenvalues()[0] >= std::pow(kP, k * alpha / 2) * (1 - 1e-12));
            CHECK(sub.eigenvalues()[0] > 0.0);
            CHECK((full.matrix() - sub.matrix() - std::pow(kP, k * alpha / 2) * ComplexMatrix::Identity(81, 81)).cwiseAbs().maxCoeff() < 1e-9);
            for (Eigen::Index i = 1; i < full.eigenvalues().size(); ++i)
                CHECK(full.eigenvalues()[i] >= full.eigenvalues()[i - 1]);
            // V Λ V* reproduces the matrix
            auto rebuilt = full.apply_function([](double e) { return e; });
            CHECK((rebuilt - full.matrix()).cwiseAbs().maxCoeff() < 1e-9 * full.matrix().cwiseAbs().maxCoeff());
        }
    }
    auto point = RepPoint::heisenberg(Rational(1), kP);
    CHECK_THROWS_AS(symbol_matrix(SymbolKind::Laplacian, point, 0.0, RepWindow(kP, 1, 1)), DomainError);
    CHECK_THROWS_AS(symbol_matrix(SymbolKind::EngelLaplacian, point, 1.0, RepWindow(kP, 1, 1)), DomainError);
}

TEST_CASE("dilation covariance of the symbol") {
    const double alpha = 1.4;
    for (int k : {-1, 0, 1, 2}) {
        RepWindow window(kP, 1, 2, heisenberg_window_scale(k));
        const Rational lambda = rational_power(kP, -k) * 2;
        auto base = symbol_matrix(SymbolKind::Laplacian, RepPoint::heisenberg(lambda, kP), alpha, window).matrix();
        // λ/9: under u = 3v the symbol is 3^α times the one at λ, one scale up with the same digits
        {
            RepWindow scaled(kP, 1, 2, heisenberg_window_scale(k + 2));
            REQUIRE(scaled.scale() == window.scale() + 1);
            auto dilated = symbol_matrix(SymbolKind::Laplacian, RepPoint::heisenberg(lambda / 9, kP), alpha, scaled).matrix();
            CHECK((dilated - std::pow(3.0, alpha) * base).cwiseAbs().maxCoeff() < 1e-12 * base.cwiseAbs().maxCoeff());
        }
        // 4λ: u = 2v permutes the cells
        {
            auto dilated = symbol_matrix(SymbolKind::Laplacian, RepPoint::heisenberg(lambda * 4, kP), alpha, window).matrix();
            std::vector<std::size_t> twice(window.size());
            for (std::size_t c = 0; c < window.size(); ++c)
                twice[c] = window.index({(2 * window.digits(c)[0]) % window.side()});
            double defect = 0.0;
            for (std::size_t a = 0; a < window.size(); ++a)
                for (std::size_t b = 0; b < window.size(); ++b)
                    defect = std::max(defect, std::abs(dilated(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -
                                                       base(static_cast<Eigen::Index>(twice[a]), static_cast<Eigen::Index>(twice[b]))));
            CHECK(defect < 1e-12 * base.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("heat semigroup of a symbol") {
    RepWindow window(kP, 1, 1, 0);
    auto point = RepPoint::heisenberg(Rational(1, 3), kP);
    auto sigma = symbol_matrix(SymbolKind::Laplacian, point, 0.8, window);
    CHECK((heat_semigroup_symbol(sigma, 0.0) - ComplexMatrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK_THROWS_AS(heat_semigroup_symbol(sigma, -1.0), DomainError);
    // diagonal symbol: entrywise exponential
    SymbolMatrix diagonal(point, window, directional_symbol(point, 1, 0.8, window));
    auto e = heat_semigroup_symbol(diagonal, 0.7);
    for (Eigen::Index i = 0; i < 9; ++i)
        CHECK(e(i, i).real() == doctest::Approx(std::exp(-0.7 * diagonal.matrix()(i, i).real())).epsilon(1e-13));
    // classical RK4 for dφ/dt = -σφ up to t = 1
    std::mt19937_64 rng(14);
    ComplexVector phi = random_vector(rng, 9);
    ComplexVector y = phi;
    const int steps = 4000;
    const double h = 1.0 / steps;
    const ComplexMatrix& m = sigma.matrix();
    for (int s = 0; s < steps; ++s) {
        ComplexVector k1 = -m * y;
        ComplexVector k2 = -m * (y + 0.5 * h * k1);
        ComplexVector k3 = -m * (y + 0.5 * h * k2);
        ComplexVector k4 = -m * (y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    CHECK((heat_semigroup_symbol(sigma, 1.0) * phi - y).norm() < 1e-8);
    // semigroup in t
    auto a = heat_semigroup_symbol(sigma, 0.3), b = heat_semigroup_symbol(sigma, 0.45);
    CHECK((a * b - heat_semigroup_symbol(sigma, 0.75)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("group Fourier transform") {
    auto h1 = GroupDescriptor::heisenberg(kP, 1);
    // indicator of G_0: the central integral kills |λ| > 1
    auto ball = constant_function(CosetWindow(h1, 0, 0), 1.0);
    for (int k = -2; k <= 2; ++k) {
        RepWindow window(kP, 1, 2, heisenberg_window_scale(k));
        auto hat = fourier_group(ball, RepPoint::heisenberg(rational_power(kP, -k) * 2, kP), window);
        if (k > 0) CHECK(hat.norm() == 0.0);
        // on |λ| <= 1 it is the projection onto 𝟙_{‖u‖ <= |λ|^{-1}}, scaled by |G_0| = 1
        else CHECK(hat.squaredNorm() == doctest::Approx(std::pow(kP, -k)).epsilon(1e-12));
    }
    std::mt19937_64 rng(15);
    CosetWindow cells(h1, 0, 1);
    RepWindow window(kP, 1, 2, 1);
    // finite rank: the range sits in functions on ‖u‖ <= p^{l-k} constant on p^l Z_p
    for (int trial = 0; trial < 3; ++trial) {
        TestFunction f(cells);
        std::normal_distribution<double> g;
        for (auto& v : f.values()) v = Complex(g(rng), g(rng));
        auto hat = fourier_group(f, RepPoint::heisenberg(Rational(1, 3), kP), window);
        Eigen::JacobiSVD<ComplexMatrix> svd(hat);
        int rank = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
        CHECK(rank <= 3);
        CHECK(rank >= 1);
    }
    // vanishing central fibre means: f̂(λ) = 0 for |λ| <= 1
    for (int trial = 0; trial < 3; ++trial) {
        auto f = central_mean_zero(rng, cells);
        for (int k = -3; k <= 2; ++k) {
            RepWindow w(kP, 1, 2, heisenberg_window_scale(k));
            const double size = fourier_group(f, RepPoint::heisenberg(rational_power(kP, -k), kP), w).norm();
            if (k <= 0) CHECK(size < 1e-12);
            else CHECK(size > 1e-3);
        }
    }
    // a mean-zero function of x alone is not enough: f̂(λ) survives at every small |λ|
    TestFunction x_only(cells);
    for (std::size_t c = 0; c < cells.size(); ++c) x_only[c] = cells.digits(c)[0] % 3 == 0 ? 2.0 : -1.0;
    CHECK(std::abs(integrate(x_only)) < 1e-14);
    for (int k = -3; k <= 0; ++k) {
        RepWindow w(kP, 1, 2, heisenberg_window_scale(k));
        CHECK(fourier_group(x_only, RepPoint::heisenberg(rational_power(kP, -k), kP), w).norm() > 0.1);
    }
}

TEST_CASE("Plancherel formula") {
    std::mt19937_64 rng(16);
    CosetWindow cells(GroupDescriptor::heisenberg(kP, 1), 0, 1);
    for (int trial = 0; trial < 3; ++trial) {
        auto f = central_mean_zero(rng, cells);
        const double energy = inner_product(f, f).real();
        CHECK(energy / plancherel_integral(f, PlancherelGrid::symmetric(3, 2)) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("Heisenberg heat kernel") {
    auto h1 = GroupDescriptor::heisenberg(kP, 1);
    const double alpha = 2.0;
    const auto grid = PlancherelGrid::symmetric(2, 1);
    HeisenbergSpectrum spectrum(kP, 1, alpha, grid);
    auto heat = spectrum.heat(1.0);
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = heisenberg_element(random_rational(rng, -1, 3), random_rational(rng, -1, 3), random_rational(rng, -2, 4));
        auto a = heat(g), b = heat(inverse(g));
        CHECK(std::abs(a.value - std::conj(b.value)) < 1e-12);
    }
    // h(|γ|^α t, D_γ g) = |γ|^{-4} h(t, g) with the λ-grid carried along
    for (const Rational& gamma : {Rational(3), Rational(2), Rational(1, 3)}) {
        const int v = valuation(gamma, kP);
        const double size = std::pow(kP, -v);
        for (int trial = 0; trial < 5; ++trial) {
            auto g = heisenberg_element(random_rational(rng, 0, 2), random_rational(rng, 0, 2), random_rational(rng, -1, 3));
            const double t = 0.7;
            auto lhs = heisenberg_heat_kernel(std::pow(size, alpha) * t, dilate(gamma, g), alpha, grid).value;
            auto rhs = std::pow(size, -4) * heisenberg_heat_kernel(t, g, alpha, grid.dilated(v)).value;
            CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(rhs));
        }
    }
    // t^{Q/α} h(t, e) stays within a factor 10
    double low = INFINITY, high = 0.0;
    for (int i = -2; i <= 2; ++i) {
        const double t = std::pow(kP, i);
        const double scaled = std::pow(t, 4 / alpha) * heisenberg_heat_kernel(t, GroupElement::identity(h1), alpha).value.real();
        low = std::min(low, scaled);
        high = std::max(high, scaled);
    }
    CHECK(low > 0.0);
    CHECK(high / low < 10.0);
    CHECK_THROWS_AS(spectrum.heat(0.0), DomainError);
}

TEST_CASE("heat semigroup in space") {
    // the truncated kernel vanishes off G_{-1} for M = K = 1, so the midpoint sum on G_1 cells
    // of (h_t * h_s)(e) = ∫ h_t(g) h_s(g^{-1}) dg is the whole convolution
    auto h1 = GroupDescriptor::heisenberg(kP, 1);
    HeisenbergSpectrum spectrum(kP, 1, 2.0, PlancherelGrid::symmetric(1, 1));
    auto ht = spectrum.heat(1.0), hs = spectrum.heat(0.5), sum = spectrum.heat(1.5);
    CosetWindow cells(h1, -1, 1);
    Complex total = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto g = cells.representative(c);
        total += cells.cell_weight() * ht(g).value * hs(inverse(g)).value;
    }
    const Complex expected = sum(GroupElement::identity(h1)).value;
    CHECK(std::abs(total - expected) < 1e-3 * std::abs(expected));
}

TEST_CASE("truncation diagnostics shrink") {
    auto e = GroupElement::identity(GroupDescriptor::heisenberg(kP, 1));
    auto g = heisenberg_element(Rational(1, 3), Rational(1), Rational(1, 9));
    for (const auto& point : {e, g}) {
        double last = INFINITY;
        for (int shells = 1; shells <= 4; ++shells) {
            const double r = heisenberg_heat_kernel(1.0, point, 2.0, PlancherelGrid::symmetric(shells, 2)).remainder;
            CHECK(r < last);
            last = r;
        }
        const double k1 = heisenberg_heat_kernel(1.0, point, 2.0, PlancherelGrid::symmetric(3, 1)).remainder;
        const double k2 = heisenberg_heat_kernel(1.0, point, 2.0, PlancherelGrid::symmetric(3, 2)).remainder;
        CHECK(k2 < k1);
    }
}

TEST_CASE("fundamental solution pairing") {
    std::mt19937_64 rng(18);
    CosetWindow cells(GroupDescriptor::heisenberg(kP, 1), 0, 1);
    const auto grid = PlancherelGrid::symmetric(3, 2);
    for (int trial = 0; trial < 3; ++trial) {
        auto f = project_mean_zero(central_mean_zero(rng, cells) + constant_function(cells, 0.0));
        auto symbol_route = formal_fundamental_solution_pair(f, SymbolKind::Laplacian, 2.0, grid);
        auto heat_route = heat_route_pair(f, 2.0, grid);
        CHECK(std::abs(symbol_route - heat_route) < 1e-6 * std::abs(symbol_route));
        auto sub = formal_fundamental_solution_pair(f, SymbolKind::SubLaplacian, 2.0, grid);
        CHECK(std::isfinite(std::abs(sub)));
    }
    // Fourier inversion at the identity: the identity field paired with f returns f(e)
    auto f = central_mean_zero(rng, cells);
    auto inversion = HeisenbergSpectrum(kP, 1, 2.0, grid).field([](double) { return 1.0; }).pair(f);
    CHECK(std::abs(inversion - f[0]) < 1e-12);
    // central direction: (∂_Z^α g)^ = |λ|^α ĝ, so E_{∂_Z} paired with ∂_Z^α g returns g(e)
    auto image = directional_vt_apply(embed(f, -1, 1), 2, 1.3).values;
    for (int k = 1; k <= 2; ++k) {
        RepWindow window(kP, 1, 2, heisenberg_window_scale(k));
        auto point = RepPoint::heisenberg(rational_power(kP, -k) * 2, kP);
        auto lhs = fourier_group(image, point, window);
        ComplexMatrix rhs = std::pow(kP, k * 1.3) * fourier_group(f, point, window);
        CHECK((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }
    CHECK_THROWS_AS(formal_fundamental_solution_pair(constant_function(cells, 1.0), SymbolKind::Laplacian, 2.0, grid), DomainError);
}

TEST_CASE("Riesz potential on the Heisenberg group") {
    const auto grid = PlancherelGrid::symmetric(2, 1);
    auto g = heisenberg_element(Rational(1), Rational(1, 3), Rational(2));
    // β = α is the fundamental solution
    auto inverse_field = HeisenbergSpectrum(kP, 1, 2.0, grid).inverse();
    CHECK(std::abs(riesz_potential_group(2.0, 2.0, g, grid).value - inverse_field(g).value) < 1e-8 * std::abs(inverse_field(g).value));
    // ℐ_β(D_γ g) = |γ|^{β-Q} ℐ_β(g)
    for (double beta : {1.0, 3.0}) {
        auto lhs = riesz_potential_group(beta, 2.0, dilate(Rational(3), g), grid).value;
        auto rhs = std::pow(3.0, 4 - beta) * riesz_potential_group(beta, 2.0, g, grid.dilated(1)).value;
        CHECK(std::abs(lhs - rhs) < 1e-9 * std::abs(rhs));
    }
    CHECK_THROWS_AS(riesz_potential_group(0.0, 2.0, g, grid), DomainError);
    CHECK_THROWS_AS(riesz_potential_group(4.0, 2.0, g, grid), DomainError);
}

TEST_CASE("Engel symbol and heat kernel") {
    std::mt19937_64 rng(19);
    auto e4 = GroupDescriptor::engel(kP);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> shell(-2, 2);
        const int k = shell(rng);
        auto point = RepPoint::engel(rational_power(kP, -k) * (1 + 3 * random_rational(rng, 0, 2)), random_rational(rng, -3, 5), kP);
        RepWindow window(kP, 1, 2, engel_window_scale(k));
        auto sigma = symbol_matrix(SymbolKind::EngelLaplacian, point, 1.5, window);
        CHECK(sigma.hermitian_defect() < 1e-12 * sigma.matrix().cwiseAbs().maxCoeff());
        CHECK(sigma.eigenvalues()[0] > 0.0);
    }
    EngelHeatKernel heat(kP, 2.0, {-2, 2, 1, 2});
    for (int trial = 0; trial < 10; ++trial) {
        GroupElement g{e4, {random_rational(rng, 0, 2), random_rational(rng, 1, 2), random_rational(rng, 1, 2), random_rational(rng, 0, 3)}};
        auto a = heat(1.0, g), b = heat(1.0, inverse(g));
        CHECK(std::abs(a.value - std::conj(b.value)) < 1e-12);
    }
    auto at_identity = heat(1.0, GroupElement::identity(e4));
    CHECK(at_identity.value.real() > 0.0);
    CHECK(std::abs(at_identity.value.imag()) < 1e-14);
    CHECK_THROWS_AS(heat(0.0, GroupElement::identity(e4)), DomainError);
}
