#include "ultrametric/verify.hpp"

#include "ultrametric/kernels.hpp"
#include "ultrametric/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace ultrametric {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const std::vector<std::string> kSuites = {
    "group-axioms",   "fundamental-compact", "fundamental-lc",  "fundamental-graded",
    "riesz-semigroup", "heat-abelian",       "heat-fundamental", "jump-kernel",
    "plancherel",     "heat-heisenberg",     "heat-engel",      "homogeneity",
    "cross-validation"};

std::string describe(const GroupElement& g) {
    std::string out = "(";
    for (std::size_t k = 0; k < g.coords.size(); ++k) {
        if (k) out += ", ";
        out += g.coords[k].str();
    }
    return out + ")";
}

// Runs one check at a time, records it, and opens CSV files under the output directory.
class Session {
public:
    Session(const SuiteConfig& config, Report& report) : config_(config), report_(report), rng_(config.seed) {}

    const SuiteConfig& config() const { return config_; }
    std::mt19937_64& rng() { return rng_; }

    template <class Measure>
    void check(std::string name, double tolerance, Measure&& measure) {
        const auto start = Clock::now();
        const double error = measure();
        report_.checks.push_back({std::move(name), error, tolerance, error <= tolerance, seconds_since(start)});
    }

    void note(std::string text) { report_.notes.push_back(std::move(text)); }

    void counterexample(const std::string& text) {
        if (!report_.counterexample) report_.counterexample = text;
    }

    std::optional<std::ofstream> csv(const std::string& filename, const std::string& header) {
        if (!config_.out) return std::nullopt;
        std::filesystem::create_directories(*config_.out);
        auto path = *config_.out / filename;
        std::ofstream out(path);
        if (!out) throw DomainError("cannot write " + path.string());
        out << std::setprecision(17) << header << '\n';
        report_.written.push_back(path);
        return out;
    }

    double tolerance(double fallback) const { return config_.tolerance.value_or(fallback); }
    int trials(int fallback) const { return config_.trials.value_or(fallback); }
    std::vector<double> alphas(std::vector<double> fallback) const {
        return config_.alpha.empty() ? fallback : config_.alpha;
    }
    int prime(int fallback) const { return config_.prime.value_or(fallback); }

private:
    const SuiteConfig& config_;
    Report& report_;
    std::mt19937_64 rng_;
};

TestFunction random_function(std::mt19937_64& rng, const CosetWindow& window) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TestFunction f(window);
    for (auto& v : f.values()) v = Complex(u(rng), u(rng));
    return f;
}

Rational random_coordinate(std::mt19937_64& rng, int p) {
    std::uniform_int_distribution<int> num(-200, 200), unit(1, 40), shift(-3, 3);
    int u = unit(rng);
    while (u % p == 0) u = unit(rng);
    return Rational(num(rng), u) * rational_power(p, shift(rng));
}

// p^valuation times a random integer with `digits` base-p digits
Rational random_digits(std::mt19937_64& rng, int p, int valuation, int digits) {
    std::int64_t bound = 1;
    for (int i = 0; i < digits; ++i) bound *= p;
    std::uniform_int_distribution<std::int64_t> n(0, bound - 1);
    return rational_power(p, valuation) * Rational(n(rng));
}

Rational random_unit(std::mt19937_64& rng, int p, int digits) {
    Rational u = random_digits(rng, p, 0, digits);
    while (valuation(u, p) != 0) u = random_digits(rng, p, 0, digits);
    return u;
}

std::string alpha_label(double alpha) {
    std::ostringstream s;
    s << alpha;
    return s.str();
}

// Shell of |x|_G for a cell representative; the identity cell is put at its own radius.
int cell_shell(const CosetWindow& window, std::size_t cell) {
    auto n = level(window.representative(cell));
    return n ? -*n : -window.inner();
}

void write_reconstruction(Session& session, const std::string& filename, const RadialProfile& kernel,
                          const CosetWindow& window, const std::vector<double>& cell_error) {
    auto out = session.csv(filename, "shell,E_alpha,reconstruction_error");
    if (!out) return;
    std::map<int, double> worst;
    for (std::size_t c = 0; c < window.size(); ++c) {
        double& w = worst[cell_shell(window, c)];
        w = std::max(w, cell_error[c]);
    }
    for (int m = kernel.m_min(); m <= kernel.m_max(); ++m) {
        *out << m << ',' << kernel(m) << ',';
        if (auto it = worst.find(m); it != worst.end()) *out << it->second;
        *out << '\n';
    }
}

// ---- 1 -------------------------------------------------------------------------------------

void group_axioms(Session& s) {
    std::vector<GroupDescriptor> groups;
    if (s.config().group) {
        const auto& name = *s.config().group;
        const int p = s.prime(name == "engel" ? 5 : 3);
        groups.push_back(parse_group(name, p, s.config().dimension.value_or(name == "qp" ? 3 : 1)));
    } else {
        groups = {GroupDescriptor::abelian(3, 3), GroupDescriptor::heisenberg(3, 1), GroupDescriptor::engel(5)};
    }
    const int trials = s.trials(1000);
    for (const auto& group : groups) {
        auto e = GroupElement::identity(group);
        int associativity = 0, identity = 0, inverses = 0;
        const auto start = Clock::now();
        for (int trial = 0; trial < trials; ++trial) {
            GroupElement a = e, b = e, c = e;
            for (auto* g : {&a, &b, &c})
                for (auto& x : g->coords) x = random_coordinate(s.rng(), group.prime());
            const bool assoc = group_law(group_law(a, b), c) == group_law(a, group_law(b, c));
            const bool ident = group_law(a, e) == a && group_law(e, a) == a;
            const bool inv = group_law(a, inverse(a)) == e && group_law(inverse(a), a) == e;
            associativity += !assoc;
            identity += !ident;
            inverses += !inv;
            if (!(assoc && ident && inv))
                s.counterexample(group.name() + " trial " + std::to_string(trial) + ": a=" + describe(a) +
                                 " b=" + describe(b) + " c=" + describe(c));
        }
        const double elapsed = seconds_since(start);
        const std::string label = group.name() + "(Q_" + std::to_string(group.prime()) + "), rank " +
                                  std::to_string(group.rank()) + ": ";
        s.check(label + "associativity failures", 0.0, [&] { return double(associativity); });
        s.check(label + "identity failures", 0.0, [&] { return double(identity); });
        s.check(label + "inverse failures", 0.0, [&] { return double(inverses); });
        s.check(label + "seconds", 5.0, [&] { return elapsed; });
    }
}

// ---- 2 -------------------------------------------------------------------------------------

void fundamental_compact(Session& s) {
    const int p = s.prime(3);
    const int level = s.config().level.value_or(3);
    auto group = GroupDescriptor::abelian(p, 1);
    CosetWindow window(group, 0, level);
    const auto basis = basis_mean_zero(window);
    for (double alpha : s.alphas({0.5, 2.3, 1.0})) {
        auto kernel = fundamental_solution_profile(alpha, Setting::Compact, group);
        std::vector<double> cell_error(window.size(), 0.0);
        s.check("alpha=" + alpha_label(alpha) + ": max |D^a(f*E) - f| over the mean-zero basis", s.tolerance(1e-8), [&] {
            double worst = 0.0;
            for (const auto& f : basis) {
                auto image = vt_compact_apply(convolve_radial(f, kernel).values, alpha, 0);
                for (std::size_t c = 0; c < window.size(); ++c) {
                    const double e = std::abs(image[c] - f[c]);
                    cell_error[c] = std::max(cell_error[c], e);
                    worst = std::max(worst, e);
                }
            }
            return worst;
        });
        write_reconstruction(s, "fundamental-compact-alpha" + alpha_label(alpha) + ".csv", kernel, window, cell_error);
    }
}

// ---- 3 -------------------------------------------------------------------------------------

void fundamental_lc(Session& s) {
    const std::vector<int> primes = s.config().prime ? std::vector<int>{*s.config().prime} : std::vector<int>{2, 3};
    const int level = s.config().level.value_or(2);
    const double tol = s.tolerance(1e-8);
    for (int p : primes) {
        auto group = GroupDescriptor::abelian(p, 1);
        CosetWindow window(group, 0, level);
        for (double alpha : s.alphas({0.7})) {
            const std::string label = "Q_" + std::to_string(p) + " alpha=" + alpha_label(alpha) + ": ";
            auto kernel = fundamental_solution_profile(alpha, Setting::LocallyCompactVilenkin, group);
            std::vector<double> cell_error(window.size(), 0.0);
            s.check(label + "max |f * D^a E - f| on mean-zero f", tol, [&] {
                double worst = 0.0;
                for (int trial = 0; trial < s.trials(4); ++trial) {
                    auto f = project_mean_zero(random_function(s.rng(), window));
                    auto image = convolve_radial(vt_apply(f, alpha), kernel);
                    double e = 0.0;
                    for (std::size_t c = 0; c < window.size(); ++c) {
                        cell_error[c] = std::max(cell_error[c], std::abs(image[c] - f[c]));
                        e = std::max(e, cell_error[c]);
                    }
                    if (e > tol) s.counterexample(label + "mean-zero trial " + std::to_string(trial));
                    worst = std::max(worst, e);
                }
                return worst;
            });
            write_reconstruction(s, "fundamental-lc-p" + std::to_string(p) + "-alpha" + alpha_label(alpha) + ".csv",
                                 kernel, window, cell_error);

            const std::vector<TestFunction> general = {constant_function(CosetWindow(group, 0, 0), 1.0),
                                                       random_function(s.rng(), window)};
            s.check(label + "max |f * D^a E - f| with the operator tail, non-mean-zero f", tol, [&] {
                double worst = 0.0;
                for (const auto& h : general)
                    worst = std::max(worst, max_abs_difference(convolve_radial(vt_apply(h, alpha), kernel),
                                                               embed(h, 0, h.window().inner())));
                return worst;
            });
            const double kappa = p;
            const double k_alpha = (1 - std::pow(kappa, -alpha)) / (1 - std::pow(kappa, alpha - 1));
            s.check(label + "residual vs closed form K C kappa^(l-1) int f", tol, [&] {
                double worst = 0.0;
                for (const auto& h : general)
                    for (int l : {0, -1, -2}) {
                        auto split = vt_split_decompose(h, alpha, l);
                        Complex closed = k_alpha * vt_constant(kappa, alpha, 1) * std::pow(kappa, l - 1) * integrate(h);
                        worst = std::max(worst, std::abs(split_residual(split, alpha, kernel) - closed));
                    }
                return worst;
            });
            s.check(label + "reconstruction error equals the residual", tol, [&] {
                double worst = 0.0;
                for (const auto& h : general)
                    for (int l : {0, -1, -2}) {
                        auto split = vt_split_decompose(h, alpha, l);
                        auto partial = convolve_radial(split.main, kernel);
                        Complex residual = split_residual(split, alpha, kernel);
                        for (std::size_t c = 0; c < h.window().size(); ++c)
                            worst = std::max(worst, std::abs((h[c] - partial.at(h.window().representative(c))) - residual));
                    }
                return worst;
            });
        }
    }
}

// ---- 4 -------------------------------------------------------------------------------------

void fundamental_graded(Session& s) {
    auto group = GroupDescriptor::heisenberg(s.prime(3), s.config().dimension.value_or(1));
    const int depth = s.config().level.value_or(2);
    CosetWindow window(group, 0, depth);
    for (double alpha : s.alphas({1.2, 2.0})) {
        const std::string label = "alpha=" + alpha_label(alpha) + ": ";
        auto kernel = fundamental_solution_profile(alpha, Setting::Graded, group);
        std::vector<double> cell_error(window.size(), 0.0);
        s.check(label + "max |f * D^a E - f| on mean-zero f", s.tolerance(1e-6), [&] {
            double worst = 0.0;
            for (int trial = 0; trial < s.trials(1); ++trial) {
                auto f = project_mean_zero(random_function(s.rng(), window));
                auto image = convolve_radial(vt_apply(f, alpha), kernel);
                for (std::size_t c = 0; c < window.size(); ++c) {
                    cell_error[c] = std::max(cell_error[c], std::abs(image[c] - f[c]));
                    worst = std::max(worst, cell_error[c]);
                }
            }
            return worst;
        });
        write_reconstruction(s, "fundamental-graded-alpha" + alpha_label(alpha) + ".csv", kernel, window, cell_error);
        s.check(label + "indicator of G_0 with the operator tail", s.tolerance(1e-6), [&] {
            auto one = constant_function(CosetWindow(group, 0, 0), 1.0);
            auto wide = vt_apply(one, alpha, CosetWindow(group, -1, 0));
            return max_abs_difference(convolve_radial(wide, kernel), embed(one, -1, 0));
        });
    }
}

// ---- 5 -------------------------------------------------------------------------------------

void riesz_semigroup(Session& s) {
    auto group = GroupDescriptor::abelian(s.prime(3), 1);
    CosetWindow window(group, 0, s.config().level.value_or(3));
    const auto basis = basis_mean_zero(window);
    const auto orders = s.alphas({0.3, 0.6, 1.7});
    for (double a : orders) {
        for (double b : orders) {
            auto kernel = riesz_kernel_profile(b, group);
            s.check("s=" + alpha_label(a) + " t=" + alpha_label(b) + ": max |<r_s, f*r_t> - <r_(s+t), f>|",
                    s.tolerance(1e-9), [&] {
                        double worst = 0.0;
                        for (const auto& f : basis)
                            worst = std::max(worst, std::abs(riesz_pair(a, convolve_radial(f, kernel).values) -
                                                             riesz_pair(a + b, f)));
                        return worst;
                    });
        }
    }
    for (double order : orders) {
        std::ostringstream line;
        line << "constant function: <r_s, 1> = " << riesz_pair(order, constant_function(window, 1.0)).real()
             << " at s = " << order << ", against <triv>^s = 1";
        s.note(line.str());
    }
    s.check("|<r_1e-6, f> - f(e)|", 1e-4, [&] {
        auto f = random_function(s.rng(), window);
        return std::abs(riesz_pair(1e-6, f) - f[0]);
    });
}

// ---- 6 -------------------------------------------------------------------------------------

// S_k(x) as a character sum over ξ = p^{-k} n on cosets fine enough for x; empty if too big.
std::optional<Complex> brute_sphere_integral(int p, int d, int m, int k) {
    std::vector<Rational> x(static_cast<std::size_t>(d), 0);
    x[0] = rational_power(p, m) * (p - 1);
    if (d == 2) x[1] = rational_power(p, m + 1);
    const int level = std::max(-m, 1 - k);
    const int span = k + level;
    if (span * d > 4) return std::nullopt;
    const auto count = static_cast<std::int64_t>(std::llround(std::pow(p, span)));
    const std::int64_t total = d == 1 ? count : count * count;
    Complex sum{};
    for (std::int64_t idx = 0; idx < total; ++idx) {
        std::vector<std::int64_t> n = {idx % count, idx / count};
        int min_val = kInfiniteValuation;
        Rational dot = 0;
        for (int i = 0; i < d; ++i) {
            Rational xi = Rational(n[static_cast<std::size_t>(i)]) * rational_power(p, -k);
            min_val = std::min(min_val, valuation(xi, p));
            dot += x[static_cast<std::size_t>(i)] * xi;
        }
        if (min_val != -k) continue;
        sum += std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(fractional_part(dot, p)));
    }
    return sum * std::pow(p, -level * d);
}

void heat_abelian(Session& s) {
    const int p = s.prime(3);
    const std::vector<int> dims = s.config().dimension ? std::vector<int>{*s.config().dimension} : std::vector<int>{1, 2};
    s.check("max |S_k closed form - character sum|, level <= 4", s.tolerance(1e-10), [&] {
        double worst = 0.0;
        for (int d : dims)
            for (int m = -2; m <= 2; ++m)
                for (int k = -2; k <= 2; ++k)
                    if (auto brute = brute_sphere_integral(p, d, m, k))
                        worst = std::max(worst, std::abs(*brute - character_sphere_integral(NormExponent::power(-m), p, d, k)));
        return worst;
    });
    for (int d : dims) {
        for (double alpha : s.alphas({0.5, 1.0, 2.0})) {
            const std::string label = "d=" + std::to_string(d) + " alpha=" + alpha_label(alpha) + ": ";
            auto out = s.csv("heat-abelian-d" + std::to_string(d) + "-alpha" + alpha_label(alpha) + ".csv",
                             "t,shell,value,estimate_ratio");
            double mass = 0.0, low = INFINITY, high = 0.0;
            for (int i = -4; i <= 4; ++i) {
                const double t = std::pow(p, i);
                auto profile = heat_profile_abelian(t, alpha, p, d);
                mass = std::max(mass, std::abs(profile.integral() - 1.0));
                for (int m = -4; m <= 4; ++m) {
                    const double ratio = profile(m) / heat_estimate(t, alpha, d, std::pow(p, m));
                    low = std::min(low, ratio);
                    high = std::max(high, ratio);
                    if (out) *out << t << ',' << m << ',' << profile(m) << ',' << ratio << '\n';
                }
            }
            s.check(label + "max |int h(t) - 1|", s.tolerance(1e-10), [&] { return mass; });
            s.check(label + "estimate ratio spread c2/c1", 100.0, [&] { return low > 0 ? high / low : INFINITY; });
            s.check(label + "semigroup max |h_t*h_s - h_(t+s)| / h_(t+s)(0)", 1e-6, [&] {
                double worst = 0.0;
                for (auto [t, u] : {std::pair{1.0, 1.0}, std::pair{1.0 / 9, 3.0}, std::pair{0.5, 2.0}}) {
                    auto a = heat_profile_abelian(t, alpha, p, d), b = heat_profile_abelian(u, alpha, p, d);
                    auto c = heat_profile_abelian(t + u, alpha, p, d);
                    auto conv = convolve_profiles(a, b, -6, 6);
                    for (int m = -6; m <= 6; ++m)
                        worst = std::max(worst, std::abs(conv[static_cast<std::size_t>(m + 6)] - c(m)) / *c.identity_value);
                }
                return worst;
            });
        }
    }
}

// ---- 7 -------------------------------------------------------------------------------------

void heat_fundamental(Session& s) {
    const int p = s.prime(3);
    const int d = s.config().dimension.value_or(1);
    for (double alpha : s.alphas({0.5})) {
        const std::string label = "alpha=" + alpha_label(alpha) + ": ";
        s.check(label + "max relative |int h dt - E_alpha| over shells", s.tolerance(1e-6), [&] {
            auto via_heat = fundamental_solution_via_heat(alpha, p, d);
            auto closed = fundamental_solution_profile(alpha, Setting::Graded, GroupDescriptor::abelian(p, d));
            double worst = 0.0;
            for (int m = via_heat.m_min(); m <= via_heat.m_max(); ++m)
                worst = std::max(worst, std::abs(via_heat(m) / closed(m) - 1.0));
            return worst;
        });
        const std::vector<double> betas = s.config().beta ? std::vector<double>{*s.config().beta} : std::vector<double>{0.2, 0.7};
        for (double beta : betas) {
            s.check(label + "beta=" + alpha_label(beta) + ": max relative |I(m+1)/I(m) - p^(beta-d)|", s.tolerance(1e-6), [&] {
                auto potential = riesz_potential(beta, alpha, p, d);
                double worst = 0.0;
                for (int m = potential.m_min(); m < potential.m_max(); ++m)
                    worst = std::max(worst, std::abs(potential(m + 1) / potential(m) / std::pow(p, beta - d) - 1.0));
                return worst;
            });
        }
    }
}

// ---- 8 -------------------------------------------------------------------------------------

void jump_kernel_suite(Session& s) {
    const int p = s.prime(3);
    auto group = parse_group(s.config().group.value_or("heisenberg"), p, s.config().dimension.value_or(1));
    const int q = group.prime();
    std::uniform_real_distribution<double> order(0.1, 3.0);
    s.check("max relative |J closed form - truncated series|", s.tolerance(1e-10), [&] {
        double worst = 0.0;
        for (int trial = 0; trial < s.trials(50); ++trial) {
            GroupElement x = GroupElement::identity(group), y = x;
            for (auto* g : {&x, &y})
                for (auto& c : g->coords) c = random_coordinate(s.rng(), q);
            if (x == y) continue;
            const double alpha = order(s.rng());
            const int k = quasi_norm(group_law(inverse(y), x)).exponent;
            const double closed = jump_kernel(x, y, alpha);
            const double series = jump_kernel_series(q, group.homogeneous_dimension(), alpha, k, 400);
            const double e = std::abs(closed - series) / std::abs(closed);
            if (!(e <= s.tolerance(1e-10)))
                s.counterexample("x=" + describe(x) + " y=" + describe(y) + " alpha=" + alpha_label(alpha));
            worst = std::max(worst, e);
        }
        return worst;
    });
}

// ---- 9 -------------------------------------------------------------------------------------

// C ∫_{Q_p} (e^{2πi{a t}} - 1) |t|^{-alpha-1} dt: spheres |t| <= |a|^{-1} contribute zero,
// spheres |t| >= p^2 |a|^{-1} contribute -measure, and the sphere in between is a character sum.
double vt_character_quadrature(const Rational& a, double alpha, int p) {
    const int e = -valuation(a, p);
    const int m = 1 - e;
    std::int64_t count = 1;
    for (int i = 0; i < e + m; ++i) count *= p;
    double sphere = 0.0;
    for (std::int64_t n = 1; n < count; ++n) {
        if (n % p == 0) continue;
        const Rational t = rational_power(p, -m) * Rational(n);
        sphere += std::cos(2 * std::numbers::pi * fractional_part(Rational(a * t), p).convert_to<double>()) - 1.0;
    }
    sphere *= std::pow(p, m) / static_cast<double>(count);
    double total = sphere * std::pow(p, -m * (alpha + 1));
    for (int j = m + 1; j < m + 2000; ++j) {
        const double term = (1.0 - 1.0 / p) * std::pow(p, -j * alpha);
        total -= term;
        if (term < 1e-19 * std::abs(total)) break;
    }
    return vt_constant(p, alpha, 1.0) * total;
}

TestFunction central_mean_zero(std::mt19937_64& rng, const CosetWindow& window) {
    auto f = random_function(rng, window);
    std::map<std::vector<std::int64_t>, Complex> mean;
    const std::size_t plane = static_cast<std::size_t>(2 * window.group().rank());
    auto key = [&](std::size_t c) {
        auto d = window.digits(c);
        d.resize(plane);
        return d;
    };
    const double fibre = static_cast<double>(window.radix().back());
    for (std::size_t c = 0; c < window.size(); ++c) mean[key(c)] += f[c] / fibre;
    for (std::size_t c = 0; c < window.size(); ++c) f[c] -= mean[key(c)];
    return f;
}

void plancherel(Session& s) {
    const int p = s.prime(3);
    const int d = s.config().dimension.value_or(1);
    auto group = GroupDescriptor::heisenberg(p, d);
    const int K = s.config().trunc_k.value_or(d == 1 ? 2 : 1);
    RepWindow window(p, d, K, 0);
    const double tol = s.tolerance(1e-12);
    auto sample = [&](int xv, int yv, int zv) {
        GroupElement g = GroupElement::identity(group);
        for (int j = 0; j < d; ++j) {
            g.coords[static_cast<std::size_t>(j)] = random_digits(s.rng(), p, xv, 3);
            g.coords[static_cast<std::size_t>(d + j)] = random_digits(s.rng(), p, yv, 3);
        }
        g.coords.back() = random_digits(s.rng(), p, zv, 6);
        return g;
    };
    double unitarity = 0.0;
    s.check("Schrodinger homomorphism defect", tol, [&] {
        double homomorphism = 0.0;
        for (int trial = 0; trial < s.trials(100); ++trial) {
            std::uniform_int_distribution<int> shell(-1, 1);
            auto point = RepPoint::heisenberg(rational_power(p, -shell(s.rng())) * random_unit(s.rng(), p, 2), p);
            auto a = sample(1 - K, 0, -3), b = sample(1 - K, 0, -3);
            const double defect = (schrodinger_matrix(point, a, window) * schrodinger_matrix(point, b, window) -
                                   schrodinger_matrix(point, group_law(a, b), window))
                                      .cwiseAbs()
                                      .maxCoeff();
            std::normal_distribution<double> gauss;
            ComplexVector phi(static_cast<Eigen::Index>(window.size()));
            for (auto& v : phi) v = Complex(gauss(s.rng()), gauss(s.rng()));
            const double norm_defect = std::abs(schrodinger_apply(point, a, window, phi).norm() - phi.norm()) / phi.norm();
            if (!(defect <= tol && norm_defect <= tol))
                s.counterexample("lambda=" + point.lambda.str() + " a=" + describe(a) + " b=" + describe(b));
            homomorphism = std::max(homomorphism, defect);
            unitarity = std::max(unitarity, norm_defect);
        }
        return homomorphism;
    });
    s.check("Schrodinger unitarity defect, same samples", tol, [&] { return unitarity; });

    RepWindow coarse(p, 1, 2, 1);
    for (double alpha : s.alphas({0.5, 1.3, 2.0})) {
        s.check("alpha=" + alpha_label(alpha) + ": max relative |symbol - quadrature| for Z and Y", 1e-8, [&] {
            double worst = 0.0;
            for (const Rational& lambda : {Rational(2, 3), Rational(9), Rational(1, 27), Rational(5)}) {
                auto point = RepPoint::heisenberg(lambda, p);
                auto z = directional_symbol(point, 2, alpha, coarse);
                auto y = directional_symbol(point, 1, alpha, coarse);
                const double central = vt_character_quadrature(lambda, alpha, p);
                worst = std::max(worst, std::abs(z(0, 0).real() / central - 1.0));
                for (std::size_t c = 1; c < coarse.size(); ++c) {
                    const double q = vt_character_quadrature(lambda * coarse.representative(c)[0], alpha, p);
                    const auto i = static_cast<Eigen::Index>(c);
                    worst = std::max(worst, std::abs(y(i, i).real() / q - 1.0));
                }
            }
            return worst;
        });
    }

    const auto grid = PlancherelGrid::symmetric(s.config().trunc_m.value_or(3), 2);
    CosetWindow cells(group, 0, 1);
    std::vector<double> constants;
    for (int trial = 0; trial < 3; ++trial) {
        auto f = central_mean_zero(s.rng(), cells);
        constants.push_back(inner_product(f, f).real() / plancherel_integral(f, grid));
    }
    const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
    s.note("fitted Plancherel constant " + alpha_label(constants[0]) + " with |lambda|^d dlambda, |Z_p^x| = 1 - 1/p");
    s.check("Plancherel constant spread across f", 1e-3, [&] { return (*hi - *lo) / std::abs(*lo); });

    if (auto out = s.csv("spectrum.csv", "lambda_valuation,class,eig_index,eigenvalue")) {
        const Rational nonresidue(smallest_nonresidue(p));
        const double alpha = s.alphas({2.0}).front();
        for (int k = grid.first_shell; k <= grid.last_shell; ++k) {
            RepWindow w(p, d, grid.truncation, heisenberg_window_scale(k));
            for (const Rational& unit : {Rational(1), nonresidue}) {
                const Rational lambda = rational_power(p, -k) * unit;
                auto sigma = symbol_matrix(SymbolKind::Laplacian, RepPoint::heisenberg(lambda, p), alpha, w);
                const int cls = square_class(lambda, p).class_index;
                for (Eigen::Index i = 0; i < sigma.eigenvalues().size(); ++i)
                    *out << -k << ',' << cls << ',' << i << ',' << sigma.eigenvalues()[i] << '\n';
            }
        }
    }
}

// ---- 10 ------------------------------------------------------------------------------------

struct SemigroupSample {
    Complex convolution;  // (h_t * h_s)(e)
    Complex direct;       // h_{t+s}(e) at the same truncation
};

// Midpoint sum over G_1 cells of a window holding the truncated kernel's support.
SemigroupSample heisenberg_semigroup(int p, double alpha, const PlancherelGrid& grid, double t, double u) {
    auto group = GroupDescriptor::heisenberg(p, 1);
    HeisenbergSpectrum spectrum(p, 1, alpha, grid);
    auto ht = spectrum.heat(t), hs = spectrum.heat(u);
    const int reach = 1 - grid.first_shell;  // central support radius exponent
    CosetWindow cells(group, -((reach + 1) / 2), 1);
    Complex total = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto g = cells.representative(c);
        total += ht(g).value * hs(inverse(g)).value;
    }
    return {total * cells.cell_weight(), spectrum.heat(t + u)(GroupElement::identity(group)).value};
}

void heat_heisenberg(Session& s) {
    const int p = s.prime(3);
    const int M = s.config().trunc_m.value_or(3);
    const int K = s.config().trunc_k.value_or(2);
    const double alpha = s.alphas({2.0}).front();
    auto group = GroupDescriptor::heisenberg(p, 1);
    const auto grid = PlancherelGrid::symmetric(M, K);
    const auto e = GroupElement::identity(group);
    HeisenbergSpectrum spectrum(p, 1, alpha, grid);
    auto heat = spectrum.heat(1.0);
    auto element = [&](int xv, int zv) {
        return GroupElement{group, {random_digits(s.rng(), p, xv, 3), random_digits(s.rng(), p, xv, 3),
                                    random_digits(s.rng(), p, zv, 5)}};
    };

    s.check("conjugate symmetry max |h(g) - conj h(g^-1)|", s.tolerance(1e-10), [&] {
        double worst = 0.0;
        for (int trial = 0; trial < s.trials(20); ++trial) {
            auto g = element(-1, -2);
            const double defect = std::abs(heat(g).value - std::conj(heat(inverse(g)).value));
            if (!(defect <= s.tolerance(1e-10))) s.counterexample("conjugate symmetry at g=" + describe(g));
            worst = std::max(worst, defect);
        }
        return worst;
    });
    s.check("grid-mapped homogeneity max relative defect", 1e-6, [&] {
        double worst = 0.0;
        for (const Rational& gamma : {Rational(3), Rational(2), Rational(1, 3)}) {
            const int v = valuation(gamma, p);
            const double size = std::pow(p, -v);
            for (int trial = 0; trial < 3; ++trial) {
                auto g = element(0, -1);
                const double t = 0.7;
                auto lhs = heisenberg_heat_kernel(std::pow(size, alpha) * t, dilate(gamma, g), alpha, grid).value;
                auto rhs = std::pow(size, -4) * heisenberg_heat_kernel(t, g, alpha, grid.dilated(v)).value;
                worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
            }
        }
        return worst;
    });
    s.check("diagonal t^(Q/a) h(t,e) max/min over t = p^-2..p^2", 10.0, [&] {
        double low = INFINITY, high = 0.0;
        for (int i = -2; i <= 2; ++i) {
            const double t = std::pow(p, i);
            const double scaled = std::pow(t, 4 / alpha) * spectrum.heat(t)(e).value.real();
            low = std::min(low, scaled);
            high = std::max(high, scaled);
        }
        return low > 0 ? high / low : INFINITY;
    });
    SemigroupSample sample;
    s.check("semigroup relative defect |h_1*h_1 - h_2| at e", 1e-3, [&] {
        sample = heisenberg_semigroup(p, alpha, grid, 1.0, 1.0);
        return std::abs(sample.convolution - sample.direct) / std::abs(sample.direct);
    });
    // Each truncation is itself a semigroup up to quadrature, so truncation shows up as the
    // distance of h_1*h_1 to h_2 at a finer truncation; one more shell or digit must reduce it.
    s.check("distance of h_1*h_1 to the (M+2, K+1) kernel shrinks from M-1 and from K-1 (count of violations)", 0.0, [&] {
        const Complex reference = heisenberg_heat_kernel(2.0, e, alpha, PlancherelGrid::symmetric(M + 2, K + 1)).value;
        auto distance = [&](const Complex& v) { return std::abs(v - reference) / std::abs(reference); };
        const double at = distance(sample.convolution);
        const double fewer_shells = distance(heisenberg_semigroup(p, alpha, PlancherelGrid::symmetric(M - 1, K), 1.0, 1.0).convolution);
        const double fewer_digits = distance(heisenberg_semigroup(p, alpha, PlancherelGrid::symmetric(M, K - 1), 1.0, 1.0).convolution);
        std::ostringstream line;
        line << "distance to the (M+2, K+1) kernel: " << fewer_shells << " at (M-1, K), " << fewer_digits
             << " at (M, K-1), " << at << " at (M, K)";
        s.note(line.str());
        return double(!(fewer_shells > at) + !(fewer_digits > at));
    });
    s.check("truncation remainder decreases through M-1, M, M+1 and K-1, K, K+1 (count of violations)", 0.0, [&] {
        int violations = 0;
        for (const auto& g : {e, GroupElement{group, {Rational(1, p), Rational(1), Rational(1, p * p)}}}) {
            auto r = [&](int m, int k) { return heisenberg_heat_kernel(1.0, g, alpha, PlancherelGrid::symmetric(m, k)).remainder; };
            const double centre = r(M, K);
            violations += !(r(M - 1, K) > centre) + !(centre > r(M + 1, K));
            violations += !(r(M, K - 1) > centre) + !(centre > r(M, K + 1));
        }
        return double(violations);
    });

    if (auto out = s.csv("heat-heisenberg.csv", "t,x,y,z,re,im,trunc_M,trunc_K")) {
        const std::vector<GroupElement> points = {e, GroupElement{group, {Rational(1, p), 0, 0}},
                                                  GroupElement{group, {0, Rational(1, p), 0}},
                                                  GroupElement{group, {0, 0, Rational(1, p * p)}},
                                                  GroupElement{group, {1, 1, 1}}};
        for (int i = -2; i <= 2; ++i) {
            const double t = std::pow(p, i);
            auto field = spectrum.heat(t);
            for (const auto& g : points) {
                const Complex v = field(g).value;
                *out << t << ',' << g.coords[0] << ',' << g.coords[1] << ',' << g.coords[2] << ',' << v.real() << ','
                     << v.imag() << ',' << M << ',' << K << '\n';
            }
        }
    }
}

// ---- 11 ------------------------------------------------------------------------------------

void heat_engel(Session& s) {
    const int p = s.prime(3);
    auto group = GroupDescriptor::engel(p);
    RepWindow window(p, 1, 2, 0);
    const double tol = s.tolerance(1e-12);
    s.check("Engel representation homomorphism defect", tol, [&] {
        double worst = 0.0;
        for (int trial = 0; trial < s.trials(100); ++trial) {
            auto point = RepPoint::engel(random_unit(s.rng(), p, 3), random_digits(s.rng(), p, -2, 4), p);
            auto sample = [&] {
                return GroupElement{group, {random_digits(s.rng(), p, -1, 3), random_digits(s.rng(), p, 1, 3),
                                            random_digits(s.rng(), p, 0, 3), random_digits(s.rng(), p, -3, 6)}};
            };
            auto a = sample(), b = sample();
            const double defect = (engel_rep_matrix(point, a, window) * engel_rep_matrix(point, b, window) -
                                   engel_rep_matrix(point, group_law(a, b), window))
                                      .cwiseAbs()
                                      .maxCoeff();
            if (!(defect <= tol))
                s.counterexample("lambda=" + point.lambda.str() + " mu=" + point.mu.str() + " a=" + describe(a) +
                                 " b=" + describe(b));
            worst = std::max(worst, defect);
        }
        return worst;
    });
    const double alpha = s.alphas({1.5}).front();
    double ground = INFINITY;
    s.check("Engel symbol relative Hermitian defect, 20 samples", 1e-12, [&] {
        double hermitian = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            std::uniform_int_distribution<int> shell(-2, 2);
            const int k = shell(s.rng());
            auto point = RepPoint::engel(rational_power(p, -k) * random_unit(s.rng(), p, 2), random_digits(s.rng(), p, -3, 5), p);
            auto sigma = symbol_matrix(SymbolKind::EngelLaplacian, point, alpha, RepWindow(p, 1, 2, engel_window_scale(k)));
            hermitian = std::max(hermitian, sigma.hermitian_defect() / sigma.matrix().cwiseAbs().maxCoeff());
            ground = std::min(ground, sigma.eigenvalues()[0]);
        }
        return hermitian;
    });
    s.check("Engel symbol ground eigenvalue <= 0 on the same samples (count)", 0.0, [&] { return double(!(ground > 0.0)); });
    s.check("Engel heat conjugate symmetry at coarse truncation", 1e-8, [&] {
        EngelHeatKernel heat(p, s.alphas({2.0}).front(), {-2, 2, 1, 2});
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            GroupElement g{group, {random_digits(s.rng(), p, 0, 2), random_digits(s.rng(), p, 1, 2),
                                   random_digits(s.rng(), p, 1, 2), random_digits(s.rng(), p, 0, 3)}};
            worst = std::max(worst, std::abs(heat(1.0, g).value - std::conj(heat(1.0, inverse(g)).value)));
        }
        return worst;
    });
    s.check("|G_n/G_(n+1)| - p^7 by coset count, n = -1..1", 0.0, [&] {
        double worst = 0.0;
        for (int n = -1; n <= 1; ++n)
            worst = std::max(worst, std::abs(double(enumerate_cosets(p, group.weights(), n, n + 1).size()) - std::pow(p, 7)));
        return worst;
    });
}

// ---- 12 ------------------------------------------------------------------------------------

void homogeneity(Session& s) {
    const int p = s.prime(3);
    const Rational gamma = Rational(1, p);
    for (const auto& group : {GroupDescriptor::heisenberg(p, 1), GroupDescriptor::engel(p)}) {
        CosetWindow window(group, 0, 1);
        auto f = random_function(s.rng(), window);
        for (double alpha : s.alphas({0.85, 1.6})) {
            for (int k = 0; k < group.dimension(); ++k) {
                s.check(group.name() + " direction " + std::to_string(k) + " alpha=" + alpha_label(alpha) +
                            ": max |d(f o D) - |g|^(a nu) (d f) o D|",
                        s.tolerance(1e-10), [&] {
                            const double factor = std::pow(p, alpha * group.weights()[static_cast<std::size_t>(k)]);
                            auto lhs = directional_vt_apply(compose_dilation(f, gamma), k, alpha).values;
                            auto rhs = compose_dilation(directional_vt_apply(f, k, alpha).values, gamma);
                            rhs *= factor;
                            return max_abs_difference(lhs, rhs);
                        });
            }
        }
    }
}

// ---- 13 ------------------------------------------------------------------------------------

void cross_validation(Session& s) {
    const int p = s.prime(3);
    const double alpha = s.alphas({2.0}).front();
    const auto grid = PlancherelGrid::symmetric(s.config().trunc_m.value_or(3), s.config().trunc_k.value_or(2));
    CosetWindow cells(GroupDescriptor::heisenberg(p, 1), 0, 1);
    std::vector<TestFunction> samples;
    for (int trial = 0; trial < s.trials(3); ++trial) samples.push_back(project_mean_zero(random_function(s.rng(), cells)));
    s.check("max relative |symbol-inverse pairing - heat-route pairing|", s.tolerance(1e-3), [&] {
        double worst = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            auto symbol_route = formal_fundamental_solution_pair(samples[i], SymbolKind::Laplacian, alpha, grid);
            auto heat_route = heat_route_pair(samples[i], alpha, grid);
            const double e = std::abs(symbol_route - heat_route) / std::abs(symbol_route);
            if (!(e <= s.tolerance(1e-3))) s.counterexample("mean-zero sample " + std::to_string(i));
            worst = std::max(worst, e);
        }
        return worst;
    });
    s.check("sub-Laplacian pairing not finite (count)", 0.0, [&] {
        int bad = 0;
        for (const auto& f : samples)
            bad += !std::isfinite(std::abs(formal_fundamental_solution_pair(f, SymbolKind::SubLaplacian, alpha, grid)));
        return double(bad);
    });
}

}  // namespace

bool Report::passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const std::vector<std::string>& suite_names() { return kSuites; }

int suite_criterion(const std::string& suite) {
    auto it = std::find(kSuites.begin(), kSuites.end(), suite);
    if (it == kSuites.end()) throw DomainError("unknown suite '" + suite + "'");
    return static_cast<int>(it - kSuites.begin()) + 1;
}

void validate(const SuiteConfig& config) {
    suite_criterion(config.suite);
    if (config.tolerance && !(*config.tolerance > 0)) throw DomainError("tolerance must be > 0");
    if (config.prime && !is_prime(*config.prime)) throw DomainError("p must be prime");
    if (config.group && *config.group != "qp" && *config.group != "heisenberg" && *config.group != "engel")
        throw DomainError("group must be qp, heisenberg or engel");
    const bool nonabelian = (config.group && *config.group != "qp") ||
                            (!config.group && config.suite != "group-axioms" && config.suite != "fundamental-compact" &&
                             config.suite != "fundamental-lc" && config.suite != "riesz-semigroup" &&
                             config.suite != "heat-abelian" && config.suite != "heat-fundamental");
    if (nonabelian && config.prime && *config.prime == 2) throw DomainError("p must be odd for the Heisenberg and Engel groups");
    for (double a : config.alpha)
        if (!(a > 0)) throw DomainError("alpha must be > 0");
    if (config.beta && !(*config.beta > 0)) throw DomainError("beta must be > 0");
    if (config.dimension && *config.dimension < 1) throw DomainError("d must be >= 1");
    if (config.trunc_m && *config.trunc_m < 2) throw DomainError("trunc-M must be >= 2");
    if (config.trunc_k && *config.trunc_k < 2) throw DomainError("trunc-K must be >= 2");
    if (config.trials && *config.trials < 1) throw DomainError("trials must be >= 1");
    if (config.level && *config.level < 1) throw DomainError("level must be >= 1");
}

Report run_suite(const SuiteConfig& config) {
    validate(config);
    Report report;
    report.suite = config.suite;
    report.criterion = suite_criterion(config.suite);
    report.seed = config.seed;
    Session session(config, report);
    const auto start = Clock::now();
    using Runner = void (*)(Session&);
    static const std::map<std::string, Runner> runners = {
        {"group-axioms", group_axioms},       {"fundamental-compact", fundamental_compact},
        {"fundamental-lc", fundamental_lc},   {"fundamental-graded", fundamental_graded},
        {"riesz-semigroup", riesz_semigroup}, {"heat-abelian", heat_abelian},
        {"heat-fundamental", heat_fundamental}, {"jump-kernel", jump_kernel_suite},
        {"plancherel", plancherel},           {"heat-heisenberg", heat_heisenberg},
        {"heat-engel", heat_engel},           {"homogeneity", homogeneity},
        {"cross-validation", cross_validation}};
    runners.at(config.suite)(session);
    report.seconds = seconds_since(start);
    return report;
}

void print_report(std::ostream& out, const Report& report) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << "suite " << report.suite << " (criterion " << report.criterion << "), seed " << report.seed << '\n';
    out << std::setprecision(3);
    for (const auto& c : report.checks)
        out << "  " << (c.passed ? "PASS" : "FAIL") << "  " << c.name << ": error " << std::scientific << c.error
            << " tolerance " << c.tolerance << std::defaultfloat << " (" << c.seconds << " s)\n";
    for (const auto& note : report.notes) out << "  note: " << note << '\n';
    if (report.counterexample) out << "  first counterexample: " << *report.counterexample << '\n';
    for (const auto& path : report.written) out << "  wrote " << path.string() << '\n';
    out << (report.passed() ? "PASS" : "FAIL") << ' ' << report.suite << " in " << report.seconds << " s\n";
    out.flags(flags);
    out.precision(precision);
}

void write_heat_table(std::ostream& out, const SuiteConfig& config) {
    const std::string group = config.group.value_or("qp");
    if (group != "qp" && config.prime && *config.prime == 2)
        throw DomainError("p must be odd for the Heisenberg and Engel groups");
    if (config.prime && !is_prime(*config.prime)) throw DomainError("p must be prime");
    const int p = config.prime.value_or(3);
    const double alpha = config.alpha.empty() ? 1.0 : config.alpha.front();
    if (!(alpha > 0)) throw DomainError("alpha must be > 0");
    out << std::setprecision(17);
    if (group == "qp") {
        const int d = config.dimension.value_or(1);
        out << "t,shell,value,estimate_ratio\n";
        for (int i = -4; i <= 4; ++i) {
            const double t = std::pow(p, i);
            auto profile = heat_profile_abelian(t, alpha, p, d);
            for (int m = -4; m <= 4; ++m)
                out << t << ',' << m << ',' << profile(m) << ',' << profile(m) / heat_estimate(t, alpha, d, std::pow(p, m)) << '\n';
        }
        return;
    }
    const int M = config.trunc_m.value_or(3);
    const int K = config.trunc_k.value_or(group == "engel" ? 1 : 2);
    if (group == "heisenberg") {
        auto h = GroupDescriptor::heisenberg(p, 1);
        HeisenbergSpectrum spectrum(p, 1, alpha, PlancherelGrid::symmetric(M, K));
        out << "t,x,y,z,re,im,trunc_M,trunc_K\n";
        for (int i = -2; i <= 2; ++i) {
            const double t = std::pow(p, i);
            auto field = spectrum.heat(t);
            for (int n = 0; n < p; ++n) {
                GroupElement g{h, {Rational(n, p), 0, Rational(n, p * p)}};
                const Complex v = field(g).value;
                out << t << ',' << g.coords[0] << ',' << g.coords[1] << ',' << g.coords[2] << ',' << v.real() << ','
                    << v.imag() << ',' << M << ',' << K << '\n';
            }
        }
        return;
    }
    if (group != "engel") throw DomainError("group must be qp, heisenberg or engel");
    auto e4 = GroupDescriptor::engel(p);
    EngelHeatKernel heat(p, alpha, {-M, M, K, 2});
    out << "t,x,y1,y2,y3,re,im,trunc_M,trunc_K\n";
    for (int i = -2; i <= 2; ++i) {
        const double t = std::pow(p, i);
        for (int n = 0; n < p; ++n) {
            GroupElement g{e4, {Rational(n), 0, 0, Rational(n, p)}};
            const Complex v = heat(t, g).value;
            out << t << ',' << g.coords[0] << ',' << g.coords[1] << ',' << g.coords[2] << ',' << g.coords[3] << ','
                << v.real() << ',' << v.imag() << ',' << M << ',' << K << '\n';
        }
    }
}

}  // namespace ultrametric
