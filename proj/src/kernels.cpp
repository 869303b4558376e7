#include "ultrametric/kernels.hpp"

#include <cmath>
#include <string>

namespace ultrametric {

namespace {

double ipow(int p, double exponent) { return std::pow(static_cast<double>(p), exponent); }

// Σ_{m=first}^{last} law(m) p^{m w}, one end possibly infinite.
double law_sum(const ShellLaw& law, int p, int first, int last, double w) {
    if (first > last) return 0.0;
    const bool inward = first == RadialProfile::kMinusInfinity;
    const bool outward = last == RadialProfile::kPlusInfinity;
    if (!inward && !outward) {
        double total = 0.0;
        for (int m = first; m <= last; ++m) total += law(p, m) * ipow(p, m * w);
        return total;
    }
    if (inward && outward) throw DomainError("shell sum over all of Z needs stored shells");
    double total = 0.0;
    if (law.coefficient != 0.0) {
        const double rate = law.exponent + w;  // ratio p^rate per shell
        if (inward) {
            if (!(rate > 0)) throw DomainError("radial profile not integrable towards the identity");
            total += law.coefficient * ipow(p, last * rate) / (1.0 - ipow(p, -rate));
        } else {
            if (!(rate < 0)) throw DomainError("radial profile not integrable at infinity");
            total += law.coefficient * ipow(p, first * rate) / (1.0 - ipow(p, rate));
        }
    }
    if (law.log_slope != 0.0) {
        if (inward) {
            if (!(w > 0)) throw DomainError("logarithmic profile not integrable towards the identity");
            const double q = ipow(p, -w);
            total += law.log_slope * ipow(p, last * w) * (last / (1.0 - q) - q / ((1.0 - q) * (1.0 - q)));
        } else {
            if (!(w < 0)) throw DomainError("logarithmic profile not integrable at infinity");
            const double q = ipow(p, w);
            total += law.log_slope * ipow(p, first * w) * (first / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
        }
    }
    return total;
}

RadialProfile from_law(int p, int dimension, int m_min, int m_max, const ShellLaw& law) {
    std::vector<double> shells;
    for (int m = m_min; m <= m_max; ++m) shells.push_back(law(p, m));
    return RadialProfile(p, dimension, m_min, std::move(shells), law, law);
}

void require_group_match(const RadialProfile& kernel, const GroupDescriptor& group) {
    if (kernel.prime() != group.prime() || kernel.homogeneous_dimension() != group.homogeneous_dimension())
        throw DomainError("radial profile and group disagree on p or Q");
}

}  // namespace

double ShellLaw::operator()(int prime, int m) const {
    double value = log_slope * m;
    if (coefficient != 0.0) value += coefficient * ipow(prime, m * exponent);
    return value;
}

RadialProfile::RadialProfile(int prime, int homogeneous_dimension, int m_min, std::vector<double> shells,
                             ShellLaw inner_law, ShellLaw outer_law)
    : prime_(prime), dimension_(homogeneous_dimension), m_min_(m_min), shells_(std::move(shells)),
      inner_(inner_law), outer_(outer_law) {
    if (shells_.empty()) throw DomainError("radial profile needs at least one stored shell");
}

double RadialProfile::operator()(int m) const {
    if (m < m_min_) return inner_(prime_, m);
    if (m > m_max()) return outer_(prime_, m);
    return shells_[static_cast<std::size_t>(m - m_min_)];
}

double RadialProfile::at(const GroupElement& x) const {
    require_group_match(*this, x.group);
    auto norm = quasi_norm(x);
    if (norm.zero) {
        if (!identity_value) throw DomainError("radial profile is singular at the identity");
        return *identity_value;
    }
    return (*this)(norm.exponent);
}

double RadialProfile::shell_sum(int first, int last, double weight) const {
    double total = 0.0;
    if (first < m_min_) total += law_sum(inner_, prime_, first, std::min(last, m_min_ - 1), weight);
    for (int m = std::max(first, m_min_); m <= std::min(last, m_max()); ++m)
        total += shells_[static_cast<std::size_t>(m - m_min_)] * ipow(prime_, m * weight);
    if (last > m_max()) total += law_sum(outer_, prime_, std::max(first, m_max() + 1), last, weight);
    return total;
}

double RadialProfile::sphere_measure(int m) const {
    return ipow(prime_, dimension_ * m) * (1.0 - ipow(prime_, -dimension_));
}

double RadialProfile::ball_integral(int top) const {
    return (1.0 - ipow(prime_, -dimension_)) * shell_sum(kMinusInfinity, top, dimension_);
}

double RadialProfile::integral() const {
    return (1.0 - ipow(prime_, -dimension_)) * shell_sum(kMinusInfinity, kPlusInfinity, dimension_);
}

Complex RadialConvolution::at(const GroupElement& x) const {
    if (auto cell = values.window().locate(x)) return values[*cell];
    return kernel.at(x) * integral;
}

RadialConvolution convolve_radial(const TestFunction& f, const RadialProfile& kernel) {
    const auto& window = f.window();
    require_group_match(kernel, window.group());
    const int depth = window.depth();
    const double kappa = ipow(kernel.prime(), kernel.homogeneous_dimension());
    const double cell = window.cell_weight();
    std::vector<double> weight(static_cast<std::size_t>(depth));
    // Σ_{r≠x} w f(r) + ball f(x), rewritten in the difference form of level_kernel_apply
    double diagonal = kernel.ball_integral(-window.inner());
    for (int m = 0; m < depth; ++m) {
        weight[static_cast<std::size_t>(m)] = kernel(-(window.outer() + m)) * cell;
        const double count = std::pow(kappa, depth - m) - std::pow(kappa, depth - m - 1);
        diagonal += weight[static_cast<std::size_t>(m)] * count;
    }
    return {level_kernel_apply(f, weight, diagonal), kernel, integrate(f)};
}

TestFunction convolve_radial(const VTResult& image, const RadialProfile& kernel) {
    TestFunction out = convolve_radial(image.values, kernel).values;
    if (!image.has_tail || image.integral == Complex{} || image.tail_coefficient == 0.0) return out;
    // x inside the window and y outside it: |y^{-1}x| = |y|
    double tail_sum;
    try {
        tail_sum = (1.0 - ipow(kernel.prime(), -kernel.homogeneous_dimension())) *
                   kernel.shell_sum(-image.values.window().outer() + 1, RadialProfile::kPlusInfinity,
                                    image.tail_exponent + kernel.homogeneous_dimension());
    } catch (const DomainError& e) {
        throw DomainError(std::string("convolve_radial: operator tail |x|^") +
                          std::to_string(image.tail_exponent) + " against the kernel: " + e.what());
    }
    const Complex shift = image.tail_coefficient * tail_sum * image.integral;
    for (auto& v : out.values()) v += shift;
    return out;
}

std::vector<double> convolve_profiles(const RadialProfile& a, const RadialProfile& b, int m_min, int m_max) {
    if (a.prime() != b.prime() || a.homogeneous_dimension() != b.homogeneous_dimension())
        throw DomainError("convolve_profiles: profiles on different groups");
    if (a.outer_law().log_slope != 0.0 || b.outer_law().log_slope != 0.0)
        throw DomainError("convolve_profiles: logarithmic outer laws are not supported");
    const int p = a.prime(), q = a.homogeneous_dimension();
    const int last_stored = std::max(a.m_max(), b.m_max());
    const ShellLaw product{a.outer_law().coefficient * b.outer_law().coefficient,
                           a.outer_law().exponent + b.outer_law().exponent, 0.0};
    std::vector<double> out;
    for (int m = m_min; m <= m_max; ++m) {
        double far = 0.0;  // |y| > |x|: |y^{-1}x| = |y|
        for (int j = m + 1; j <= last_stored; ++j) far += a(j) * b(j) * a.sphere_measure(j);
        far += (1.0 - ipow(p, -q)) * law_sum(product, p, std::max(m + 1, last_stored + 1),
                                             RadialProfile::kPlusInfinity, q);
        // |y| < |x|: |y^{-1}x| = |x|, and the symmetric case; on the sphere of x itself the
        // set |y^{-1}x| = |x| has measure μ_m - p^{Q(m-1)}
        double near = b(m) * a.ball_integral(m - 1) + a(m) * b.ball_integral(m - 1);
        double same = a(m) * b(m) * (a.sphere_measure(m) - ipow(p, q * (m - 1)));
        out.push_back(far + near + same);
    }
    return out;
}

double riesz_gamma(double s, double kappa) {
    if (s == 0.0) throw DomainError("riesz_gamma: pole at s = 0");
    if (s == 1.0) throw DomainError("riesz_gamma: Γ_𝒢(1) = 0, so r_1 is undefined");
    return (1.0 - std::pow(kappa, s - 1.0)) / (1.0 - std::pow(kappa, -s));
}

RadialProfile riesz_kernel_profile(double s, const GroupDescriptor& group) {
    const int q = group.homogeneous_dimension();
    const double kappa = ipow(group.prime(), q);
    return from_law(group.prime(), q, -12, 0, ShellLaw{1.0 / riesz_gamma(s, kappa), q * (s - 1.0), 0.0});
}

Complex riesz_pair(double s, const TestFunction& f) {
    if (s == 1.0) throw DomainError("riesz_pair: pole at s = 1");
    const auto& window = f.window();
    if (window.outer() < 0) throw DomainError("riesz_pair: f must be supported in G_0");
    const int q = window.group().homogeneous_dimension();
    const double kappa = ipow(window.group().prime(), q);
    const Complex at_identity = f[0];

    Frame frame(window.group(), window.outer(), window.inner());
    Complex integral{};
    for (std::size_t c = 1; c < window.size(); ++c) {
        const int n = frame.level(frame.embed_cell(window, c));
        integral += std::pow(kappa, -n * (s - 1.0)) * (f[c] - at_identity);
    }
    integral *= window.cell_weight();
    // G_0 \ G_outer, where f vanishes
    for (int n = 0; n < window.outer(); ++n)
        integral -= at_identity * std::pow(kappa, -n * s) * (1.0 - 1.0 / kappa);

    const double denominator = 1.0 - std::pow(kappa, s - 1.0);
    return (1.0 - 1.0 / kappa) / denominator * at_identity + (1.0 - std::pow(kappa, -s)) / denominator * integral;
}

RadialProfile fundamental_solution_profile(double alpha, Setting setting, const GroupDescriptor& group,
                                           int m_min, int m_max) {
    if (!(alpha > 0.0)) throw DomainError("fundamental solution: alpha must be positive");
    const int p = group.prime(), q = group.homogeneous_dimension();
    const double kappa = ipow(p, q);
    ShellLaw law;
    switch (setting) {
    case Setting::Compact:
        if (alpha == 1.0) {
            // (1-ϰ)/(ϰ ln ϰ) ln|x|_𝒢 with ln|x|_𝒢 = m Q ln p
            law.log_slope = (1.0 - kappa) / (kappa * std::log(kappa)) * q * std::log(p);
            break;
        }
        [[fallthrough]];
    case Setting::LocallyCompactVilenkin:
        if (alpha == 1.0) throw DomainError("fundamental solution: alpha = 1 has no power-law form off compact groups");
        law.coefficient = (1.0 - std::pow(kappa, -alpha)) / (1.0 - std::pow(kappa, alpha - 1.0));
        law.exponent = q * (alpha - 1.0);
        break;
    case Setting::Graded:
        if (alpha == q) throw DomainError("fundamental solution: alpha = Q is unsupported on graded groups");
        law.coefficient = (1.0 - ipow(p, -alpha)) / (1.0 - ipow(p, alpha - q));
        law.exponent = alpha - q;
        break;
    }
    return from_law(p, q, m_min, m_max, law);
}

Complex split_residual(const SplitDecomposition& split, double alpha, const RadialProfile& kernel) {
    require_group_match(kernel, split.main.group());
    const int q = kernel.homogeneous_dimension();
    // C_V ∫f ∫_{G \ G_l} |z|_𝒢^{-(α+1)} E(z) dz with |z|_𝒢 = |z|_G^Q
    const double shells = (1.0 - ipow(kernel.prime(), -q)) *
                          kernel.shell_sum(-split.level + 1, RadialProfile::kPlusInfinity, -q * (alpha + 1.0) + q);
    return split.tail_coefficient * shells * split.integral;
}

double character_sphere_integral(const NormExponent& x, int p, int d, int k) {
    // ∫_{‖ξ‖ <= p^j} e^{2πi{x·ξ}} dξ = p^{jd} when ‖x‖ <= p^{-j}, else 0
    auto ball = [&](int j) { return (x.zero || x.exponent <= -j) ? ipow(p, j * d) : 0.0; };
    return ball(k) - ball(k - 1);
}

namespace {

constexpr double kSeriesCutoff = 1e-18;

double heat_at_identity(double t, double alpha, int p, int d) {
    const double shell = 1.0 - ipow(p, -d);
    const int start = static_cast<int>(std::lround(-std::log(t) / (alpha * std::log(p))));
    double total = 0.0;
    for (int k = start;; ++k) {
        const double term = std::exp(-t * ipow(p, k * alpha)) * ipow(p, k * d) * shell;
        total += term;
        if (term < kSeriesCutoff * total && k > start) break;
    }
    for (int k = start - 1;; --k) {
        const double term = std::exp(-t * ipow(p, k * alpha)) * ipow(p, k * d) * shell;
        total += term;
        if (term < kSeriesCutoff * total) break;
    }
    return total;
}

// h on the shell ‖x‖ = p^m: Σ_{k <= -m} e^{-tλ_k} μ_k - e^{-tλ_{1-m}} p^{-md}, λ_k = p^{kα}.
// Below the heat scale the constant parts cancel exactly, so 1 - e^{-u} is summed instead.
double heat_on_shell(double t, double alpha, int p, int d, int m) {
    const double shell = 1.0 - ipow(p, -d);
    const double edge = t * ipow(p, (1 - m) * alpha);
    double total = 0.0;
    if (edge >= 1.0) {
        for (int k = -m;; --k) {
            const double decay = t * ipow(p, k * alpha);
            const double term = std::exp(-decay) * ipow(p, k * d) * shell;
            total += term;
            if (decay < 1.0 && term < kSeriesCutoff * total) break;
        }
        return total - std::exp(-edge) * ipow(p, -m * d);
    }
    for (int k = -m;; --k) {
        const double term = -std::expm1(-t * ipow(p, k * alpha)) * ipow(p, k * d) * shell;
        total += term;
        if (term <= kSeriesCutoff * total) break;
    }
    return -std::expm1(-edge) * ipow(p, -m * d) - total;
}

}  // namespace

double log_grid_transform(double lambda, double a, int p) {
    const double step = std::log(p) / 4.0;
    const int start = static_cast<int>(std::floor(-std::log(lambda) / step));
    double total = 0.0;
    for (int j = start;; ++j) {
        const double t = std::exp(j * step);
        const double term = std::pow(t, a) * std::exp(-t * lambda);
        total += term;
        if (t * lambda > a + 1.0 && term < kSeriesCutoff * total) break;
    }
    for (int j = start - 1;; --j) {
        const double t = std::exp(j * step);
        total += std::pow(t, a) * std::exp(-t * lambda);
        if (t * lambda < 1e-17) {
            // e^{-tλ} = 1 to double precision below here: geometric remainder
            const double ratio = std::pow(p, -a / 4.0);
            total += std::pow(t, a) * ratio / (1.0 - ratio);
            break;
        }
    }
    return step * total;
}

namespace {

// Γ(a)^{-1} Σ_j Δu t_j^a h(t_j, x) on the shell ‖x‖ = p^m, summed shell by shell in ξ.
double heat_transform_on_shell(double a, double alpha, int p, int d, int m) {
    const double shell = 1.0 - ipow(p, -d);
    const double gamma = std::tgamma(a);
    const double decay = d - alpha * a;  // per-shell ratio of the k -> -∞ terms is p^{-decay}
    double total = -ipow(p, -m * d) * log_grid_transform(ipow(p, (1 - m) * alpha), a, p);
    for (int k = -m;; --k) {
        const double term = ipow(p, k * d) * shell * log_grid_transform(ipow(p, k * alpha), a, p);
        total += term;
        if (std::abs(term) < 1e-17 * std::abs(total)) {
            // the transform equals Γ(a) λ^{-a} for these tiny λ
            total += shell * gamma * ipow(p, (k - 1) * decay) / (1.0 - ipow(p, -decay));
            break;
        }
    }
    return total / gamma;
}

RadialProfile heat_transform_profile(double a, double alpha, int p, int d, int m_min, int m_max) {
    std::vector<double> shells;
    for (int m = m_min; m <= m_max; ++m) shells.push_back(heat_transform_on_shell(a, alpha, p, d, m));
    const double exponent = alpha * a - d;
    ShellLaw inner{shells.front() / ipow(p, m_min * exponent), exponent, 0.0};
    ShellLaw outer{shells.back() / ipow(p, m_max * exponent), exponent, 0.0};
    RadialProfile profile(p, d, m_min, std::move(shells), inner, outer);
    // homogeneity defect across the stored shells
    double defect = 0.0;
    for (int m = m_min; m <= m_max; ++m)
        defect = std::max(defect, std::abs(profile(m) / inner(p, m) - 1.0));
    profile.remainder_bound = defect;
    return profile;
}

}  // namespace

double heat_kernel_abelian(double t, double alpha, int p, int d, const NormExponent& x) {
    if (!(t > 0.0)) throw DomainError("heat kernel: t must be positive");
    if (!(alpha > 0.0)) throw DomainError("heat kernel: alpha must be positive");
    return x.zero ? heat_at_identity(t, alpha, p, d) : heat_on_shell(t, alpha, p, d, x.exponent);
}

RadialProfile heat_profile_abelian(double t, double alpha, int p, int d) {
    if (!(t > 0.0)) throw DomainError("heat kernel: t must be positive");
    if (!(alpha > 0.0)) throw DomainError("heat kernel: alpha must be positive");
    const double lp = std::log(p);
    // below m_min: t p^{(1-m)α} >= 60 and h equals h(t, 0) to double precision
    const int m_min = static_cast<int>(std::floor(1.0 - std::log(60.0 / t) / (alpha * lp))) + 1;
    // above m_max: t p^{(1-m)α} <= 1e-15 and h = t J(x) to first order
    const int m_max = static_cast<int>(std::ceil(1.0 + (std::log(t) + 15.0 * std::log(10.0)) / (alpha * lp)));
    std::vector<double> shells;
    for (int m = m_min; m <= m_max; ++m) shells.push_back(heat_on_shell(t, alpha, p, d, m));
    const double h0 = heat_at_identity(t, alpha, p, d);
    const ShellLaw inner{h0, 0.0, 0.0};
    const ShellLaw outer{t * (ipow(p, alpha) - 1.0) / (1.0 - ipow(p, -(alpha + d))), -(alpha + d), 0.0};
    RadialProfile profile(p, d, m_min, std::move(shells), inner, outer);
    profile.identity_value = h0;
    profile.remainder_bound = std::max(std::abs(heat_on_shell(t, alpha, p, d, m_max + 1) - outer(p, m_max + 1)),
                                       std::abs(heat_on_shell(t, alpha, p, d, m_min - 1) - h0));
    return profile;
}

double heat_estimate(double t, double alpha, int d, double norm) {
    return t / std::pow(std::pow(t, 1.0 / alpha) + norm, alpha + d);
}

RadialProfile fundamental_solution_via_heat(double alpha, int p, int d, int m_min, int m_max) {
    if (!(alpha > 0.0 && alpha < d))
        throw DomainError("fundamental_solution_via_heat: requires 0 < alpha < d (transience)");
    return heat_transform_profile(1.0, alpha, p, d, m_min, m_max);
}

RadialProfile riesz_potential(double beta, double alpha, int p, int d, int m_min, int m_max) {
    if (!(alpha > 0.0)) throw DomainError("riesz_potential: alpha must be positive");
    if (!(beta > 0.0 && beta < d)) throw DomainError("riesz_potential: requires 0 < beta < d");
    return heat_transform_profile(beta / alpha, alpha, p, d, m_min, m_max);
}

}  // namespace ultrametric
