#pragma once

#include "ultrametric/vt.hpp"

#include <optional>
#include <vector>

namespace ultrametric {

// coefficient p^{m exponent} + log_slope m on the shell |x|_G = p^m
struct ShellLaw {
    double coefficient = 0.0;
    double exponent = 0.0;
    double log_slope = 0.0;

    double operator()(int prime, int m) const;
};

// Radial function of |x|_G. Shell m is the sphere |x|_G = p^m; shells in [m_min, m_max] are
// stored, shells below follow inner_law and shells above follow outer_law.
class RadialProfile {
public:
    RadialProfile(int prime, int homogeneous_dimension, int m_min, std::vector<double> shells,
                  ShellLaw inner_law, ShellLaw outer_law);

    int prime() const { return prime_; }
    int homogeneous_dimension() const { return dimension_; }
    int m_min() const { return m_min_; }
    int m_max() const { return m_min_ + static_cast<int>(shells_.size()) - 1; }
    const std::vector<double>& shells() const { return shells_; }
    const ShellLaw& inner_law() const { return inner_; }
    const ShellLaw& outer_law() const { return outer_; }

    double operator()(int m) const;
    // Value at x; throws at the identity unless identity_value is set.
    double at(const GroupElement& x) const;

    // Σ_{m=first}^{last} value(m) p^{m weight}; first/last may be kMinusInfinity/kPlusInfinity.
    double shell_sum(int first, int last, double weight) const;
    // Haar measure of the sphere |x|_G = p^m is p^{Qm}(1 - p^{-Q}).
    double sphere_measure(int m) const;
    // ∫_{|x|_G <= p^top}
    double ball_integral(int top) const;
    double integral() const;

    static constexpr int kMinusInfinity = -(1 << 30);
    static constexpr int kPlusInfinity = 1 << 30;

    std::optional<double> identity_value;
    // Bound on the error of the stored shells and tail laws.
    double remainder_bound = 0.0;

private:
    int prime_;
    int dimension_;
    int m_min_;
    std::vector<double> shells_;
    ShellLaw inner_;
    ShellLaw outer_;
};

// (f*E)(x) = ∫ f(y) E(y^{-1}x) dy: exact on the window of f, and E(|x|) ∫f off it.
struct RadialConvolution {
    TestFunction values;
    RadialProfile kernel;
    Complex integral;

    Complex at(const GroupElement& x) const;
};

RadialConvolution convolve_radial(const TestFunction& f, const RadialProfile& kernel);
// Convolution of an operator image including its closed-form tail, on the image's window.
// Throws when the tail against the kernel is not integrable and ∫ of the input is nonzero.
TestFunction convolve_radial(const VTResult& image, const RadialProfile& kernel);
// (a*b)(m) for shells m in [m_min, m_max] of two radial functions on the same group.
std::vector<double> convolve_profiles(const RadialProfile& a, const RadialProfile& b, int m_min,
                                      int m_max);

// Γ_𝒢(s) = (1 - ϰ^{s-1}) / (1 - ϰ^{-s})
double riesz_gamma(double s, double kappa);
// r_s(x) = |x|_𝒢^{s-1} / Γ_𝒢(s) on the compact group G_0.
RadialProfile riesz_kernel_profile(double s, const GroupDescriptor& group);
// Meromorphic continuation of ⟨r_s, f⟩ for f supported in G_0, as an exact cell sum.
Complex riesz_pair(double s, const TestFunction& f);

enum class Setting { Compact, LocallyCompactVilenkin, Graded };

// E_alpha for 𝔻^alpha on G_0 (compact, Vilenkin order), D^alpha (Vilenkin order) or 𝒟^alpha
// (graded order). The compact case at alpha = 1 is the logarithmic branch.
RadialProfile fundamental_solution_profile(double alpha, Setting setting,
                                           const GroupDescriptor& group, int m_min = -12,
                                           int m_max = 12);

// What f*E misses when only the compact part ϰ^{lα} 𝔻_l f of D^alpha f is convolved: the
// off-G_l tail convolved with E, evaluated inside G_l.
Complex split_residual(const SplitDecomposition& split, double alpha, const RadialProfile& kernel);

// S_k(x) = ∫_{‖ξ‖=p^k} e^{2πi{x·ξ}} dξ on Q_p^d.
double character_sphere_integral(const NormExponent& x, int p, int d, int k);
// h_alpha(t, x) on Q_p^d (or any graded group with d = Q), as a shell series.
double heat_kernel_abelian(double t, double alpha, int p, int d, const NormExponent& x);
RadialProfile heat_profile_abelian(double t, double alpha, int p, int d);
// t / (t^{1/alpha} + ‖x‖)^{alpha + d}
double heat_estimate(double t, double alpha, int d, double norm);

// Δu Σ_j t_j^a e^{-t_j λ} over t_j = p^{j/4}, Δu = ln p / 4; tends to Γ(a) λ^{-a}.
double log_grid_transform(double lambda, double a, int p);

// ∫_0^∞ t^{a-1} h_alpha(t, ·) dt / Γ(a) by the trapezoid rule in ln t on t = p^{j/4}.
// a = 1 gives the fundamental solution; requires 0 < alpha < d.
RadialProfile fundamental_solution_via_heat(double alpha, int p, int d, int m_min = -6,
                                            int m_max = 6);
// ℐ_beta = Γ(beta/alpha)^{-1} ∫ t^{beta/alpha - 1} h_alpha dt, 0 < beta < d.
RadialProfile riesz_potential(double beta, double alpha, int p, int d, int m_min = -6,
                              int m_max = 6);

}  // namespace ultrametric
