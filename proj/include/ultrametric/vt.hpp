#pragma once

#include "ultrametric/test_function.hpp"

namespace ultrametric {

// out[x] = diagonal f(x) + Σ_{r ≠ x} weight[m] (f(r) - f(x)), where m is the level of r^{-1}x
// relative to the window's outer level.
TestFunction level_kernel_apply(const TestFunction& f, const std::vector<double>& weight, double diagonal);

// (1 - q^a) / (1 - q^{-(a + dim)}), the normalizing constant of VT-type operators.
double vt_constant(double q, double alpha, double dim);

// Values of an operator image on a window plus the closed-form radial tail off the window:
// value(x) = tail_coefficient * |x|_G^{tail_exponent} * integral.
struct VTResult {
    TestFunction values;
    double tail_coefficient = 0.0;
    double tail_exponent = 0.0;
    Complex integral{};
    bool has_tail = false;

    // Value at any x; off the window uses the tail.
    Complex at(const GroupElement& x) const;
};

// Graded VT operator C ∫ (f(xy^{-1}) - f(x)) |y|_G^{-(alpha+Q)} dy with C = vt_constant(p, alpha, Q).
VTResult vt_apply(const TestFunction& f, double alpha);
// Same, evaluated on out_window (which must be at least as fine as f).
VTResult vt_apply(const TestFunction& f, double alpha, const CosetWindow& out_window);

// Compact operator on G_k in the Vilenkin normalization (ϰ = p^Q, order alpha):
// c0 f + C ∫_{G_k} (f(xy^{-1}) - f(x)) |y|_{𝒢_k}^{-alpha-1} d_k y.
TestFunction vt_compact_apply(const TestFunction& f, double alpha, int k);

// D^alpha f = ϰ^{l alpha} 𝔻_l^alpha f on G_l plus tail_coefficient |x|_𝒢^{-(alpha+1)} ∫f off G_l.
// alpha is the Vilenkin order; D^alpha equals the graded operator of order Q alpha.
struct SplitDecomposition {
    TestFunction main;
    double tail_coefficient;
    Complex integral;
    int level;

    // Reconstruct D^alpha f at a group element.
    Complex at(const GroupElement& x, double alpha) const;
};
SplitDecomposition vt_split_decompose(const TestFunction& f, double alpha, int l);

// C^{(1)} ∫_{Q_p} (f(x exp(tX_k)^{-1}) - f(x)) |t|^{-(alpha+1)} dt on the window of f.
// The image is not radial, so values are reported on the window only.
VTResult directional_vt_apply(const TestFunction& f, int coordinate, double alpha);
// Σ_k ∂^{alpha/ν_k}_{X_k}
VTResult vladimirov_laplacian_apply(const TestFunction& f, double alpha);
// Σ_j ∂^alpha_{X_j} + ∂^alpha_{Y_j}, Heisenberg groups only.
VTResult sub_laplacian_apply(const TestFunction& f, double alpha);

// J_alpha for |y^{-1}x|_G = q^k, closed form and truncated telescoping series.
double jump_kernel_radial(double q, int homogeneous_dimension, double alpha, int k);
double jump_kernel_series(double q, int homogeneous_dimension, double alpha, int k, int terms);
double jump_kernel(const GroupElement& x, const GroupElement& y, double alpha);

}  // namespace ultrametric
