#pragma once

#include "ultrametric/test_function.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <vector>

namespace ultrametric {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Point of the generic dual: π_λ of H_d, or π_{λ,μ} of E_4.
struct RepPoint {
    GroupKind kind;
    int prime;
    Rational lambda;
    Rational mu;  // E_4 only
    SquareClass square;

    static RepPoint heisenberg(const Rational& lambda, int p);
    static RepPoint engel(const Rational& lambda, const Rational& mu, int p);
    // |λ|_p = p^shell
    int shell() const;
};

// Cell-constant vectors of L²(Q_p^d) supported in p^{outer} Z_p^d, cells mod p^{inner}, with
// outer = scale - K and inner = scale + K. The support is a compact group, so shifts by its
// elements permute cells exactly.
class RepWindow {
public:
    RepWindow(int prime, int d, int truncation, int scale = 0);

    int prime() const { return prime_; }
    int dimension() const { return dimension_; }
    int truncation() const { return truncation_; }
    int scale() const { return scale_; }
    int outer() const { return scale_ - truncation_; }
    int inner() const { return scale_ + truncation_; }
    std::int64_t side() const { return side_; }
    std::size_t size() const { return size_; }
    double cell_weight() const;

    std::vector<std::int64_t> digits(std::size_t cell) const;
    std::size_t index(const std::vector<std::int64_t>& digits) const;
    std::vector<Rational> representative(std::size_t cell) const;
    // exponent e with ‖u‖ = p^e over the cell, or empty for the cell of the origin
    std::optional<int> norm_exponent(std::size_t cell, int coordinate) const;
    // cell of u + shift for every u; throws when the shift leaves the support
    std::vector<std::size_t> shift_permutation(const std::vector<Rational>& shift) const;

    friend bool operator==(const RepWindow&, const RepWindow&) = default;

private:
    int prime_;
    int dimension_;
    int truncation_;
    int scale_;
    std::int64_t side_;
    std::size_t size_;
};

// Window adapted to |λ|_p = p^shell: H_d eigenfunctions live at |u| ~ |λ|^{-1/2}, E_4 ones
// at |λ|^{-1/3}.
int heisenberg_window_scale(int shell);
int engel_window_scale(int shell);

// π_λ(x,y,z)φ(u) = e^{2πi{λ(z + x·y/2 + y·u)}} φ(u + x)
ComplexMatrix schrodinger_matrix(const RepPoint& point, const GroupElement& g,
                                 const RepWindow& window);
ComplexVector schrodinger_apply(const RepPoint& point, const GroupElement& g,
                                const RepWindow& window, const ComplexVector& phi);
// π_{λ,μ}(x,y₁,y₂,y₃)φ(u) = e^{2πi{-μy₁/(2λ) + λy₃ - λy₂u + λy₁u²/2}} φ(u + x)
ComplexMatrix engel_rep_matrix(const RepPoint& point, const GroupElement& g,
                               const RepWindow& window);
ComplexVector engel_rep_apply(const RepPoint& point, const GroupElement& g,
                              const RepWindow& window, const ComplexVector& phi);
ComplexMatrix representation_matrix(const RepPoint& point, const GroupElement& g,
                                    const RepWindow& window);

// ∫_{G_level} π_λ(h) dh compressed to the window (H_d only); depends on λ through |λ|.
ComplexMatrix subgroup_average(int prime, int d, int shell, int level, const RepWindow& window);

// f̂(λ) = ∫ f(g) π_λ(g)^* dg on the window, exact for cell-constant f.
ComplexMatrix fourier_group(const TestFunction& f, const RepPoint& point, const RepWindow& window);

enum class SymbolKind { Laplacian, SubLaplacian, EngelLaplacian };

// Symbol of ∂^alpha along basis direction `coordinate`: the VT operator D_u^alpha for X
// directions (Galerkin on the window with the off-window part of the kernel on the diagonal),
// a diagonal potential otherwise.
ComplexMatrix directional_symbol(const RepPoint& point, int coordinate, double alpha,
                                 const RepWindow& window);

class SymbolMatrix {
public:
    SymbolMatrix(RepPoint point, RepWindow window, ComplexMatrix matrix);

    const RepPoint& point() const { return point_; }
    const RepWindow& window() const { return window_; }
    const ComplexMatrix& matrix() const { return matrix_; }
    // ascending
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const ComplexMatrix& eigenvectors() const { return eigenvectors_; }
    double hermitian_defect() const;

    ComplexMatrix apply_function(const std::function<double(double)>& fn) const;

private:
    RepPoint point_;
    RepWindow window_;
    ComplexMatrix matrix_;
    Eigen::VectorXd eigenvalues_;
    ComplexMatrix eigenvectors_;
};

SymbolMatrix symbol_matrix(SymbolKind op, const RepPoint& point, double alpha,
                           const RepWindow& window);
// e^{-tσ}
ComplexMatrix heat_semigroup_symbol(const SymbolMatrix& symbol, double t);

// λ ranges over the shells |λ|_p = p^k, first_shell <= k <= last_shell. Representation
// windows have truncation K. Where λ is sampled rather than integrated in closed form (E_4),
// each shell is split into cosets at `digits` p-adic digits.
struct PlancherelGrid {
    int first_shell = -3;
    int last_shell = 3;
    int truncation = 2;
    int digits = 2;

    static PlancherelGrid symmetric(int shells, int truncation, int digits = 2);
    // grid carried by λ ↦ γ²λ for |γ|_p = p^{-valuation}
    PlancherelGrid dilated(int valuation) const;
};

struct KernelEstimate {
    Complex value;
    // edge-shell terms plus eigenvector weight on the window boundary, both scaled by the
    // multiplier: a heuristic for the truncated λ-tails and window
    double remainder = 0.0;
};

// Operator field λ ↦ F(σ(λ)) on H_d, for a symbol depending on |λ| only, and the functions
// ∫ Tr[π_λ(g) F(σ(λ))] |λ|^d dλ it defines. The λ-integral inside each shell is closed form.
class HeisenbergField {
public:
    KernelEstimate operator()(const GroupElement& g) const;
    // ∫_{c G_level} over a left coset
    Complex cell_integral(const GroupElement& c, int level) const;
    // ∫ f(g) K(g) dg for cell-constant f
    Complex pair(const TestFunction& f) const;
    const PlancherelGrid& grid() const { return grid_; }

private:
    friend class HeisenbergSpectrum;
    struct Shell {
        int k;
        RepWindow window;
        ComplexMatrix field;
        double boundary_weight;
    };
    HeisenbergField(int p, int d, PlancherelGrid grid, std::vector<Shell> shells);

    Complex shell_trace(const Shell& shell, const GroupElement& g, const ComplexMatrix& field) const;
    const ComplexMatrix& averaged(const Shell& shell, int level) const;

    int prime_;
    int dimension_;
    PlancherelGrid grid_;
    std::vector<Shell> shells_;
    mutable std::map<std::pair<int, int>, ComplexMatrix> averaged_;
};

// One symbol eigendecomposition per λ-shell, on the shell's scaled window.
class HeisenbergSpectrum {
public:
    HeisenbergSpectrum(int p, int d, double alpha, PlancherelGrid grid,
                       SymbolKind op = SymbolKind::Laplacian);

    const std::vector<SymbolMatrix>& symbols() const { return symbols_; }
    HeisenbergField field(const std::function<double(double)>& multiplier) const;
    HeisenbergField heat(double t) const;
    HeisenbergField inverse() const;
    double alpha() const { return alpha_; }
    int homogeneous_dimension() const { return 2 * dimension_ + 2; }

private:
    int prime_;
    int dimension_;
    double alpha_;
    PlancherelGrid grid_;
    std::vector<SymbolMatrix> symbols_;
};

KernelEstimate heisenberg_heat_kernel(double t, const GroupElement& g, double alpha,
                                      const PlancherelGrid& grid = {});

// ⟨E_T, f⟩ = ∫ Tr[(f∘ι)^(λ) σ_T(λ)^{-1}] |λ|^d dλ for mean-zero f on H_d.
Complex formal_fundamental_solution_pair(const TestFunction& f, SymbolKind op, double alpha,
                                         const PlancherelGrid& grid = {});
// The same pairing through ∫₀^∞ ⟨h(t,·), f⟩ dt on the logarithmic t-grid.
Complex heat_route_pair(const TestFunction& f, double alpha, const PlancherelGrid& grid = {});

// ℐ_β(g) = Γ(β/α)^{-1} ∫₀^∞ t^{β/α-1} h(t,g) dt on H_d, 0 < β < Q.
KernelEstimate riesz_potential_group(double beta, double alpha, const GroupElement& g,
                                     const PlancherelGrid& grid = {});

// ∫ ‖f̂(λ)‖²_HS |λ|^d dλ with λ sampled on the grid's cosets.
double plancherel_integral(const TestFunction& f, const PlancherelGrid& grid);

// Heat kernel of the E_4 Laplacian, ∫∫ Tr[π_{λ,μ}(g) e^{-tσ(λ,μ)}] dλ dμ, with μ = λ²ν and
// ν sampled on p^{-2w}Z_p at the grid's digits (w the window radius exponent); |ν| beyond that
// ball is summed in closed form.
class EngelHeatKernel {
public:
    EngelHeatKernel(int p, double alpha, PlancherelGrid grid);
    KernelEstimate operator()(double t, const GroupElement& g) const;

private:
    struct Sample {
        RepPoint point;
        RepWindow window;
        double weight;
        SymbolMatrix symbol;
    };
    struct Tail {
        RepPoint point;  // μ = 0
        RepWindow window;
        double weight;
        SymbolMatrix symbol;  // without the Y₁ potential
        int first_shell;      // of ν
    };
    int prime_;
    double alpha_;
    PlancherelGrid grid_;
    std::vector<Sample> samples_;
    std::vector<Tail> tails_;
};

}  // namespace ultrametric
