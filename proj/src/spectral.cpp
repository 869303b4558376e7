#include "ultrametric/spectral.hpp"

#include "ultrametric/kernels.hpp"

#include <cmath>
#include <numbers>

namespace ultrametric {

namespace {

double ipow(int p, double exponent) { return std::pow(static_cast<double>(p), exponent); }

Complex character(const Rational& phase, int p) {
    const double fraction = fractional_part(phase, p).convert_to<double>();
    return std::polar(1.0, 2.0 * std::numbers::pi * fraction);
}

int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

int min_valuation(const std::vector<Rational>& xs, int p) {
    int low = kInfiniteValuation;
    for (const auto& x : xs) low = std::min(low, valuation(x, p));
    return low;
}

// Mean of |u|^beta over the ball ‖u‖ <= p^{-inner} of Q_p.
double zero_cell_power_mean(int p, int inner, double beta) {
    return (1.0 - 1.0 / p) * ipow(p, -inner * beta) / (1.0 - ipow(p, -beta - 1.0));
}

// |u_j|^beta averaged over each cell.
Eigen::VectorXd coordinate_power(const RepWindow& window, int coordinate, double beta) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(window.size()));
    const double zero = zero_cell_power_mean(window.prime(), window.inner(), beta);
    for (std::size_t cell = 0; cell < window.size(); ++cell) {
        auto e = window.norm_exponent(cell, coordinate);
        out[static_cast<Eigen::Index>(cell)] = e ? ipow(window.prime(), *e * beta) : zero;
    }
    return out;
}

// Galerkin matrix of D^alpha along one coordinate. Cells of other coordinates are untouched.
ComplexMatrix kinetic_matrix(const RepWindow& window, int coordinate, double alpha) {
    const int p = window.prime();
    const auto n = static_cast<Eigen::Index>(window.size());
    const double c = vt_constant(p, alpha, 1.0);
    // ∫_{|w| > p^{-outer}} |w|^{-alpha-1} dw
    const double tail = (1.0 - 1.0 / p) * ipow(p, (window.outer() - 1) * alpha) / (1.0 - ipow(p, -alpha));
    const double cell_length = ipow(p, -window.inner());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (std::size_t a = 0; a < window.size(); ++a) {
        auto da = window.digits(a);
        double off = 0.0;
        for (std::int64_t other = 0; other < window.side(); ++other) {
            if (other == da[static_cast<std::size_t>(coordinate)]) continue;
            auto db = da;
            db[static_cast<std::size_t>(coordinate)] = other;
            const std::size_t b = window.index(db);
            const std::int64_t diff = da[static_cast<std::size_t>(coordinate)] - other;
            const int v = valuation(Integer(diff), p);
            const double distance = ipow(p, -window.outer() - v);
            const double entry = c * cell_length * std::pow(distance, -alpha - 1.0);
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = entry;
            off += entry;
        }
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = -off - c * tail;
    }
    return m;
}

// v_p(a + Σ_j b_j n_j) over the digits n_j of every cell, capped at cap.
std::vector<int> affine_valuations(const Rational& a, const std::vector<Rational>& b,
                                   const RepWindow& window, int cap) {
    const int p = window.prime();
    std::vector<Rational> all(b);
    all.push_back(a);
    const int low = std::min(0, min_valuation(all, p));
    const int shift = -low;
    const int precision = shift + cap;
    std::vector<int> out(window.size(), cap);
    if (precision <= 0) return out;

    unsigned __int128 modulus = 1;
    bool fits = true;
    for (int i = 0; i < precision && fits; ++i) {
        modulus *= static_cast<unsigned>(p);
        fits = modulus < (static_cast<unsigned __int128>(1) << 62);
    }
    const Rational scale = rational_power(p, shift);
    if (fits) {
        const auto m = static_cast<std::uint64_t>(modulus);
        const auto lift = [&](const Rational& x) {
            return residue(x * scale, p, precision).convert_to<std::uint64_t>();
        };
        const std::uint64_t base = lift(a);
        std::vector<std::uint64_t> slope;
        for (const auto& x : b) slope.push_back(lift(x));
        for (std::size_t cell = 0; cell < window.size(); ++cell) {
            auto digits = window.digits(cell);
            unsigned __int128 r = base;
            for (std::size_t j = 0; j < slope.size(); ++j)
                r += static_cast<unsigned __int128>(slope[j]) * static_cast<std::uint64_t>(digits[j]);
            auto value = static_cast<std::uint64_t>(r % m);
            if (value == 0) continue;
            int v = 0;
            while (value % static_cast<std::uint64_t>(p) == 0) {
                value /= static_cast<std::uint64_t>(p);
                ++v;
            }
            out[cell] = std::min(cap, v - shift);
        }
        return out;
    }
    for (std::size_t cell = 0; cell < window.size(); ++cell) {
        auto digits = window.digits(cell);
        Rational value = a;
        for (std::size_t j = 0; j < b.size(); ++j) value += b[j] * Rational(digits[j]);
        out[cell] = std::min(cap, valuation(value, p));
    }
    return out;
}

void require_heisenberg(const GroupElement& g, int d) {
    if (g.group.kind() != GroupKind::Heisenberg || g.group.rank() != d)
        throw DomainError("expected an element of H_d matching the window");
}

struct Shift {
    std::vector<std::size_t> permutation;
    bool inside = true;
};

Shift window_shift(const RepWindow& window, const std::vector<Rational>& x) {
    const int v = min_valuation(x, window.prime());
    if (v < window.outer()) return {{}, false};
    return {window.shift_permutation(x), true};
}

// a(u) = z + x·y/2 + y·u for H_d coordinates, split as a0 + Σ_j b_j n_j on the window digits.
std::pair<Rational, std::vector<Rational>> heisenberg_phase(const GroupElement& g, const RepWindow& window) {
    const int d = window.dimension();
    Rational a0 = g.coords[static_cast<std::size_t>(2 * d)];
    std::vector<Rational> b;
    const Rational unit = rational_power(window.prime(), window.outer());
    for (int j = 0; j < d; ++j) {
        const auto& x = g.coords[static_cast<std::size_t>(j)];
        const auto& y = g.coords[static_cast<std::size_t>(d + j)];
        a0 += x * y / 2;
        b.push_back(y * unit);
    }
    return {a0, b};
}

// C π_λ(g) C with C the cell averaging: row u holds phase(u) at column perm(u).
struct Monomial {
    std::vector<std::size_t> column;
    std::vector<Complex> value;
};

Monomial compressed_schrodinger(const RepPoint& point, const GroupElement& g, const RepWindow& window) {
    const int d = window.dimension();
    std::vector<Rational> x(g.coords.begin(), g.coords.begin() + d);
    std::vector<Rational> y(g.coords.begin() + d, g.coords.begin() + 2 * d);
    Monomial out;
    auto shift = window_shift(window, x);
    if (!shift.inside) return out;
    out.column = std::move(shift.permutation);
    out.value.assign(window.size(), Complex(0.0));
    // the character e(λ y·w) over a cell averages to 0 unless it is trivial there
    const int vy = min_valuation(y, window.prime());
    if (vy != kInfiniteValuation && valuation(point.lambda, window.prime()) + vy + window.inner() < 0)
        return out;
    auto [a0, b] = heisenberg_phase(g, window);
    for (std::size_t cell = 0; cell < window.size(); ++cell) {
        auto digits = window.digits(cell);
        Rational a = a0;
        for (int j = 0; j < d; ++j) a += b[static_cast<std::size_t>(j)] * Rational(digits[static_cast<std::size_t>(j)]);
        out.value[cell] = character(point.lambda * a, window.prime());
    }
    return out;
}

ComplexMatrix to_matrix(const Monomial& m, std::size_t n) {
    const auto size = static_cast<Eigen::Index>(n);
    ComplexMatrix out = ComplexMatrix::Zero(size, size);
    for (std::size_t u = 0; u < m.column.size(); ++u)
        out(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(m.column[u])) = m.value[u];
    return out;
}

// ∫_{‖λ‖=p^k} of the cell-averaged phase e(λ a(u)) for every cell u.
std::vector<double> shell_phase_integrals(const GroupElement& g, int k, const RepWindow& window) {
    const int p = window.prime();
    const int d = window.dimension();
    std::vector<Rational> y(g.coords.begin() + d, g.coords.begin() + 2 * d);
    const int vy = min_valuation(y, p);
    const bool spread_out = vy != kInfiniteValuation;
    // y·w over a cell fills the ball of radius p^{-spread}
    const int spread = spread_out ? vy + window.inner() : 0;
    auto [a0, b] = heisenberg_phase(g, window);
    const int cap = spread_out ? std::max(k, spread) : k;
    const auto vals = affine_valuations(a0, b, window, cap);
    const auto ball = [&](int j, int v) {
        if (!spread_out || spread >= j) return v >= j ? ipow(p, j) : 0.0;
        return v >= spread ? ipow(p, spread) : 0.0;
    };
    std::vector<double> out(window.size());
    for (std::size_t cell = 0; cell < window.size(); ++cell)
        out[cell] = ball(k, vals[cell]) - ball(k - 1, vals[cell]);
    return out;
}

bool is_boundary(const RepWindow& window, std::size_t cell) {
    for (int j = 0; j < window.dimension(); ++j) {
        auto e = window.norm_exponent(cell, j);
        if (e && *e == -window.outer()) return true;
    }
    return false;
}

}  // namespace

RepPoint RepPoint::heisenberg(const Rational& lambda, int p) {
    if (lambda == 0) throw DomainError("Schrödinger representation needs λ != 0");
    return {GroupKind::Heisenberg, p, lambda, Rational(0), square_class(lambda, p)};
}

RepPoint RepPoint::engel(const Rational& lambda, const Rational& mu, int p) {
    if (lambda == 0) throw DomainError("generic E_4 representation needs λ != 0");
    return {GroupKind::Engel, p, lambda, mu, square_class(lambda, p)};
}

int RepPoint::shell() const { return -valuation(lambda, prime); }

RepWindow::RepWindow(int prime, int d, int truncation, int scale)
    : prime_(prime), dimension_(d), truncation_(truncation), scale_(scale) {
    if (truncation < 0 || d < 1) throw DomainError("representation window: bad truncation or dimension");
    side_ = 1;
    for (int i = 0; i < 2 * truncation; ++i) side_ *= prime;
    size_ = 1;
    for (int j = 0; j < d; ++j) size_ *= static_cast<std::size_t>(side_);
}

double RepWindow::cell_weight() const { return ipow(prime_, -inner() * dimension_); }

std::vector<std::int64_t> RepWindow::digits(std::size_t cell) const {
    std::vector<std::int64_t> out(static_cast<std::size_t>(dimension_));
    for (auto& digit : out) {
        digit = static_cast<std::int64_t>(cell % static_cast<std::size_t>(side_));
        cell /= static_cast<std::size_t>(side_);
    }
    return out;
}

std::size_t RepWindow::index(const std::vector<std::int64_t>& digits) const {
    std::size_t out = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it)
        out = out * static_cast<std::size_t>(side_) + static_cast<std::size_t>(*it);
    return out;
}

std::vector<Rational> RepWindow::representative(std::size_t cell) const {
    const Rational unit = rational_power(prime_, outer());
    std::vector<Rational> out;
    for (auto digit : digits(cell)) out.push_back(unit * Rational(digit));
    return out;
}

std::optional<int> RepWindow::norm_exponent(std::size_t cell, int coordinate) const {
    const auto digit = digits(cell)[static_cast<std::size_t>(coordinate)];
    if (digit == 0) return std::nullopt;
    return -outer() - valuation(Integer(digit), prime_);
}

std::vector<std::size_t> RepWindow::shift_permutation(const std::vector<Rational>& shift) const {
    if (static_cast<int>(shift.size()) != dimension_) throw DomainError("shift has the wrong dimension");
    std::vector<std::int64_t> steps;
    const Rational unit = rational_power(prime_, -outer());
    for (const auto& s : shift) {
        if (valuation(s, prime_) < outer()) throw DomainError("shift leaves the representation window");
        steps.push_back(residue(s * unit, prime_, 2 * truncation_).convert_to<std::int64_t>());
    }
    std::vector<std::size_t> out(size_);
    for (std::size_t cell = 0; cell < size_; ++cell) {
        auto d = digits(cell);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = (d[j] + steps[j]) % side_;
        out[cell] = index(d);
    }
    return out;
}

int heisenberg_window_scale(int shell) { return ceil_div(shell, 2); }
int engel_window_scale(int shell) { return ceil_div(shell, 3); }

ComplexMatrix schrodinger_matrix(const RepPoint& point, const GroupElement& g, const RepWindow& window) {
    require_heisenberg(g, window.dimension());
    const int d = window.dimension();
    std::vector<Rational> x(g.coords.begin(), g.coords.begin() + d);
    std::vector<Rational> y(g.coords.begin() + d, g.coords.begin() + 2 * d);
    if (min_valuation(x, window.prime()) < window.outer())
        throw DomainError("π_λ(g) shifts out of the representation window");
    const int vy = min_valuation(y, window.prime());
    if (vy != kInfiniteValuation && valuation(point.lambda, window.prime()) + vy + window.inner() < 0)
        throw DomainError("π_λ(g) phase is not resolved by the window cells");
    return to_matrix(compressed_schrodinger(point, g, window), window.size());
}

ComplexVector schrodinger_apply(const RepPoint& point, const GroupElement& g, const RepWindow& window,
                                const ComplexVector& phi) {
    return schrodinger_matrix(point, g, window) * phi;
}

ComplexMatrix engel_rep_matrix(const RepPoint& point, const GroupElement& g, const RepWindow& window) {
    if (g.group.kind() != GroupKind::Engel || point.kind != GroupKind::Engel || window.dimension() != 1)
        throw DomainError("engel_rep_matrix: expected E_4 data on a one-dimensional window");
    const int p = window.prime();
    const auto& c = g.coords;
    if (valuation(c[0], p) < window.outer()) throw DomainError("π_{λ,μ}(g) shifts out of the representation window");
    const int vl = valuation(point.lambda, p);
    const bool y1 = c[1] != 0;
    const bool y2 = c[2] != 0;
    if ((y2 && vl + valuation(c[2], p) + window.inner() < 0) ||
        (y1 && vl + valuation(c[1], p) + window.outer() + window.inner() < 0))
        throw DomainError("π_{λ,μ}(g) phase is not resolved by the window cells");
    const Rational constant = -point.mu / (2 * point.lambda) * c[1] + point.lambda * c[3];
    auto permutation = window.shift_permutation({c[0]});
    const auto n = static_cast<Eigen::Index>(window.size());
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (std::size_t cell = 0; cell < window.size(); ++cell) {
        const Rational u = window.representative(cell)[0];
        const Rational phase = constant - point.lambda * c[2] * u + point.lambda / 2 * c[1] * u * u;
        out(static_cast<Eigen::Index>(cell), static_cast<Eigen::Index>(permutation[cell])) = character(phase, p);
    }
    return out;
}

ComplexVector engel_rep_apply(const RepPoint& point, const GroupElement& g, const RepWindow& window,
                              const ComplexVector& phi) {
    return engel_rep_matrix(point, g, window) * phi;
}

ComplexMatrix representation_matrix(const RepPoint& point, const GroupElement& g, const RepWindow& window) {
    return point.kind == GroupKind::Engel ? engel_rep_matrix(point, g, window)
                                          : schrodinger_matrix(point, g, window);
}

ComplexMatrix subgroup_average(int prime, int d, int shell, int level, const RepWindow& window) {
    const auto n = static_cast<Eigen::Index>(window.size());
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    if (shell > 2 * level) return out;
    const double central = ipow(prime, -2 * level) * ipow(prime, -level * d);
    // ‖u‖ <= p^{level - shell}, exact per cell unless the ball is smaller than a cell
    const int radius = level - shell;
    std::vector<double> indicator(window.size(), 0.0);
    for (std::size_t cell = 0; cell < window.size(); ++cell) {
        bool inside = true;
        bool origin = true;
        for (int j = 0; j < d; ++j) {
            auto e = window.norm_exponent(cell, j);
            if (e) {
                origin = false;
                if (*e > radius) inside = false;
            }
        }
        if (radius >= -window.inner()) indicator[cell] = inside ? 1.0 : 0.0;
        else indicator[cell] = origin ? ipow(prime, (radius + window.inner()) * d) : 0.0;
    }
    const double weight = window.cell_weight();
    for (std::size_t u = 0; u < window.size(); ++u) {
        if (indicator[u] == 0.0) continue;
        const double row = central * indicator[u];
        if (level >= window.inner()) {
            out(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u)) = row * ipow(prime, -level * d);
            continue;
        }
        auto du = window.digits(u);
        // cells w with w ≡ u mod p^level: digits agree mod p^{level - outer}
        std::int64_t block = 1;
        for (int i = 0; i < level - window.outer(); ++i) block *= prime;
        for (std::size_t w = 0; w < window.size(); ++w) {
            if (level > window.outer()) {
                auto dw = window.digits(w);
                bool same = true;
                for (int j = 0; j < d && same; ++j) same = (du[static_cast<std::size_t>(j)] - dw[static_cast<std::size_t>(j)]) % block == 0;
                if (!same) continue;
            }
            out(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(w)) = row * weight;
        }
    }
    return out;
}

ComplexMatrix fourier_group(const TestFunction& f, const RepPoint& point, const RepWindow& window) {
    const auto& group = f.group();
    if (group.kind() != GroupKind::Heisenberg || group.rank() != window.dimension() || point.kind != GroupKind::Heisenberg)
        throw DomainError("fourier_group: expected a function on H_d and a Schrödinger point");
    const auto n = static_cast<Eigen::Index>(window.size());
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    const auto& cells = f.window();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (f[c] == Complex(0.0)) continue;
        auto m = compressed_schrodinger(point, inverse(cells.representative(c)), window);
        for (std::size_t u = 0; u < m.column.size(); ++u)
            sum(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(m.column[u])) += f[c] * m.value[u];
    }
    return subgroup_average(window.prime(), window.dimension(), point.shell(), cells.inner(), window) * sum;
}

ComplexMatrix directional_symbol(const RepPoint& point, int coordinate, double alpha, const RepWindow& window) {
    const int p = window.prime();
    const auto n = static_cast<Eigen::Index>(window.size());
    const double lambda_norm = ipow(p, point.shell());
    if (point.kind == GroupKind::Heisenberg) {
        const int d = window.dimension();
        if (coordinate < 0 || coordinate > 2 * d) throw DomainError("directional_symbol: bad coordinate");
        if (coordinate < d) return kinetic_matrix(window, coordinate, alpha);
        if (coordinate == 2 * d) return std::pow(lambda_norm, alpha) * ComplexMatrix::Identity(n, n);
        Eigen::VectorXd potential = std::pow(lambda_norm, alpha) * coordinate_power(window, coordinate - d, alpha);
        return potential.cast<Complex>().asDiagonal();
    }
    if (point.kind != GroupKind::Engel || window.dimension() != 1)
        throw DomainError("directional_symbol: unsupported representation");
    switch (coordinate) {
        case 0: return kinetic_matrix(window, 0, alpha);
        case 1: {
            // |λ/2 u² - μ/(2λ)| at the cell representative
            Eigen::VectorXd potential(n);
            for (std::size_t cell = 0; cell < window.size(); ++cell) {
                const Rational u = window.representative(cell)[0];
                const Rational q = point.lambda / 2 * u * u - point.mu / (2 * point.lambda);
                potential[static_cast<Eigen::Index>(cell)] = std::pow(norm(q, p).value(p), alpha);
            }
            return potential.cast<Complex>().asDiagonal();
        }
        case 2: {
            Eigen::VectorXd potential = std::pow(lambda_norm, alpha) * coordinate_power(window, 0, alpha);
            return potential.cast<Complex>().asDiagonal();
        }
        case 3: return std::pow(lambda_norm, alpha) * ComplexMatrix::Identity(n, n);
        default: throw DomainError("directional_symbol: bad coordinate");
    }
}

SymbolMatrix::SymbolMatrix(RepPoint point, RepWindow window, ComplexMatrix matrix)
    : point_(std::move(point)), window_(std::move(window)), matrix_(std::move(matrix)) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(matrix_);
    if (solver.info() != Eigen::Success) throw std::runtime_error("symbol eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
}

double SymbolMatrix::hermitian_defect() const { return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff(); }

ComplexMatrix SymbolMatrix::apply_function(const std::function<double(double)>& fn) const {
    Eigen::VectorXd values = eigenvalues_.unaryExpr(fn);
    return eigenvectors_ * values.cast<Complex>().asDiagonal() * eigenvectors_.adjoint();
}

SymbolMatrix symbol_matrix(SymbolKind op, const RepPoint& point, double alpha, const RepWindow& window) {
    if (!(alpha > 0.0)) throw DomainError("symbol_matrix: alpha must be positive");
    const auto n = static_cast<Eigen::Index>(window.size());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    if (op == SymbolKind::EngelLaplacian) {
        if (point.kind != GroupKind::Engel) throw DomainError("Engel Laplacian needs an E_4 point");
        m = directional_symbol(point, 0, alpha, window) + directional_symbol(point, 1, alpha, window) +
            directional_symbol(point, 2, alpha / 2.0, window) + directional_symbol(point, 3, alpha / 3.0, window);
        return {point, window, std::move(m)};
    }
    if (point.kind != GroupKind::Heisenberg) throw DomainError("H_d symbol needs a Schrödinger point");
    const int d = window.dimension();
    for (int j = 0; j < 2 * d; ++j) m += directional_symbol(point, j, alpha, window);
    if (op == SymbolKind::Laplacian) m += directional_symbol(point, 2 * d, alpha / 2.0, window);
    return {point, window, std::move(m)};
}

ComplexMatrix heat_semigroup_symbol(const SymbolMatrix& symbol, double t) {
    if (!(t >= 0.0)) throw DomainError("heat semigroup: t must be nonnegative");
    return symbol.apply_function([t](double e) { return std::exp(-t * e); });
}

PlancherelGrid PlancherelGrid::symmetric(int shells, int truncation, int digits) {
    return {-shells, shells, truncation, digits};
}

PlancherelGrid PlancherelGrid::dilated(int valuation) const {
    return {first_shell - 2 * valuation, last_shell - 2 * valuation, truncation, digits};
}

HeisenbergField::HeisenbergField(int p, int d, PlancherelGrid grid, std::vector<Shell> shells)
    : prime_(p), dimension_(d), grid_(grid), shells_(std::move(shells)) {}

Complex HeisenbergField::shell_trace(const Shell& shell, const GroupElement& g, const ComplexMatrix& field) const {
    const int d = dimension_;
    std::vector<Rational> x(g.coords.begin(), g.coords.begin() + d);
    auto shift = window_shift(shell.window, x);
    if (!shift.inside) return 0.0;
    const auto s = shell_phase_integrals(g, shell.k, shell.window);
    Complex total = 0.0;
    for (std::size_t u = 0; u < s.size(); ++u) {
        if (s[u] == 0.0) continue;
        total += s[u] * field(static_cast<Eigen::Index>(shift.permutation[u]), static_cast<Eigen::Index>(u));
    }
    return ipow(prime_, shell.k * d) * total;
}

KernelEstimate HeisenbergField::operator()(const GroupElement& g) const {
    require_heisenberg(g, dimension_);
    KernelEstimate out{0.0, 0.0};
    for (std::size_t i = 0; i < shells_.size(); ++i) {
        const Complex term = shell_trace(shells_[i], g, shells_[i].field);
        out.value += term;
        if (i == 0 || i + 1 == shells_.size()) out.remainder += std::abs(term);
        out.remainder += shells_[i].boundary_weight;
    }
    return out;
}

const ComplexMatrix& HeisenbergField::averaged(const Shell& shell, int level) const {
    auto key = std::make_pair(shell.k, level);
    auto it = averaged_.find(key);
    if (it == averaged_.end())
        it = averaged_.emplace(key, subgroup_average(prime_, dimension_, shell.k, level, shell.window) * shell.field).first;
    return it->second;
}

Complex HeisenbergField::cell_integral(const GroupElement& c, int level) const {
    require_heisenberg(c, dimension_);
    Complex total = 0.0;
    for (const auto& shell : shells_) {
        if (shell.k > 2 * level) continue;
        total += shell_trace(shell, c, averaged(shell, level));
    }
    return total;
}

Complex HeisenbergField::pair(const TestFunction& f) const {
    const auto& cells = f.window();
    Complex total = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (f[c] == Complex(0.0)) continue;
        total += f[c] * cell_integral(cells.representative(c), cells.inner());
    }
    return total;
}

HeisenbergSpectrum::HeisenbergSpectrum(int p, int d, double alpha, PlancherelGrid grid, SymbolKind op)
    : prime_(p), dimension_(d), alpha_(alpha), grid_(grid) {
    if (op == SymbolKind::EngelLaplacian) throw DomainError("HeisenbergSpectrum: Engel symbol requested");
    if (grid.first_shell > grid.last_shell) throw DomainError("Plancherel grid has no shells");
    for (int k = grid.first_shell; k <= grid.last_shell; ++k) {
        RepWindow window(p, d, grid.truncation, heisenberg_window_scale(k));
        symbols_.push_back(symbol_matrix(op, RepPoint::heisenberg(rational_power(p, -k), p), alpha, window));
    }
}

HeisenbergField HeisenbergSpectrum::field(const std::function<double(double)>& multiplier) const {
    std::vector<HeisenbergField::Shell> shells;
    for (const auto& symbol : symbols_) {
        const auto& window = symbol.window();
        const int k = symbol.point().shell();
        const auto& v = symbol.eigenvectors();
        double boundary = 0.0;
        for (Eigen::Index e = 0; e < v.cols(); ++e) {
            double mass = 0.0;
            for (std::size_t cell = 0; cell < window.size(); ++cell)
                if (is_boundary(window, cell)) mass += std::norm(v(static_cast<Eigen::Index>(cell), e));
            boundary += std::abs(multiplier(symbol.eigenvalues()[e])) * mass;
        }
        boundary *= ipow(prime_, k * dimension_) * (1.0 - 1.0 / prime_) * ipow(prime_, k);
        shells.push_back({k, window, symbol.apply_function(multiplier), boundary});
    }
    return HeisenbergField(prime_, dimension_, grid_, std::move(shells));
}

HeisenbergField HeisenbergSpectrum::heat(double t) const {
    if (!(t > 0.0)) throw DomainError("heat kernel: t must be positive");
    return field([t](double e) { return std::exp(-t * e); });
}

HeisenbergField HeisenbergSpectrum::inverse() const {
    for (const auto& symbol : symbols_)
        if (!(symbol.eigenvalues()[0] > 0.0)) throw DomainError("symbol is singular on the grid");
    return field([](double e) { return 1.0 / e; });
}

KernelEstimate heisenberg_heat_kernel(double t, const GroupElement& g, double alpha, const PlancherelGrid& grid) {
    require_heisenberg(g, g.group.rank());
    return HeisenbergSpectrum(g.group.prime(), g.group.rank(), alpha, grid).heat(t)(g);
}

namespace {

void require_mean_zero(const TestFunction& f) {
    double scale = 0.0;
    for (auto v : f.values()) scale += std::abs(v);
    if (std::abs(integrate(f)) > 1e-12 * scale * f.window().cell_weight())
        throw DomainError("fundamental solution pairing needs a mean-zero function");
}

}  // namespace

Complex formal_fundamental_solution_pair(const TestFunction& f, SymbolKind op, double alpha, const PlancherelGrid& grid) {
    if (f.group().kind() != GroupKind::Heisenberg) throw DomainError("formal fundamental solution: H_d only");
    require_mean_zero(f);
    return HeisenbergSpectrum(f.group().prime(), f.group().rank(), alpha, grid, op).inverse().pair(f);
}

Complex heat_route_pair(const TestFunction& f, double alpha, const PlancherelGrid& grid) {
    if (f.group().kind() != GroupKind::Heisenberg) throw DomainError("heat route: H_d only");
    require_mean_zero(f);
    const int p = f.group().prime();
    HeisenbergSpectrum spectrum(p, f.group().rank(), alpha, grid);
    return spectrum.field([p](double e) { return log_grid_transform(e, 1.0, p); }).pair(f);
}

KernelEstimate riesz_potential_group(double beta, double alpha, const GroupElement& g, const PlancherelGrid& grid) {
    require_heisenberg(g, g.group.rank());
    const int q = g.group.homogeneous_dimension();
    if (!(beta > 0.0 && beta < q)) throw DomainError("Riesz potential needs 0 < beta < Q");
    const int p = g.group.prime();
    const double a = beta / alpha;
    const double gamma = std::tgamma(a);
    HeisenbergSpectrum spectrum(p, g.group.rank(), alpha, grid);
    return spectrum.field([=](double e) { return log_grid_transform(e, a, p) / gamma; })(g);
}

double plancherel_integral(const TestFunction& f, const PlancherelGrid& grid) {
    const int p = f.group().prime();
    const int d = f.group().rank();
    double total = 0.0;
    std::int64_t units = 1;
    for (int i = 0; i < grid.digits; ++i) units *= p;
    for (int k = grid.first_shell; k <= grid.last_shell; ++k) {
        RepWindow window(p, d, grid.truncation, heisenberg_window_scale(k));
        const double weight = ipow(p, k - grid.digits) * ipow(p, k * d);
        for (std::int64_t n = 1; n < units; ++n) {
            if (n % p == 0) continue;
            auto point = RepPoint::heisenberg(rational_power(p, -k) * Rational(n), p);
            total += weight * fourier_group(f, point, window).squaredNorm();
        }
    }
    return total;
}

EngelHeatKernel::EngelHeatKernel(int p, double alpha, PlancherelGrid grid) : prime_(p), alpha_(alpha), grid_(grid) {
    if (grid.first_shell > grid.last_shell) throw DomainError("Plancherel grid has no shells");
    std::int64_t units = 1;
    for (int i = 0; i < grid.digits; ++i) units *= p;
    for (int k = grid.first_shell; k <= grid.last_shell; ++k) {
        RepWindow window(p, 1, grid.truncation, engel_window_scale(k));
        const int radius = -window.outer();  // |u| <= p^radius
        const double lambda_weight = ipow(p, k - grid.digits) * ipow(p, 2 * k);
        for (std::int64_t n = 1; n < units; ++n) {
            if (n % p == 0) continue;
            const Rational lambda = rational_power(p, -k) * Rational(n);
            for (std::int64_t m = 0; m < units; ++m) {
                const Rational nu = rational_power(p, -2 * radius) * Rational(m);
                auto point = RepPoint::engel(lambda, lambda * lambda * nu, p);
                samples_.push_back({point, window, lambda_weight * ipow(p, 2 * radius - grid.digits),
                                    symbol_matrix(SymbolKind::EngelLaplacian, point, alpha, window)});
            }
            auto point = RepPoint::engel(lambda, Rational(0), p);
            ComplexMatrix rest = directional_symbol(point, 0, alpha, window) +
                                 directional_symbol(point, 2, alpha / 2.0, window) +
                                 directional_symbol(point, 3, alpha / 3.0, window);
            tails_.push_back({point, window, lambda_weight, SymbolMatrix(point, window, std::move(rest)), 2 * radius + 1});
        }
    }
}

KernelEstimate EngelHeatKernel::operator()(double t, const GroupElement& g) const {
    if (!(t > 0.0)) throw DomainError("heat kernel: t must be positive");
    if (g.group.kind() != GroupKind::Engel || g.group.prime() != prime_) throw DomainError("expected an element of E_4");
    const int p = prime_;
    const Rational& y1 = g.coords[1];
    Complex total = 0.0;
    std::vector<double> shell_size(static_cast<std::size_t>(grid_.last_shell - grid_.first_shell + 1), 0.0);
    const auto record = [&](int k, Complex term) {
        total += term;
        shell_size[static_cast<std::size_t>(k - grid_.first_shell)] += std::abs(term);
    };
    for (const auto& s : samples_) {
        // the character e(-λνy₁/2) averaged over the ν-cell
        const int radius = -s.window.outer();
        const Rational phase_scale = s.point.lambda * y1 / 2;
        if (y1 != 0 && valuation(phase_scale, p) + grid_.digits - 2 * radius < 0) continue;
        const ComplexMatrix rep = engel_rep_matrix(s.point, g, s.window);
        const ComplexMatrix heat = heat_semigroup_symbol(s.symbol, t);
        record(s.point.shell(), s.weight * rep.cwiseProduct(heat.transpose()).sum());
    }
    for (const auto& tail : tails_) {
        const int k = tail.point.shell();
        const NormExponent phase_norm = norm(tail.point.lambda * y1 / 2, p);
        const double potential_unit = std::pow(norm(tail.point.lambda / 2, p).value(p), alpha_);
        double factor = 0.0;
        for (int j = tail.first_shell;; ++j) {
            const double decay = std::exp(-t * potential_unit * ipow(p, j * alpha_));
            factor += character_sphere_integral(phase_norm, p, 1, j) * decay;
            if (decay * ipow(p, j) < 1e-18) break;
        }
        if (factor == 0.0) continue;
        const ComplexMatrix rep = engel_rep_matrix(tail.point, g, tail.window);
        const ComplexMatrix heat = heat_semigroup_symbol(tail.symbol, t);
        record(k, tail.weight * factor * rep.cwiseProduct(heat.transpose()).sum());
    }
    return {total, shell_size.front() + (shell_size.size() > 1 ? shell_size.back() : 0.0)};
}

}  // namespace ultrametric
