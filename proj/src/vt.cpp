#include "ultrametric/vt.hpp"

#include <cmath>

namespace ultrametric {

namespace {

void require_positive(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("VT operator: alpha must be positive");
}

// f restricted to G_k, which must contain its support.
TestFunction restrict_support(const TestFunction& f, int k) {
    const auto& source = f.window();
    if (source.outer() >= k) return embed(f, k, std::max(source.inner(), k));
    CosetWindow target(f.group(), k, std::max(source.inner(), k));
    Frame frame(f.group(), source.outer(), target.inner());
    TestFunction out(target);
    std::vector<bool> inside(source.size(), false);
    for (std::size_t c = 0; c < target.size(); ++c) {
        auto cell = *frame.locate(source, frame.embed_cell(target, c));
        out[c] = f[cell];
        inside[cell] = true;
    }
    for (std::size_t c = 0; c < source.size(); ++c)
        if (!inside[c] && f[c] != Complex{}) throw DomainError("compact VT operator: support outside G_k");
    return out;
}

}  // namespace

TestFunction level_kernel_apply(const TestFunction& f, const std::vector<double>& weight,
                                double diagonal) {
    const auto& window = f.window();
    const int depth = window.depth();
    const std::size_t n = window.size();
    TestFunction out(window);
    if (depth == 0) {
        out[0] = diagonal * f[0];
        return out;
    }
    std::vector<Complex> bucket(static_cast<std::size_t>(depth) + 1);

    if (n <= kMaxLevelTableCells) {
        auto table = level_table(window.group(), depth);
        for (std::size_t x = 0; x < n; ++x) {
            std::fill(bucket.begin(), bucket.end(), Complex{});
            const std::int8_t* row = table->row(x);
            for (std::size_t r = 0; r < n; ++r) bucket[static_cast<std::size_t>(row[r])] += f[r];
            Complex sum = diagonal * f[x];
            for (int m = 0; m < depth; ++m)
                sum += weight[static_cast<std::size_t>(m)] *
                       (bucket[static_cast<std::size_t>(m)] - static_cast<double>(table->count_at(m)) * f[x]);
            out[x] = sum;
        }
        return out;
    }

    Frame frame(window.group(), window.outer(), window.inner());
    std::vector<ModPoint> inverses(n), points(n);
    for (std::size_t c = 0; c < n; ++c) {
        points[c] = frame.embed_cell(window, c);
        inverses[c] = frame.inverse(points[c]);
    }
    for (std::size_t x = 0; x < n; ++x) {
        Complex sum = diagonal * f[x];
        for (std::size_t r = 0; r < n; ++r) {
            if (r == x) continue;
            int m = frame.level(frame.product(inverses[r], points[x])) - window.outer();
            sum += weight[static_cast<std::size_t>(m)] * (f[r] - f[x]);
        }
        out[x] = sum;
    }
    return out;
}

double vt_constant(double q, double alpha, double dim) {
    return (1.0 - std::pow(q, alpha)) / (1.0 - std::pow(q, -(alpha + dim)));
}

Complex VTResult::at(const GroupElement& x) const {
    auto cell = values.window().locate(x);
    if (cell) return values[*cell];
    if (!has_tail) throw DomainError("VTResult: no closed-form tail for this operator");
    auto norm = quasi_norm(x);
    return tail_coefficient * std::pow(static_cast<double>(x.group.prime()), norm.exponent * tail_exponent) * integral;
}

VTResult vt_apply(const TestFunction& f, double alpha) {
    require_positive(alpha);
    const auto& window = f.window();
    const double p = window.group().prime();
    const double q = window.group().homogeneous_dimension();
    const int outer = window.outer(), inner = window.inner();
    const double c = vt_constant(p, alpha, q);

    std::vector<double> weight(static_cast<std::size_t>(window.depth()));
    for (int m = 0; m < window.depth(); ++m)
        weight[static_cast<std::size_t>(m)] = c * std::pow(p, (m + outer) * (alpha + q) - q * inner);
    // y with xy^{-1} off the window: -f(x) C ∫_{|y| > p^{-outer}} |y|^{-(alpha+Q)} dy
    double outside = -c * (1.0 - std::pow(p, -q)) * std::pow(p, outer * alpha) / (std::pow(p, alpha) - 1.0);

    VTResult result{level_kernel_apply(f, weight, outside), c, -(alpha + q), integrate(f), true};
    return result;
}

VTResult vt_apply(const TestFunction& f, double alpha, const CosetWindow& out_window) {
    if (!(out_window.group() == f.group())) throw DomainError("vt_apply: descriptor mismatch");
    if (out_window.inner() < f.window().inner())
        throw DomainError("vt_apply: output window coarser than the input constancy level");
    int outer = std::min(out_window.outer(), f.window().outer());
    VTResult full = vt_apply(embed(f, outer, out_window.inner()), alpha);
    if (outer == out_window.outer()) return full;
    Frame frame(f.group(), outer, out_window.inner());
    TestFunction values(out_window);
    for (std::size_t c = 0; c < out_window.size(); ++c)
        values[c] = full.values[*frame.locate(full.values.window(), frame.embed_cell(out_window, c))];
    full.values = std::move(values);
    return full;
}

TestFunction vt_compact_apply(const TestFunction& f, double alpha, int k) {
    require_positive(alpha);
    TestFunction local = restrict_support(f, k);
    const auto& window = local.window();
    const double kappa = std::pow(static_cast<double>(f.group().prime()), f.group().homogeneous_dimension());
    const double c = vt_constant(kappa, alpha, 1.0);
    const double c0 = (1.0 - 1.0 / kappa) / (1.0 - std::pow(kappa, -alpha - 1.0));
    std::vector<double> weight(static_cast<std::size_t>(window.depth()));
    // d_k y = ϰ^k dy, |y|_{𝒢_k} = ϰ^{-m} at relative level m
    for (int m = 0; m < window.depth(); ++m)
        weight[static_cast<std::size_t>(m)] =
            c * std::pow(kappa, (k - window.inner()) + m * (alpha + 1.0));
    return level_kernel_apply(local, weight, c0);
}

Complex SplitDecomposition::at(const GroupElement& x, double alpha) const {
    auto cell = main.window().locate(x);
    if (cell) return main[*cell];
    auto norm = vilenkin_norm(x);
    return tail_coefficient * std::pow(static_cast<double>(x.group.prime()), -norm.exponent * (alpha + 1.0)) * integral;
}

SplitDecomposition vt_split_decompose(const TestFunction& f, double alpha, int l) {
    require_positive(alpha);
    if (l > f.window().outer()) throw DomainError("vt_split_decompose: l exceeds the support level");
    const double kappa = std::pow(static_cast<double>(f.group().prime()), f.group().homogeneous_dimension());
    TestFunction main = vt_compact_apply(f, alpha, l);
    main *= std::pow(kappa, l * alpha);
    return {std::move(main), vt_constant(kappa, alpha, 1.0), integrate(f), l};
}

VTResult directional_vt_apply(const TestFunction& f, int coordinate, double alpha) {
    require_positive(alpha);
    const auto& group = f.group();
    if (coordinate < 0 || coordinate >= group.dimension()) throw DomainError("directional VT: bad coordinate");
    const auto& window = f.window();
    const int weight = group.weights()[static_cast<std::size_t>(coordinate)];
    const double p = group.prime();
    const int outer = window.outer(), inner = window.inner();
    const double c = vt_constant(p, alpha, 1.0);

    // t = p^{weight*outer} j, one t-cell per j mod p^{weight*depth}; cell measure p^{-weight*inner}
    const std::int64_t cells = window.radix()[static_cast<std::size_t>(coordinate)];
    Frame frame(group, outer, inner);
    std::vector<ModPoint> steps;
    std::vector<double> kernel;
    for (std::int64_t j = 1; j < cells; ++j) {
        int v = 0;
        for (std::int64_t r = j; r % static_cast<std::int64_t>(p) == 0; r /= static_cast<std::int64_t>(p)) ++v;
        steps.push_back(frame.axis_point(coordinate, -j, 0));
        kernel.push_back(c * std::pow(p, (weight * outer + v) * (alpha + 1.0) - weight * inner));
    }
    // |t| > p^{-weight*outer}: the shifted point leaves the support
    const double outside = -c * (1.0 - 1.0 / p) * std::pow(p, weight * outer * alpha) / (std::pow(p, alpha) - 1.0);

    TestFunction out(window);
    for (std::size_t x = 0; x < window.size(); ++x) {
        ModPoint base = frame.embed_cell(window, x);
        Complex sum = outside * f[x];
        for (std::size_t i = 0; i < steps.size(); ++i) {
            auto cell = *frame.locate(window, frame.product(base, steps[i]));
            sum += kernel[i] * (f[cell] - f[x]);
        }
        out[x] = sum;
    }
    return VTResult{std::move(out), 0.0, 0.0, integrate(f), false};
}

VTResult vladimirov_laplacian_apply(const TestFunction& f, double alpha) {
    require_positive(alpha);
    const auto& weights = f.group().weights();
    TestFunction total(f.window());
    for (int k = 0; k < f.group().dimension(); ++k)
        total += directional_vt_apply(f, k, alpha / weights[static_cast<std::size_t>(k)]).values;
    return VTResult{std::move(total), 0.0, 0.0, integrate(f), false};
}

VTResult sub_laplacian_apply(const TestFunction& f, double alpha) {
    require_positive(alpha);
    if (f.group().kind() != GroupKind::Heisenberg)
        throw DomainError("sub-Laplacian: defined on Heisenberg groups only");
    TestFunction total(f.window());
    for (int k = 0; k < 2 * f.group().rank(); ++k) total += directional_vt_apply(f, k, alpha).values;
    return VTResult{std::move(total), 0.0, 0.0, integrate(f), false};
}

double jump_kernel_radial(double q, int homogeneous_dimension, double alpha, int k) {
    require_positive(alpha);
    return -vt_constant(q, alpha, homogeneous_dimension) * std::pow(q, -(alpha + homogeneous_dimension) * k);
}

double jump_kernel_series(double q, int homogeneous_dimension, double alpha, int k, int terms) {
    require_positive(alpha);
    double sum = 0.0;
    for (int n = 0; n < terms; ++n) {
        double lower = std::pow(q, alpha * (k + n)) / std::pow(q, alpha);
        double upper = std::pow(q, alpha * (k + n + 1)) / std::pow(q, alpha);
        sum += std::pow(q, -homogeneous_dimension * (n + k)) * (1.0 / lower - 1.0 / upper);
    }
    return sum;
}

double jump_kernel(const GroupElement& x, const GroupElement& y, double alpha) {
    auto norm = quasi_norm(group_law(inverse(y), x));
    if (norm.zero) throw DomainError("jump kernel: singular on the diagonal");
    return jump_kernel_radial(x.group.prime(), x.group.homogeneous_dimension(), alpha, norm.exponent);
}

}  // namespace ultrametric
