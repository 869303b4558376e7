#include "ultrametric/group.hpp"

#include <algorithm>

namespace ultrametric {

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

void require_same(const GroupDescriptor& a, const GroupDescriptor& b) {
    if (!(a == b)) throw DomainError("group operation: descriptor mismatch");
}

}  // namespace

GroupDescriptor::GroupDescriptor(GroupKind kind, int p, int rank, std::vector<int> weights)
    : kind_(kind), prime_(p), rank_(rank), weights_(std::move(weights)) {
    homogeneous_dimension_ = 0;
    for (int w : weights_) homogeneous_dimension_ += w;
}

GroupDescriptor GroupDescriptor::abelian(int p, int d) {
    if (!is_prime(p)) throw DomainError("abelian group: p must be prime");
    if (d < 1) throw DomainError("abelian group: d must be positive");
    return GroupDescriptor(GroupKind::Abelian, p, d, std::vector<int>(static_cast<std::size_t>(d), 1));
}

GroupDescriptor GroupDescriptor::heisenberg(int p, int d) {
    if (!is_prime(p) || p == 2) throw DomainError("Heisenberg group: p must be an odd prime");
    if (d < 1) throw DomainError("Heisenberg group: d must be positive");
    std::vector<int> weights(static_cast<std::size_t>(2 * d), 1);
    weights.push_back(2);
    return GroupDescriptor(GroupKind::Heisenberg, p, d, std::move(weights));
}

GroupDescriptor GroupDescriptor::engel(int p) {
    if (!is_prime(p) || p == 2) throw DomainError("Engel group: p must be an odd prime");
    return GroupDescriptor(GroupKind::Engel, p, 1, {1, 1, 2, 3});
}

std::string GroupDescriptor::name() const {
    switch (kind_) {
        case GroupKind::Abelian: return "qp";
        case GroupKind::Heisenberg: return "heisenberg";
        case GroupKind::Engel: return "engel";
    }
    return "unknown";
}

GroupElement GroupElement::identity(const GroupDescriptor& group) {
    return {group, std::vector<Rational>(static_cast<std::size_t>(group.dimension()), Rational(0))};
}

bool GroupElement::is_identity() const {
    return std::all_of(coords.begin(), coords.end(), [](const Rational& c) { return c == 0; });
}

GroupElement group_law(const GroupElement& a, const GroupElement& b) {
    require_same(a.group, b.group);
    GroupElement out = GroupElement::identity(a.group);
    compose(a.group.kind(), a.group.rank(), a.coords.data(), b.coords.data(), out.coords.data(),
            Rational(1, 2));
    return out;
}

GroupElement inverse(const GroupElement& a) {
    GroupElement out = GroupElement::identity(a.group);
    invert(a.group.kind(), a.group.rank(), a.coords.data(), out.coords.data(), Rational(1, 2));
    return out;
}

GroupElement dilate(const Rational& gamma, const GroupElement& a) {
    if (gamma == 0) throw DomainError("dilate: gamma = 0");
    GroupElement out = a;
    const auto& weights = a.group.weights();
    for (std::size_t k = 0; k < out.coords.size(); ++k) {
        Rational factor = 1;
        for (int i = 0; i < weights[k]; ++i) factor *= gamma;
        out.coords[k] *= factor;
    }
    return out;
}

GroupElement dilate(const PadicScalar& gamma, const GroupElement& a) {
    if (gamma.is_zero()) throw DomainError("dilate: gamma = 0");
    return dilate(gamma.to_rational(), a);
}

std::optional<int> level(const GroupElement& a) {
    std::optional<int> best;
    const int p = a.group.prime();
    const auto& weights = a.group.weights();
    for (std::size_t k = 0; k < a.coords.size(); ++k) {
        if (a.coords[k] == 0) continue;
        int n = floor_div(valuation(a.coords[k], p), weights[k]);
        best = best ? std::min(*best, n) : n;
    }
    return best;
}

NormExponent quasi_norm(const GroupElement& a) {
    auto n = level(a);
    return n ? NormExponent::power(-*n) : NormExponent::of_zero();
}

NormExponent vilenkin_norm(const GroupElement& a) {
    auto n = level(a);
    return n ? NormExponent::power(-a.group.homogeneous_dimension() * *n) : NormExponent::of_zero();
}

Rational shell_measure(const GroupDescriptor& group, int n) {
    const int q = group.homogeneous_dimension();
    return rational_power(group.prime(), -q * n) * (Rational(1) - rational_power(group.prime(), -q));
}

Rational subgroup_measure(const GroupDescriptor& group, int n) {
    return rational_power(group.prime(), -group.homogeneous_dimension() * n);
}

}  // namespace ultrametric
