#pragma once

#include "ultrametric/padic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ultrametric {

enum class GroupKind { Abelian, Heisenberg, Engel };

class GroupDescriptor {
public:
    static GroupDescriptor abelian(int p, int d);
    static GroupDescriptor heisenberg(int p, int d);
    static GroupDescriptor engel(int p);

    GroupKind kind() const { return kind_; }
    int prime() const { return prime_; }
    // d for Q_p^d and H_d; 1 for E_4.
    int rank() const { return rank_; }
    int dimension() const { return static_cast<int>(weights_.size()); }
    const std::vector<int>& weights() const { return weights_; }
    int homogeneous_dimension() const { return homogeneous_dimension_; }
    std::string name() const;

    friend bool operator==(const GroupDescriptor& a, const GroupDescriptor& b) {
        return a.kind_ == b.kind_ && a.prime_ == b.prime_ && a.rank_ == b.rank_;
    }

private:
    GroupDescriptor(GroupKind kind, int p, int rank, std::vector<int> weights);

    GroupKind kind_;
    int prime_;
    int rank_;
    std::vector<int> weights_;
    int homogeneous_dimension_;
};

struct GroupElement {
    GroupDescriptor group;
    std::vector<Rational> coords;

    static GroupElement identity(const GroupDescriptor& group);
    bool is_identity() const;
    friend bool operator==(const GroupElement& a, const GroupElement& b) {
        return a.group == b.group && a.coords == b.coords;
    }
};

// Product of exponential coordinates over any commutative ring with an element
// `half` = 1/2. Used with exact rationals and with residues mod p^S.
template <class T>
void compose(GroupKind kind, int rank, const T* a, const T* b, T* out, const T& half) {
    switch (kind) {
        case GroupKind::Abelian:
            for (int k = 0; k < rank; ++k) out[k] = a[k] + b[k];
            return;
        case GroupKind::Heisenberg: {
            T symplectic = a[0] * b[rank] - a[rank] * b[0];
            for (int j = 1; j < rank; ++j) symplectic = symplectic + (a[j] * b[rank + j] - a[rank + j] * b[j]);
            for (int k = 0; k < 2 * rank; ++k) out[k] = a[k] + b[k];
            out[2 * rank] = a[2 * rank] + b[2 * rank] + half * symplectic;
            return;
        }
        case GroupKind::Engel: {
            const T& x = a[0];
            T y3 = a[3] + b[3] + half * x * x * b[1] - x * b[2];
            T y2 = a[2] + b[2] - x * b[1];
            out[0] = a[0] + b[0];
            out[1] = a[1] + b[1];
            out[2] = y2;
            out[3] = y3;
            return;
        }
    }
}

template <class T>
void invert(GroupKind kind, int rank, const T* a, T* out, const T& half) {
    switch (kind) {
        case GroupKind::Abelian:
            for (int k = 0; k < rank; ++k) out[k] = T{} - a[k];
            return;
        case GroupKind::Heisenberg:
            for (int k = 0; k < 2 * rank + 1; ++k) out[k] = T{} - a[k];
            return;
        case GroupKind::Engel: {
            const T& x = a[0];
            T y3 = T{} - a[3] - half * x * x * a[1] - x * a[2];
            T y2 = T{} - a[2] - x * a[1];
            out[0] = T{} - a[0];
            out[1] = T{} - a[1];
            out[2] = y2;
            out[3] = y3;
            return;
        }
    }
}

GroupElement group_law(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& a);
GroupElement dilate(const Rational& gamma, const GroupElement& a);
GroupElement dilate(const PadicScalar& gamma, const GroupElement& a);

// Largest n with a in G_n; empty for the identity.
std::optional<int> level(const GroupElement& a);
// |a|_G = p^{-level}
NormExponent quasi_norm(const GroupElement& a);
// |a|_𝒢 = |a|_G^Q
NormExponent vilenkin_norm(const GroupElement& a);

// Haar measure of G_n \ G_{n+1} with |G_0| = 1.
Rational shell_measure(const GroupDescriptor& group, int n);
// Haar measure of G_n.
Rational subgroup_measure(const GroupDescriptor& group, int n);

}  // namespace ultrametric
