#pragma once

#include "ultrametric/group.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace ultrametric {

// Residue mod m = p^S. A zero modulus marks the additive identity built by T{}.
struct ModInt {
    std::uint64_t v = 0;
    std::uint64_t m = 0;

    friend ModInt operator+(ModInt a, ModInt b) {
        std::uint64_t m = a.m ? a.m : b.m;
        std::uint64_t s = a.v + b.v;
        return {s >= m ? s - m : s, m};
    }
    friend ModInt operator-(ModInt a, ModInt b) {
        std::uint64_t m = a.m ? a.m : b.m;
        return {a.v >= b.v ? a.v - b.v : a.v + m - b.v, m};
    }
    friend ModInt operator*(ModInt a, ModInt b) {
        std::uint64_t m = a.m ? a.m : b.m;
        return {static_cast<std::uint64_t>(static_cast<unsigned __int128>(a.v) * b.v % m), m};
    }
};

inline constexpr int kMaxFastDimension = 8;
using ModPoint = std::array<ModInt, kMaxFastDimension>;

// Left cosets r G_inner inside G_outer. Cell digits n_k in [0, p^{w_k (inner-outer)}),
// the representative has coordinate k equal to p^{w_k outer} n_k, first coordinate fastest.
class CosetWindow {
public:
    CosetWindow(GroupDescriptor group, int outer, int inner);

    const GroupDescriptor& group() const { return group_; }
    int outer() const { return outer_; }
    int inner() const { return inner_; }
    int depth() const { return inner_ - outer_; }
    std::size_t size() const { return size_; }
    Rational cell_measure() const;
    double cell_weight() const;
    Rational total_measure() const;

    std::vector<std::int64_t> digits(std::size_t cell) const;
    std::size_t index(const std::vector<std::int64_t>& digits) const;
    const std::vector<std::int64_t>& radix() const { return radix_; }

    GroupElement representative(std::size_t cell) const;
    // Cell whose coset contains g, or empty when g lies outside G_outer.
    std::optional<std::size_t> locate(const GroupElement& g) const;

    friend bool operator==(const CosetWindow& a, const CosetWindow& b) {
        return a.group_ == b.group_ && a.outer_ == b.outer_ && a.inner_ == b.inner_;
    }

private:
    GroupDescriptor group_;
    int outer_;
    int inner_;
    std::vector<std::int64_t> radix_;
    std::size_t size_;
};

// Exact arithmetic for elements of G_origin, carried as residues mod p^S after dilating
// by p^{-origin}. Levels are exact up to `finest`.
class Frame {
public:
    Frame(GroupDescriptor group, int origin, int finest);

    const GroupDescriptor& group() const { return group_; }
    int origin() const { return origin_; }
    int finest() const { return finest_; }

    ModPoint identity() const;
    ModPoint product(const ModPoint& a, const ModPoint& b) const;
    ModPoint inverse(const ModPoint& a) const;
    // min(level, finest)
    int level(const ModPoint& a) const;

    std::optional<ModPoint> embed(const GroupElement& g) const;
    ModPoint embed_cell(const CosetWindow& window, std::size_t cell) const;
    // exp(tX_k) for a p-adic integer multiple t = p^{shift} * n of the frame unit
    ModPoint axis_point(int coordinate, std::int64_t n, int shift) const;
    std::optional<std::size_t> locate(const CosetWindow& window, const ModPoint& a) const;

private:
    int coordinate_valuation(std::uint64_t value) const;

    GroupDescriptor group_;
    int origin_;
    int finest_;
    int digits_;  // S
    std::uint64_t modulus_;
    ModInt half_;
    std::vector<std::uint64_t> prime_powers_;  // p^0..p^S
};

// Relative levels of r^{-1}x for all pairs of cells of a window of the given depth, measured
// from the outer level and capped at the depth (same cell). Depends only on the depth because
// dilation by p^{-outer} is an automorphism carrying one window onto the other cell by cell.
class LevelTable {
public:
    LevelTable(const GroupDescriptor& group, int depth);

    int depth() const { return depth_; }
    std::size_t size() const { return size_; }
    int operator()(std::size_t r, std::size_t x) const {
        return levels_[r * size_ + x];
    }
    // Symmetric, so row(x)[r] is the level of r^{-1}x.
    const std::int8_t* row(std::size_t x) const { return levels_.data() + x * size_; }
    // Number of cells r whose relative level to a fixed x equals m (m < depth).
    std::int64_t count_at(int m) const { return counts_[static_cast<std::size_t>(m)]; }

private:
    int depth_;
    std::size_t size_;
    std::vector<std::int8_t> levels_;
    std::vector<std::int64_t> counts_;
};

inline constexpr std::size_t kMaxLevelTableCells = 8192;

// Shared, lazily built table; safe to call concurrently.
std::shared_ptr<const LevelTable> level_table(const GroupDescriptor& group, int depth);

}  // namespace ultrametric
