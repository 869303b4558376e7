#include "ultrametric/window.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

namespace ultrametric {

CosetWindow::CosetWindow(GroupDescriptor group, int outer, int inner)
    : group_(std::move(group)), outer_(outer), inner_(inner) {
    if (outer > inner) throw DomainError("CosetWindow: L_out > L_in");
    if (group_.dimension() > kMaxFastDimension)
        throw DomainError("CosetWindow: group dimension exceeds the fast-path limit");
    const int p = group_.prime();
    size_ = 1;
    for (int w : group_.weights()) {
        std::int64_t r = 1;
        for (int i = 0; i < w * depth(); ++i) {
            r *= p;
            if (r > (std::int64_t{1} << 40)) throw DomainError("CosetWindow: window too large");
        }
        radix_.push_back(r);
        size_ *= static_cast<std::size_t>(r);
        if (size_ > (std::size_t{1} << 27)) throw DomainError("CosetWindow: window too large");
    }
}

Rational CosetWindow::cell_measure() const { return subgroup_measure(group_, inner_); }

double CosetWindow::cell_weight() const {
    return real_power(group_.prime(), -static_cast<double>(group_.homogeneous_dimension()) * inner_);
}

Rational CosetWindow::total_measure() const { return subgroup_measure(group_, outer_); }

std::vector<std::int64_t> CosetWindow::digits(std::size_t cell) const {
    std::vector<std::int64_t> out(radix_.size());
    for (std::size_t k = 0; k < radix_.size(); ++k) {
        out[k] = static_cast<std::int64_t>(cell % static_cast<std::size_t>(radix_[k]));
        cell /= static_cast<std::size_t>(radix_[k]);
    }
    return out;
}

std::size_t CosetWindow::index(const std::vector<std::int64_t>& digits) const {
    std::size_t cell = 0;
    for (std::size_t k = radix_.size(); k-- > 0;) {
        if (digits[k] < 0 || digits[k] >= radix_[k]) throw DomainError("CosetWindow: digit out of range");
        cell = cell * static_cast<std::size_t>(radix_[k]) + static_cast<std::size_t>(digits[k]);
    }
    return cell;
}

GroupElement CosetWindow::representative(std::size_t cell) const {
    GroupElement g = GroupElement::identity(group_);
    auto d = digits(cell);
    const auto& weights = group_.weights();
    for (std::size_t k = 0; k < d.size(); ++k)
        g.coords[k] = rational_power(group_.prime(), weights[k] * outer_) * Rational(d[k]);
    return g;
}

std::optional<std::size_t> CosetWindow::locate(const GroupElement& g) const {
    if (!(g.group == group_)) throw DomainError("CosetWindow::locate: descriptor mismatch");
    Frame frame(group_, outer_, inner_);
    auto point = frame.embed(g);
    if (!point) return std::nullopt;
    return frame.locate(*this, *point);
}

Frame::Frame(GroupDescriptor group, int origin, int finest)
    : group_(std::move(group)), origin_(origin), finest_(finest) {
    if (group_.dimension() > kMaxFastDimension) throw DomainError("Frame: dimension too large");
    const std::uint64_t p = static_cast<std::uint64_t>(group_.prime());
    const std::uint64_t limit = std::uint64_t{1} << 62;
    prime_powers_ = {1};
    while (prime_powers_.back() <= limit / p) prime_powers_.push_back(prime_powers_.back() * p);
    digits_ = static_cast<int>(prime_powers_.size()) - 1;
    modulus_ = prime_powers_.back();
    int max_weight = *std::max_element(group_.weights().begin(), group_.weights().end());
    if (finest < origin || max_weight * (finest - origin) > digits_)
        throw DomainError("Frame: level range exceeds machine precision");
    half_ = {(modulus_ + 1) / 2, modulus_};
}

ModPoint Frame::identity() const {
    ModPoint out{};
    for (auto& c : out) c = {0, modulus_};
    return out;
}

ModPoint Frame::product(const ModPoint& a, const ModPoint& b) const {
    ModPoint out = identity();
    compose(group_.kind(), group_.rank(), a.data(), b.data(), out.data(), half_);
    return out;
}

ModPoint Frame::inverse(const ModPoint& a) const {
    ModPoint out = identity();
    invert(group_.kind(), group_.rank(), a.data(), out.data(), half_);
    for (auto& c : out) c.m = modulus_;
    return out;
}

int Frame::coordinate_valuation(std::uint64_t value) const {
    if (value == 0) return digits_;
    const std::uint64_t p = prime_powers_[1];
    int v = 0;
    while (value % p == 0) {
        value /= p;
        ++v;
    }
    return v;
}

int Frame::level(const ModPoint& a) const {
    int best = finest_;
    const auto& weights = group_.weights();
    for (int k = 0; k < group_.dimension(); ++k) {
        int n = origin_ + coordinate_valuation(a[static_cast<std::size_t>(k)].v) / weights[static_cast<std::size_t>(k)];
        best = std::min(best, n);
    }
    return best;
}

std::optional<ModPoint> Frame::embed(const GroupElement& g) const {
    if (!(g.group == group_)) throw DomainError("Frame::embed: descriptor mismatch");
    ModPoint out = identity();
    const int p = group_.prime();
    const auto& weights = group_.weights();
    for (std::size_t k = 0; k < g.coords.size(); ++k) {
        Rational c = g.coords[k] * rational_power(p, -weights[k] * origin_);
        if (c != 0 && valuation(c, p) < 0) return std::nullopt;
        out[k] = {static_cast<std::uint64_t>(residue(c, p, digits_)), modulus_};
    }
    return out;
}

ModPoint Frame::embed_cell(const CosetWindow& window, std::size_t cell) const {
    if (window.outer() < origin_) throw DomainError("Frame::embed_cell: window outside frame");
    ModPoint out = identity();
    auto d = window.digits(cell);
    const auto& weights = group_.weights();
    for (std::size_t k = 0; k < d.size(); ++k) {
        int shift = weights[k] * (window.outer() - origin_);
        out[k] = ModInt{static_cast<std::uint64_t>(d[k]), modulus_} * ModInt{prime_powers_[static_cast<std::size_t>(shift)], modulus_};
    }
    return out;
}

ModPoint Frame::axis_point(int coordinate, std::int64_t n, int shift) const {
    if (shift < 0) throw DomainError("Frame::axis_point: negative shift");
    ModPoint out = identity();
    if (shift >= digits_) return out;
    std::int64_t m = static_cast<std::int64_t>(modulus_ % static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()));
    std::int64_t r = n % m;
    if (r < 0) r += m;
    out[static_cast<std::size_t>(coordinate)] =
        ModInt{static_cast<std::uint64_t>(r), modulus_} * ModInt{prime_powers_[static_cast<std::size_t>(shift)], modulus_};
    return out;
}

std::optional<std::size_t> Frame::locate(const CosetWindow& window, const ModPoint& a) const {
    if (window.outer() < origin_ || window.inner() > finest_)
        throw DomainError("Frame::locate: window outside frame range");
    const auto& weights = group_.weights();
    const int dim = group_.dimension();
    for (int k = 0; k < dim; ++k) {
        int shift = weights[static_cast<std::size_t>(k)] * (window.outer() - origin_);
        if (coordinate_valuation(a[static_cast<std::size_t>(k)].v) < shift) return std::nullopt;
    }
    ModPoint rep = identity();
    std::size_t cell = 0, stride = 1;
    for (int k = 0; k < dim; ++k) {
        auto kk = static_cast<std::size_t>(k);
        int shift = weights[kk] * (window.outer() - origin_);
        int top = weights[kk] * (window.inner() - origin_);
        rep[kk] = {0, modulus_};
        ModPoint w = product(inverse(rep), a);
        std::uint64_t digit = (w[kk].v % prime_powers_[static_cast<std::size_t>(top)]) / prime_powers_[static_cast<std::size_t>(shift)];
        rep[kk] = ModInt{digit, modulus_} * ModInt{prime_powers_[static_cast<std::size_t>(shift)], modulus_};
        cell += static_cast<std::size_t>(digit) * stride;
        stride *= static_cast<std::size_t>(window.radix()[kk]);
    }
    return cell;
}

}  // namespace ultrametric

namespace ultrametric {

LevelTable::LevelTable(const GroupDescriptor& group, int depth) : depth_(depth) {
    CosetWindow window(group, 0, depth);
    size_ = window.size();
    if (size_ > kMaxLevelTableCells) throw DomainError("LevelTable: window too large for a dense table");
    Frame frame(group, 0, depth);
    std::vector<ModPoint> points(size_), inverses(size_);
    for (std::size_t c = 0; c < size_; ++c) {
        points[c] = frame.embed_cell(window, c);
        inverses[c] = frame.inverse(points[c]);
    }
    levels_.assign(size_ * size_, static_cast<std::int8_t>(depth));
    for (std::size_t r = 0; r < size_; ++r) {
        for (std::size_t x = r + 1; x < size_; ++x) {
            auto m = static_cast<std::int8_t>(frame.level(frame.product(inverses[r], points[x])));
            levels_[r * size_ + x] = m;
            levels_[x * size_ + r] = m;
        }
    }
    const auto kappa = static_cast<std::int64_t>(std::llround(std::pow(group.prime(), group.homogeneous_dimension())));
    counts_.assign(static_cast<std::size_t>(depth), 0);
    std::int64_t below = 1;  // cells at relative level >= m, starting from m = depth
    for (int m = depth - 1; m >= 0; --m) {
        counts_[static_cast<std::size_t>(m)] = below * kappa - below;
        below *= kappa;
    }
}

std::shared_ptr<const LevelTable> level_table(const GroupDescriptor& group, int depth) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int, int>, std::shared_ptr<const LevelTable>> cache;
    auto key = std::make_tuple(static_cast<int>(group.kind()), group.prime(), group.rank(), depth);
    {
        std::lock_guard lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto table = std::make_shared<const LevelTable>(group, depth);
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(table)).first->second;
}

}  // namespace ultrametric
