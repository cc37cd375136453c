#pragma once

// Monotone, normalized fuzzy measures on the subset lattice of m sources.
//
// Subsets are bitmasks: bit i set <=> source i belongs to the subset. The
// value array is indexed directly by bitmask; slot 0 is the empty set and is
// held at 0 so lookups never branch. The full set (2^m - 1) is pinned at 1.

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mici/error.hpp"
#include "mici/rng.hpp"

namespace mici {

using Subset = std::uint32_t;

inline constexpr int kMaxSources = 16;

inline constexpr Subset full_set(int num_sources) noexcept {
    return (Subset{1} << num_sources) - 1;
}

inline constexpr std::size_t num_elements(int num_sources) noexcept {
    return (std::size_t{1} << num_sources) - 1;
}

/// Human-readable subset name, sources numbered from 1: {1,2} -> "g12".
inline std::string subset_name(Subset s) {
    std::string out = "g";
    for (int i = 0; s != 0; ++i, s >>= 1) {
        if (s & 1U) {
            if (i >= 9) out += '(' + std::to_string(i + 1) + ')';
            else out += static_cast<char>('1' + i);
        }
    }
    return out;
}

struct ValidInterval {
    double lower = 0.0;
    double upper = 1.0;

    double width() const noexcept { return upper - lower; }
    bool contains(double v) const noexcept { return v >= lower && v <= upper; }
};

class FuzzyMeasure;

namespace detail {
FuzzyMeasure make_unchecked(int num_sources, std::vector<double> dense);
}

class FuzzyMeasure {
public:
    int num_sources() const noexcept { return num_sources_; }
    Subset full() const noexcept { return full_set(num_sources_); }
    std::size_t size() const noexcept { return dense_.size() - 1; }

    /// g(subset); g(empty) == 0.
    double operator[](Subset s) const noexcept {
        assert(s < dense_.size());
        return dense_[s];
    }

    /// Values for subsets 1 .. 2^m-1, in bitmask order.
    std::span<const double> values() const noexcept {
        return std::span<const double>(dense_).subspan(1);
    }

    /// Bitmask-indexed view including the empty-set slot.
    std::span<const double> dense() const noexcept { return dense_; }

    friend bool operator==(const FuzzyMeasure&, const FuzzyMeasure&) = default;

private:
    friend FuzzyMeasure detail::make_unchecked(int, std::vector<double>);

    FuzzyMeasure(int num_sources, std::vector<double> dense)
        : num_sources_(num_sources), dense_(std::move(dense)) {}

    int num_sources_ = 0;
    std::vector<double> dense_;
};

namespace detail {

inline FuzzyMeasure make_unchecked(int num_sources, std::vector<double> dense) {
    return FuzzyMeasure(num_sources, std::move(dense));
}

inline void check_source_count(int m) {
    if (m < 1 || m > kMaxSources) {
        throw Error(ErrorCode::InvalidConfig,
                    "number of sources must be in [1, " + std::to_string(kMaxSources) +
                        "], got " + std::to_string(m));
    }
}

/// Throws on the first axiom violation of a dense (bitmask-indexed) array.
inline void validate_dense(int m, std::span<const double> dense) {
    const Subset top = full_set(m);
    for (Subset s = 1; s <= top; ++s) {
        const double v = dense[s];
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream os;
            os << subset_name(s) << " = " << v << " outside [0,1]";
            throw Error(ErrorCode::Range, os.str());
        }
    }
    if (dense[top] != 1.0) {
        std::ostringstream os;
        os << "full-set value " << subset_name(top) << " = " << dense[top] << ", expected 1";
        throw Error(ErrorCode::Normalization, os.str());
    }
    for (Subset s = 1; s < top; ++s) {
        for (Subset rest = top & ~s; rest != 0; rest &= rest - 1) {
            const Subset sup = s | (rest & (~rest + 1));
            if (dense[s] > dense[sup]) {
                std::ostringstream os;
                os << subset_name(s) << " = " << dense[s] << " exceeds superset "
                   << subset_name(sup) << " = " << dense[sup];
                throw MonotonicityError(s, sup, os.str());
            }
        }
    }
}

inline ValidInterval interval_dense(int m, std::span<const double> dense, Subset element) {
    const Subset top = full_set(m);
    ValidInterval iv{0.0, 1.0};
    for (Subset rest = element; rest != 0; rest &= rest - 1) {
        iv.lower = std::max(iv.lower, dense[element & ~(rest & (~rest + 1))]);
    }
    for (Subset rest = top & ~element; rest != 0; rest &= rest - 1) {
        iv.upper = std::min(iv.upper, dense[element | (rest & (~rest + 1))]);
    }
    return iv;
}

}  // namespace detail

/// Validates and wraps `values` (length 2^m - 1, bitmask order starting at
/// subset 1).
inline FuzzyMeasure build_measure(int num_sources, std::span<const double> values) {
    detail::check_source_count(num_sources);
    if (values.size() != num_elements(num_sources)) {
        throw Error(ErrorCode::SizeMismatch,
                    "expected " + std::to_string(num_elements(num_sources)) + " values, got " +
                        std::to_string(values.size()));
    }
    std::vector<double> dense(values.size() + 1, 0.0);
    std::copy(values.begin(), values.end(), dense.begin() + 1);
    detail::validate_dense(num_sources, dense);
    return detail::make_unchecked(num_sources, std::move(dense));
}

inline FuzzyMeasure build_measure(int num_sources, std::initializer_list<double> values) {
    return build_measure(num_sources, std::span<const double>(values.begin(), values.size()));
}

inline bool is_valid_measure(int num_sources, std::span<const double> dense) {
    try {
        detail::validate_dense(num_sources, dense);
        return true;
    } catch (const Error&) {
        return false;
    }
}

/// Range an element can move through without breaking monotonicity: the
/// largest immediate-subset value to the smallest immediate-superset value.
inline ValidInterval valid_interval(const FuzzyMeasure& g, Subset element) {
    if (element == 0 || element > g.full()) {
        throw Error(ErrorCode::Range, "element " + std::to_string(element) + " not in lattice");
    }
    if (element == g.full()) {
        throw Error(ErrorCode::FullSet, "the full-set element is pinned at 1");
    }
    return detail::interval_dense(g.num_sources(), g.dense(), element);
}

/// Copy of `g` with one element replaced, re-validated.
inline FuzzyMeasure with_value(const FuzzyMeasure& g, Subset element, double value) {
    std::vector<double> dense(g.dense().begin(), g.dense().end());
    dense.at(element) = value;
    detail::validate_dense(g.num_sources(), dense);
    return detail::make_unchecked(g.num_sources(), std::move(dense));
}

// Common shapes, handy for tests and as fixed aggregators.

/// Every nonempty subset valued 1: the Choquet integral becomes max.
inline FuzzyMeasure max_measure(int m) {
    detail::check_source_count(m);
    std::vector<double> dense(num_elements(m) + 1, 1.0);
    dense[0] = 0.0;
    return detail::make_unchecked(m, std::move(dense));
}

/// Every proper subset valued 0: the Choquet integral becomes min.
inline FuzzyMeasure min_measure(int m) {
    detail::check_source_count(m);
    std::vector<double> dense(num_elements(m) + 1, 0.0);
    dense[full_set(m)] = 1.0;
    return detail::make_unchecked(m, std::move(dense));
}

/// g(A) = sum of weights in A. Weights must be non-negative and sum to 1
/// (within round-off; the full set is forced to exactly 1).
inline FuzzyMeasure additive_measure(std::span<const double> weights) {
    const int m = static_cast<int>(weights.size());
    detail::check_source_count(m);
    double total = 0.0;
    for (const double w : weights) {
        if (!(w >= 0.0)) throw Error(ErrorCode::Range, "additive weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorCode::Normalization, "additive weights sum to " + std::to_string(total));
    }
    std::vector<double> dense(num_elements(m) + 1, 0.0);
    for (Subset s = 1; s <= full_set(m); ++s) {
        const int low = std::countr_zero(s);
        dense[s] = dense[s & (s - 1)] + weights[low];
    }
    for (Subset s = 1; s < full_set(m); ++s) dense[s] = std::min(dense[s], 1.0);
    dense[full_set(m)] = 1.0;
    detail::validate_dense(m, dense);
    return detail::make_unchecked(m, std::move(dense));
}

enum class InitMode : std::uint8_t { TopDown, BottomUp, CoinFlip };

/// Random monotone measure. TopDown fills the (m-1)-tuples uniformly in
/// [0,1] and each lower layer in [0, min of its immediate supersets];
/// BottomUp fills singletons in [0,1] and each higher layer in
/// [max of its immediate subsets, 1]. CoinFlip picks one of the two with
/// equal probability for this call.
inline FuzzyMeasure init_measure(int m, InitMode mode, Rng& rng) {
    detail::check_source_count(m);
    if (mode == InitMode::CoinFlip) {
        mode = std::bernoulli_distribution(0.5)(rng) ? InitMode::TopDown : InitMode::BottomUp;
    }
    const Subset top = full_set(m);
    std::vector<double> dense(num_elements(m) + 1, 0.0);
    dense[top] = 1.0;

    std::vector<Subset> order;
    order.reserve(top);
    for (Subset s = 1; s < top; ++s) order.push_back(s);
    std::stable_sort(order.begin(), order.end(), [&](Subset a, Subset b) {
        return mode == InitMode::TopDown ? std::popcount(a) > std::popcount(b)
                                         : std::popcount(a) < std::popcount(b);
    });

    for (const Subset s : order) {
        const ValidInterval iv = detail::interval_dense(m, dense, s);
        // Layers not yet visited still hold 0, so only one side is live.
        dense[s] = mode == InitMode::TopDown ? uniform(rng, 0.0, iv.upper)
                                             : uniform(rng, iv.lower, 1.0);
    }
    assert(is_valid_measure(m, dense));
    return detail::make_unchecked(m, std::move(dense));
}

}  // namespace mici
