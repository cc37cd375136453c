#pragma once

// Discrete Choquet integral against a fuzzy measure, the sorted chain of
// subsets an input walks through, and a Moebius-form reference evaluator.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "mici/error.hpp"
#include "mici/measure.hpp"

namespace mici {

/// Per-source confidences h(c_k; x) for one data point.
using Instance = std::span<const double>;

/// Chain A_1 c A_2 c ... c A_m of the k largest sources. Ties resolve
/// toward the lower source index so chains are reproducible.
struct Chain {
    std::array<Subset, kMaxSources> subsets{};
    // gaps[k] = h(c_(k)) - h(c_(k+1)), with h(c_(m+1)) = 0
    std::array<double, kMaxSources> gaps{};
    int length = 0;
};

namespace detail {

inline void check_dimension(int m, Instance x) {
    if (x.size() != static_cast<std::size_t>(m)) {
        throw Error(ErrorCode::DimensionMismatch,
                    "instance has " + std::to_string(x.size()) + " sources, measure has " +
                        std::to_string(m));
    }
}

inline Chain make_chain(Instance x) {
    const int m = static_cast<int>(x.size());
    std::array<int, kMaxSources> order{};
    std::iota(order.begin(), order.begin() + m, 0);
    std::stable_sort(order.begin(), order.begin() + m,
                     [&](int a, int b) { return x[a] > x[b]; });
    Chain chain;
    chain.length = m;
    Subset acc = 0;
    for (int k = 0; k < m; ++k) {
        acc |= Subset{1} << order[k];
        chain.subsets[k] = acc;
        const double next = k + 1 < m ? x[order[k + 1]] : 0.0;
        chain.gaps[k] = x[order[k]] - next;
    }
    return chain;
}

inline double integrate_chain(std::span<const double> dense, const Chain& chain) noexcept {
    double sum = 0.0;
    for (int k = 0; k < chain.length; ++k) sum += chain.gaps[k] * dense[chain.subsets[k]];
    return sum;
}

}  // namespace detail

inline std::vector<Subset> sort_chain(Instance x) {
    if (x.empty() || x.size() > static_cast<std::size_t>(kMaxSources)) {
        throw Error(ErrorCode::DimensionMismatch, "instance must have 1..16 sources");
    }
    const Chain c = detail::make_chain(x);
    return {c.subsets.begin(), c.subsets.begin() + c.length};
}

inline double choquet_integral(const FuzzyMeasure& g, Instance x) {
    detail::check_dimension(g.num_sources(), x);
    return detail::integrate_chain(g.dense(), detail::make_chain(x));
}

/// counts[s] (bitmask-indexed, slot 0 unused) = number of instances whose
/// sorted chain passes through subset s. The full set is counted too.
class UsageCounts {
public:
    UsageCounts() = default;
    explicit UsageCounts(int num_sources)
        : num_sources_(num_sources), counts_(num_elements(num_sources) + 1, 0) {}

    int num_sources() const noexcept { return num_sources_; }
    std::uint64_t operator[](Subset s) const noexcept { return counts_[s]; }
    std::uint64_t& operator[](Subset s) noexcept { return counts_[s]; }
    std::span<const std::uint64_t> dense() const noexcept { return counts_; }

    std::uint64_t total() const noexcept {
        return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
    }

    void add(const Chain& chain) noexcept {
        for (int k = 0; k < chain.length; ++k) ++counts_[chain.subsets[k]];
    }

    friend bool operator==(const UsageCounts&, const UsageCounts&) = default;

private:
    int num_sources_ = 0;
    std::vector<std::uint64_t> counts_;
};

/// Moebius masses mu(A) = sum_{B subset A} (-1)^{|A\B|} g(B), via the fast
/// subset-sum butterfly. Bitmask-indexed; mu(empty) = 0.
inline std::vector<double> mobius_transform(const FuzzyMeasure& g) {
    std::vector<double> mu(g.dense().begin(), g.dense().end());
    const int m = g.num_sources();
    for (int i = 0; i < m; ++i) {
        const Subset bit = Subset{1} << i;
        for (Subset s = 0; s < mu.size(); ++s) {
            if (s & bit) mu[s] -= mu[s ^ bit];
        }
    }
    return mu;
}

/// Choquet integral as sum over nonempty A of mu(A) * min_{i in A} h_i.
/// Exponential in m; for cross-checking only.
inline double mobius_choquet_oracle(const FuzzyMeasure& g, Instance x) {
    detail::check_dimension(g.num_sources(), x);
    if (g.num_sources() > 12) {
        throw Error(ErrorCode::InvalidConfig, "Moebius oracle limited to m <= 12");
    }
    const std::vector<double> mu = mobius_transform(g);
    double sum = 0.0;
    for (Subset s = 1; s < mu.size(); ++s) {
        double lo = 1.0e300;
        for (Subset rest = s; rest != 0; rest &= rest - 1) {
            lo = std::min(lo, x[std::countr_zero(rest)]);
        }
        sum += mu[s] * lo;
    }
    return sum;
}

}  // namespace mici

#include "mici/bags.hpp"

namespace mici {

inline UsageCounts usage_counts(const BagSet& set) {
    UsageCounts counts(set.num_sources);
    for (const Bag& b : set.bags) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            detail::check_dimension(set.num_sources, b.instance(i));
            counts.add(detail::make_chain(b.instance(i)));
        }
    }
    return counts;
}

/// Bags with every instance's chain sorted once up front. Instances never
/// change during training, so objective evaluation reduces to m
/// multiply-adds per instance.
class PreparedBags {
public:
    PreparedBags() = default;
    explicit PreparedBags(const BagSet& set) : num_sources_(set.num_sources) {
        offsets_.reserve(set.size() + 1);
        offsets_.push_back(0);
        for (const Bag& b : set.bags) {
            labels_.push_back(b.label);
            for (std::size_t i = 0; i < b.size(); ++i) {
                detail::check_dimension(set.num_sources, b.instance(i));
                chains_.push_back(detail::make_chain(b.instance(i)));
            }
            offsets_.push_back(chains_.size());
        }
    }

    int num_sources() const noexcept { return num_sources_; }
    std::size_t num_bags() const noexcept { return labels_.size(); }
    std::size_t num_instances() const noexcept { return chains_.size(); }
    double label(std::size_t bag) const noexcept { return labels_[bag]; }
    std::span<const double> labels() const noexcept { return labels_; }

    std::size_t bag_begin(std::size_t bag) const noexcept { return offsets_[bag]; }
    std::size_t bag_end(std::size_t bag) const noexcept { return offsets_[bag + 1]; }
    const Chain& chain(std::size_t instance) const noexcept { return chains_[instance]; }

    /// CI of every instance, flattened in bag order.
    void integrate_all(const FuzzyMeasure& g, std::vector<double>& out) const {
        if (g.num_sources() != num_sources_) {
            throw Error(ErrorCode::DimensionMismatch, "measure/bag source count differ");
        }
        out.resize(chains_.size());
        const auto dense = g.dense();
        for (std::size_t i = 0; i < chains_.size(); ++i) {
            out[i] = detail::integrate_chain(dense, chains_[i]);
        }
    }

    UsageCounts usage_counts() const {
        UsageCounts counts(num_sources_);
        for (const Chain& c : chains_) counts.add(c);
        return counts;
    }

private:
    int num_sources_ = 0;
    std::vector<double> labels_;
    std::vector<std::size_t> offsets_;
    std::vector<Chain> chains_;
};

}  // namespace mici
