#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mici/error.hpp"

namespace mici {

/// A labeled set of instances. Instances are stored row-major, one row of
/// `num_sources` confidences each.
struct Bag {
    std::string id;
    double label = 0.0;
    int num_sources = 0;
    std::vector<double> data;

    std::size_t size() const noexcept {
        return num_sources == 0 ? 0 : data.size() / static_cast<std::size_t>(num_sources);
    }

    std::span<const double> instance(std::size_t i) const noexcept {
        return std::span<const double>(data).subspan(i * num_sources, num_sources);
    }

    void add_instance(std::span<const double> x) {
        if (x.size() != static_cast<std::size_t>(num_sources)) {
            throw Error(ErrorCode::DimensionMismatch,
                        "bag '" + id + "' expects " + std::to_string(num_sources) +
                            " sources, got " + std::to_string(x.size()));
        }
        data.insert(data.end(), x.begin(), x.end());
    }

    friend bool operator==(const Bag&, const Bag&) = default;
};

struct BagSet {
    int num_sources = 0;
    std::vector<Bag> bags;

    std::size_t size() const noexcept { return bags.size(); }
    bool empty() const noexcept { return bags.empty(); }

    std::size_t num_instances() const noexcept {
        std::size_t n = 0;
        for (const Bag& b : bags) n += b.size();
        return n;
    }

    Bag& add_bag(std::string id, double label) {
        bags.push_back(Bag{std::move(id), label, num_sources, {}});
        return bags.back();
    }

    friend bool operator==(const BagSet&, const BagSet&) = default;
};

inline bool is_binary_label(double label) noexcept { return label == 0.0 || label == 1.0; }

/// Structural checks: nonempty bags, shared width, confidences and labels
/// in [0,1].
inline void validate_bagset(const BagSet& set) {
    for (const Bag& b : set.bags) {
        if (b.num_sources != set.num_sources ||
            b.data.size() % static_cast<std::size_t>(std::max(1, set.num_sources)) != 0) {
            throw Error(ErrorCode::DimensionMismatch, "bag '" + b.id + "' has inconsistent width");
        }
        if (b.size() == 0) throw Error(ErrorCode::SizeMismatch, "bag '" + b.id + "' is empty");
        if (!(b.label >= 0.0 && b.label <= 1.0)) {
            throw Error(ErrorCode::LabelOutOfRange, "bag '" + b.id + "' label outside [0,1]");
        }
        for (const double v : b.data) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw Error(ErrorCode::Range, "bag '" + b.id + "' has a confidence outside [0,1]");
            }
        }
    }
}

inline void require_binary_labels(const BagSet& set) {
    for (const Bag& b : set.bags) {
        if (!is_binary_label(b.label)) {
            throw Error(ErrorCode::NonBinaryLabel,
                        "bag '" + b.id + "' label " + std::to_string(b.label) + " is not 0 or 1");
        }
    }
}

}  // namespace mici
