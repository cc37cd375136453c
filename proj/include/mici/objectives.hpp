#pragma once

// Bag-level fitness functions over Choquet integral outputs. Every
// objective here is reported so that lower is better.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mici/bags.hpp"
#include "mici/choquet.hpp"
#include "mici/error.hpp"
#include "mici/measure.hpp"

namespace mici {

enum class ObjectiveKind : std::uint8_t { MinMax, GeneralizedMean, NoisyOr, Regression };

inline const char* to_string(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::MinMax: return "minmax";
        case ObjectiveKind::GeneralizedMean: return "genmean";
        case ObjectiveKind::NoisyOr: return "noisyor";
        case ObjectiveKind::Regression: return "micir";
    }
    return "?";
}

inline std::optional<ObjectiveKind> parse_objective_kind(const std::string& s) {
    if (s == "minmax") return ObjectiveKind::MinMax;
    if (s == "genmean") return ObjectiveKind::GeneralizedMean;
    if (s == "noisyor") return ObjectiveKind::NoisyOr;
    if (s == "micir") return ObjectiveKind::Regression;
    return std::nullopt;
}

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::MinMax;
    double p1 = 10.0;     // generalized mean, negative bags
    double p2 = -10.0;    // generalized mean, positive bags
    double mu = 1.0;      // noisy-or kernel centre
    double sigma2 = 0.1;  // noisy-or kernel variance

    static ObjectiveSpec min_max() { return {}; }
    static ObjectiveSpec generalized_mean(double p1, double p2) {
        return {ObjectiveKind::GeneralizedMean, p1, p2};
    }
    static ObjectiveSpec noisy_or(double mu, double sigma2) {
        ObjectiveSpec s;
        s.kind = ObjectiveKind::NoisyOr;
        s.mu = mu;
        s.sigma2 = sigma2;
        return s;
    }
    static ObjectiveSpec regression() {
        ObjectiveSpec s;
        s.kind = ObjectiveKind::Regression;
        return s;
    }

    void validate() const {
        if (kind == ObjectiveKind::GeneralizedMean && !(p1 >= 1.0 && p2 <= -1.0)) {
            throw Error(ErrorCode::InvalidExponent, "generalized mean needs p1 >= 1 and p2 <= -1");
        }
        if (kind == ObjectiveKind::NoisyOr && !(sigma2 > 0.0 && std::isfinite(sigma2))) {
            throw Error(ErrorCode::InvalidVariance, "noisy-or needs sigma2 > 0");
        }
    }

    friend bool operator==(const ObjectiveSpec&, const ObjectiveSpec&) = default;
};

inline constexpr double kDeviationFloor = 1e-12;
inline constexpr double kLogFloor = 1e-12;

namespace detail {

// log(mean(exp(t_i))) with -inf entries allowed.
inline double log_mean_exp(std::span<const double> t) {
    double hi = -std::numeric_limits<double>::infinity();
    for (const double v : t) hi = std::max(hi, v);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    double acc = 0.0;
    for (const double v : t) acc += std::exp(v - hi);
    return hi + std::log(acc) - std::log(static_cast<double>(t.size()));
}

inline void require_labels_in_range(std::span<const double> labels) {
    for (const double d : labels) {
        if (!(d >= 0.0 && d <= 1.0)) {
            throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(d) + " outside [0,1]");
        }
    }
}

inline void require_binary(std::span<const double> labels) {
    for (const double d : labels) {
        if (!is_binary_label(d)) {
            throw Error(ErrorCode::NonBinaryLabel, "label " + std::to_string(d) + " is not 0 or 1");
        }
    }
}

}  // namespace detail

/// Objective evaluation over precomputed per-instance CI values, laid out
/// as in PreparedBags. Labels are assumed already checked.
class ObjectiveEvaluator {
public:
    ObjectiveEvaluator(ObjectiveSpec spec, const PreparedBags& bags) : spec_(spec), bags_(&bags) {
        spec_.validate();
        if (spec_.kind == ObjectiveKind::Regression) detail::require_labels_in_range(bags.labels());
        else detail::require_binary(bags.labels());
    }

    const ObjectiveSpec& spec() const noexcept { return spec_; }

    double operator()(const FuzzyMeasure& g, std::vector<double>& scratch) const {
        bags_->integrate_all(g, scratch);
        return from_ci(scratch);
    }

    double from_ci(std::span<const double> ci) const {
        switch (spec_.kind) {
            case ObjectiveKind::MinMax: return min_max(ci);
            case ObjectiveKind::GeneralizedMean: return generalized_mean(ci);
            case ObjectiveKind::NoisyOr: return noisy_or(ci);
            case ObjectiveKind::Regression: return regression(ci);
        }
        return 0.0;
    }

private:
    std::span<const double> bag_ci(std::span<const double> ci, std::size_t b) const {
        return ci.subspan(bags_->bag_begin(b), bags_->bag_end(b) - bags_->bag_begin(b));
    }

    double min_max(std::span<const double> ci) const {
        double total = 0.0;
        for (std::size_t b = 0; b < bags_->num_bags(); ++b) {
            const auto v = bag_ci(ci, b);
            if (bags_->label(b) == 0.0) {
                const double hi = *std::max_element(v.begin(), v.end());
                total += hi * hi;
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (const double c : v) best = std::min(best, (c - 1.0) * (c - 1.0));
                total += best;
            }
        }
        return total;
    }

    double generalized_mean(std::span<const double> ci) const {
        std::vector<double> t;
        double total = 0.0;
        for (std::size_t b = 0; b < bags_->num_bags(); ++b) {
            const auto v = bag_ci(ci, b);
            t.resize(v.size());
            const bool negative = bags_->label(b) == 0.0;
            const double p = negative ? spec_.p1 : spec_.p2;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double base = negative ? v[i] : std::max(1.0 - v[i], kDeviationFloor);
                t[i] = base > 0.0 ? 2.0 * p * std::log(base)
                                  : -std::numeric_limits<double>::infinity();
            }
            const double lme = detail::log_mean_exp(t);
            if (lme != -std::numeric_limits<double>::infinity()) total += std::exp(lme / p);
        }
        return total;
    }

    double noisy_or(std::span<const double> ci) const {
        const double inv = 1.0 / (2.0 * spec_.sigma2);
        auto kernel = [&](double c) { return std::exp(-(c - spec_.mu) * (c - spec_.mu) * inv); };
        double loglik = 0.0;
        for (std::size_t b = 0; b < bags_->num_bags(); ++b) {
            const auto v = bag_ci(ci, b);
            if (bags_->label(b) == 0.0) {
                for (const double c : v) loglik += std::log(std::max(1.0 - kernel(c), kLogFloor));
            } else {
                double all_miss = 1.0;
                for (const double c : v) all_miss *= 1.0 - kernel(c);
                loglik += std::log(std::max(1.0 - all_miss, kLogFloor));
            }
        }
        return -loglik;
    }

    double regression(std::span<const double> ci) const {
        double total = 0.0;
        for (std::size_t b = 0; b < bags_->num_bags(); ++b) {
            const double d = bags_->label(b);
            double best = std::numeric_limits<double>::infinity();
            for (const double c : bag_ci(ci, b)) best = std::min(best, (c - d) * (c - d));
            total += best;
        }
        return total;
    }

    ObjectiveSpec spec_;
    const PreparedBags* bags_;
};

inline double evaluate_objective(const ObjectiveSpec& spec, const FuzzyMeasure& g,
                                 const BagSet& bags) {
    const PreparedBags prepared(bags);
    const ObjectiveEvaluator eval(spec, prepared);
    std::vector<double> scratch;
    return eval(g, scratch);
}

/// J_M: worst negative instance pushed to 0, best positive instance to 1.
inline double minmax_objective(const FuzzyMeasure& g, const BagSet& bags) {
    return evaluate_objective(ObjectiveSpec::min_max(), g, bags);
}

/// J_G with power means of squared deviations; evaluated in the log domain.
inline double genmean_objective(const FuzzyMeasure& g, const BagSet& bags, double p1, double p2) {
    return evaluate_objective(ObjectiveSpec::generalized_mean(p1, p2), g, bags);
}

/// Negated noisy-or log-likelihood with kernel exp(-(x-mu)^2 / (2 sigma2)).
inline double noisyor_objective(const FuzzyMeasure& g, const BagSet& bags, double mu,
                                double sigma2) {
    return evaluate_objective(ObjectiveSpec::noisy_or(mu, sigma2), g, bags);
}

/// Sum over bags of the smallest squared distance to the bag label.
inline double micir_objective(const FuzzyMeasure& g, const BagSet& bags) {
    return evaluate_objective(ObjectiveSpec::regression(), g, bags);
}

/// Splits every negative bag into singleton bags labelled 0 and keeps
/// positive bags as they are, so the regression objective enforces every
/// negative instance toward 0.
inline BagSet reconstruct_bags_for_classification(const BagSet& bags) {
    require_binary_labels(bags);
    BagSet out;
    out.num_sources = bags.num_sources;
    for (const Bag& b : bags.bags) {
        if (b.label == 1.0) {
            out.bags.push_back(b);
            continue;
        }
        if (b.size() == 1) {
            out.bags.push_back(b);
            out.bags.back().label = 0.0;
            continue;
        }
        for (std::size_t i = 0; i < b.size(); ++i) {
            out.add_bag(b.id + "#" + std::to_string(i), 0.0).add_instance(b.instance(i));
        }
    }
    return out;
}

}  // namespace mici
