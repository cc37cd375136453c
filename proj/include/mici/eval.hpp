#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mici/bags.hpp"
#include "mici/choquet.hpp"
#include "mici/error.hpp"
#include "mici/measure.hpp"

namespace mici {

enum class ErrorKind : std::uint8_t { Classification, Regression };

/// Classification: |y - yhat|. Regression: |(y - yhat) / y| for y in (0,1],
/// |y - yhat| at y = 0.
inline double relative_error(ErrorKind kind, double y, double yhat) {
    if (!std::isfinite(y) || !std::isfinite(yhat)) {
        throw Error(ErrorCode::Domain, "relative error needs finite inputs");
    }
    if (kind == ErrorKind::Classification) return std::abs(y - yhat);
    if (!(y >= 0.0 && y <= 1.0)) {
        throw Error(ErrorCode::Domain, "regression truth " + std::to_string(y) + " outside [0,1]");
    }
    return y == 0.0 ? std::abs(y - yhat) : std::abs((y - yhat) / y);
}

inline double mean_relative_error(ErrorKind kind, std::span<const double> truth,
                                  std::span<const double> preds) {
    if (truth.size() != preds.size() || truth.empty()) {
        throw Error(ErrorCode::LengthMismatch, "truth and predictions differ in length or are empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sum += relative_error(kind, truth[i], preds[i]);
    return sum / static_cast<double>(truth.size());
}

inline double rmse(std::span<const double> truth, std::span<const double> preds) {
    if (truth.size() != preds.size() || truth.empty()) {
        throw Error(ErrorCode::LengthMismatch, "truth and predictions differ in length or are empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = preds[i] - truth[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(truth.size()));
}

struct RocPoint {
    double far = 0.0;
    double pd = 0.0;
};

/// ROC by sweeping a threshold down through the distinct scores. Tied
/// scores enter together, so each distinct score contributes one point.
inline std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
    }
    std::size_t positives = 0;
    for (const int l : labels) {
        if (l != 0 && l != 1) throw Error(ErrorCode::NonBinaryLabel, "ROC labels must be 0 or 1");
        positives += static_cast<std::size_t>(l);
    }
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw Error(ErrorCode::SingleClass, "ROC needs both positive and negative samples");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> curve{{0.0, 0.0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == s; ++i) {
            if (labels[order[i]] == 1) ++tp;
            else ++fp;
        }
        curve.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                         static_cast<double>(tp) / static_cast<double>(positives)});
    }
    return curve;
}

/// Trapezoidal area under the ROC curve for FAR in [0, far_cap], with the
/// curve interpolated at the cap. Not normalized: a perfect detector scores
/// far_cap.
inline double roc_auc_capped(std::span<const double> scores, std::span<const int> labels,
                             double far_cap) {
    if (!(far_cap > 0.0 && far_cap <= 1.0)) {
        throw Error(ErrorCode::Domain, "FAR cap must be in (0,1]");
    }
    const std::vector<RocPoint> curve = roc_curve(scores, labels);
    double area = 0.0;
    for (std::size_t k = 1; k < curve.size(); ++k) {
        const RocPoint a = curve[k - 1];
        const RocPoint b = curve[k];
        if (a.far >= far_cap) break;
        if (b.far <= far_cap) {
            area += (b.far - a.far) * (a.pd + b.pd) / 2.0;
        } else {
            const double t = (far_cap - a.far) / (b.far - a.far);
            const double pd_cap = a.pd + t * (b.pd - a.pd);
            area += (far_cap - a.far) * (a.pd + pd_cap) / 2.0;
            break;
        }
    }
    return area;
}

enum class Aggregation : std::uint8_t { Mean, Max, Min };

inline std::optional<Aggregation> parse_aggregation(const std::string& s) {
    if (s == "mean") return Aggregation::Mean;
    if (s == "max") return Aggregation::Max;
    if (s == "min") return Aggregation::Min;
    return std::nullopt;
}

inline double aggregate(std::span<const double> values, Aggregation how) {
    switch (how) {
        case Aggregation::Max: return *std::max_element(values.begin(), values.end());
        case Aggregation::Min: return *std::min_element(values.begin(), values.end());
        case Aggregation::Mean: break;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// CI of every instance, bag by bag.
inline std::vector<std::vector<double>> predict_instances(const BagSet& set, const FuzzyMeasure& g) {
    std::vector<std::vector<double>> out;
    out.reserve(set.size());
    for (const Bag& b : set.bags) {
        std::vector<double> ci(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) ci[i] = choquet_integral(g, b.instance(i));
        out.push_back(std::move(ci));
    }
    return out;
}

inline std::vector<double> predict_bags(const BagSet& set, const FuzzyMeasure& g,
                                        Aggregation how = Aggregation::Mean) {
    std::vector<double> out;
    out.reserve(set.size());
    for (const auto& ci : predict_instances(set, g)) {
        if (ci.empty()) throw Error(ErrorCode::SizeMismatch, "cannot aggregate an empty bag");
        out.push_back(aggregate(ci, how));
    }
    return out;
}

}  // namespace mici
