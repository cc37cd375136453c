#pragma once

// Synthetic multiple-instance data sets, window bags around point targets,
// and label range normalization.
//
// Every synthetic set is generated from a hidden random monotone measure so
// that some Choquet model can explain it exactly. Classification instances
// are rejection-sampled from the unit cube: positive when the hidden CI is
// at least 0.8, negative when it is at most 0.2. Regression instances are
// drawn near a per-bag centre and, for primary instances, moved along the
// diagonal until the hidden CI equals the bag label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mici/bags.hpp"
#include "mici/choquet.hpp"
#include "mici/error.hpp"
#include "mici/measure.hpp"
#include "mici/rng.hpp"

namespace mici {

enum class SynthTask : std::uint8_t { Contamination, PrimaryRatio, Snr };

inline const char* to_string(SynthTask t) {
    switch (t) {
        case SynthTask::Contamination: return "contamination";
        case SynthTask::PrimaryRatio: return "primary-ratio";
        case SynthTask::Snr: return "snr";
    }
    return "?";
}

inline std::optional<SynthTask> parse_synth_task(const std::string& s) {
    if (s == "contamination") return SynthTask::Contamination;
    if (s == "primary-ratio") return SynthTask::PrimaryRatio;
    if (s == "snr") return SynthTask::Snr;
    return std::nullopt;
}

struct SynthConfig {
    SynthTask task = SynthTask::Contamination;
    int num_bags = 100;
    int instances_per_bag = 10;
    int num_sources = 5;
    // contamination fraction, primary fraction, or SNR in dB
    double sweep = 0.0;
    std::uint64_t seed = 0;
    // Half-width of the per-bag box regression instances are drawn from.
    double bag_spread = 0.05;

    static SynthConfig defaults(SynthTask task, double sweep, std::uint64_t seed) {
        SynthConfig c;
        c.task = task;
        c.sweep = sweep;
        c.seed = seed;
        if (task != SynthTask::Contamination) {
            c.num_bags = 10;
            c.instances_per_bag = 100;
        }
        return c;
    }
};

struct SynthData {
    BagSet bags;
    // truth[b][i]: hidden label of instance i of bag b
    std::vector<std::vector<double>> truth;
    FuzzyMeasure hidden_measure = min_measure(1);
};

/// ceil(fraction * n) without picking up round-off (0.3 * 10 -> 3, not 4).
inline int fraction_count(double fraction, int n) {
    return static_cast<int>(std::ceil(fraction * n - 1e-9));
}

namespace detail {

inline constexpr long kMaxRejections = 50'000'000;

template <typename Accept>
std::vector<double> rejection_instance(const FuzzyMeasure& g, Rng& rng, Accept accept) {
    std::vector<double> x(g.num_sources());
    for (long attempt = 0; attempt < kMaxRejections; ++attempt) {
        for (double& v : x) v = uniform(rng, 0.0, 1.0);
        if (accept(choquet_integral(g, x))) return x;
    }
    throw Error(ErrorCode::InvalidConfig, "rejection sampler exhausted; hidden measure too extreme");
}

/// Moves x along the diagonal so that CI_g(x) == target. Scaling toward the
/// origin or mixing toward the all-ones point are order preserving, and the
/// integral is affine under both.
inline void place_on_level(const FuzzyMeasure& g, std::vector<double>& x, double target) {
    const double c = choquet_integral(g, x);
    if (target <= c) {
        if (c > 0.0) {
            const double a = target / c;
            for (double& v : x) v *= a;
        }
    } else {
        const double lambda = (target - c) / (1.0 - c);
        for (double& v : x) v = v + lambda * (1.0 - v);
    }
}

inline std::vector<double> near_centre(std::span<const double> centre, double spread, Rng& rng) {
    std::vector<double> x(centre.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = spread > 0.0
                   ? std::clamp(centre[k] + uniform(rng, -spread, spread), 0.0, 1.0)
                   : uniform(rng, 0.0, 1.0);
    }
    return x;
}

inline void check_synth(const SynthConfig& c) {
    if (c.num_bags < 1 || c.instances_per_bag < 1) {
        throw Error(ErrorCode::InvalidConfig, "bag counts must be positive");
    }
    if (c.num_sources < 1 || c.num_sources > kMaxSources) {
        throw Error(ErrorCode::InvalidConfig, "number of sources out of range");
    }
    if (c.task == SynthTask::Snr) {
        if (!std::isfinite(c.sweep)) throw Error(ErrorCode::InvalidSweep, "SNR must be finite");
    } else if (!(c.sweep >= 0.0 && c.sweep <= 1.0)) {
        throw Error(ErrorCode::InvalidSweep, "fraction sweep must be in [0,1]");
    }
}

}  // namespace detail

/// Gaussian noise at the requested SNR (dB), where signal power is the mean
/// square of `signal`. Returned values are not clipped.
inline std::vector<double> add_white_noise(std::span<const double> signal, double snr_db, Rng& rng) {
    double power = 0.0;
    for (const double v : signal) power += v * v;
    power /= static_cast<double>(std::max<std::size_t>(signal.size(), 1));
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    std::vector<double> out(signal.begin(), signal.end());
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (double& v : out) v += noise(rng);
    }
    return out;
}

inline SynthData gen_synthetic(const SynthConfig& config) {
    detail::check_synth(config);
    Rng rng(config.seed);
    const int m = config.num_sources;
    const int n = config.instances_per_bag;

    SynthData out;
    out.hidden_measure = init_measure(m, InitMode::CoinFlip, rng);
    const FuzzyMeasure& g = out.hidden_measure;
    out.bags.num_sources = m;

    if (config.task == SynthTask::Contamination) {
        const int contaminated = fraction_count(config.sweep, n);
        auto positive = [](double ci) { return ci >= 0.8; };
        auto negative = [](double ci) { return ci <= 0.2; };
        for (int b = 0; b < config.num_bags; ++b) {
            const bool pos = b % 2 == 0;
            Bag& bag = out.bags.add_bag("bag" + std::to_string(b), pos ? 1.0 : 0.0);
            std::vector<double> labels(n, pos ? 1.0 : 0.0);
            if (!pos) {
                std::fill(labels.begin(), labels.begin() + contaminated, 1.0);
                std::shuffle(labels.begin(), labels.end(), rng);
            }
            for (int i = 0; i < n; ++i) {
                bag.add_instance(labels[i] == 1.0 ? detail::rejection_instance(g, rng, positive)
                                                  : detail::rejection_instance(g, rng, negative));
            }
            out.truth.push_back(std::move(labels));
        }
        return out;
    }

    // Regression families.
    const FuzzyMeasure other = init_measure(m, InitMode::CoinFlip, rng);
    const int primaries = config.task == SynthTask::Snr ? n : fraction_count(config.sweep, n);
    for (int b = 0; b < config.num_bags; ++b) {
        const double label = uniform(rng, 0.0, 1.0);
        Bag& bag = out.bags.add_bag("bag" + std::to_string(b), label);
        std::vector<double> centre(m);
        for (double& v : centre) v = uniform(rng, 0.0, 1.0);
        std::vector<bool> is_primary(n, false);
        std::fill(is_primary.begin(), is_primary.begin() + primaries, true);
        std::shuffle(is_primary.begin(), is_primary.end(), rng);
        std::vector<double> truth(n);
        for (int i = 0; i < n; ++i) {
            std::vector<double> x = detail::near_centre(centre, config.bag_spread, rng);
            if (is_primary[i]) {
                detail::place_on_level(g, x, label);
                truth[i] = label;
            } else {
                truth[i] = choquet_integral(other, x);
            }
            bag.add_instance(x);
        }
        out.truth.push_back(std::move(truth));
    }

    if (config.task == SynthTask::Snr) {
        std::vector<double> flat;
        for (const Bag& bag : out.bags.bags) flat.insert(flat.end(), bag.data.begin(), bag.data.end());
        std::vector<double> noisy = add_white_noise(flat, config.sweep, rng);
        std::size_t k = 0;
        for (Bag& bag : out.bags.bags) {
            for (double& v : bag.data) v = std::clamp(noisy[k++], 0.0, 1.0);
        }
    }
    return out;
}

/// Small two-class set that a Choquet model separates almost perfectly:
/// negative bags hold instances with every source below 0.1, each positive
/// bag holds one instance with every source above 0.9 among uniform ones.
inline BagSet separable_toy_set(int bags_per_class, int instances_per_bag, int num_sources,
                                std::uint64_t seed) {
    Rng rng(seed);
    BagSet set;
    set.num_sources = num_sources;
    std::vector<double> x(num_sources);
    for (int b = 0; b < bags_per_class; ++b) {
        Bag& neg = set.add_bag("neg" + std::to_string(b), 0.0);
        for (int i = 0; i < instances_per_bag; ++i) {
            for (double& v : x) v = uniform(rng, 0.0, 0.1);
            neg.add_instance(x);
        }
        Bag& pos = set.add_bag("pos" + std::to_string(b), 1.0);
        const int hit = std::uniform_int_distribution<int>(0, instances_per_bag - 1)(rng);
        for (int i = 0; i < instances_per_bag; ++i) {
            for (double& v : x) v = i == hit ? uniform(rng, 0.9, 1.0) : uniform(rng, 0.0, 1.0);
            pos.add_instance(x);
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Window bags

/// rows x cols grid of m-vectors, row-major.
struct ConfidenceGrid {
    int rows = 0;
    int cols = 0;
    int num_sources = 0;
    std::vector<double> data;

    std::span<const double> pixel(int r, int c) const {
        return std::span<const double>(data).subspan(
            (static_cast<std::size_t>(r) * cols + c) * num_sources, num_sources);
    }
};

struct GridPoint {
    int row = 0;
    int col = 0;
};

/// One positive bag per point holding its (2r+1)^2 window (clipped to the
/// grid), plus one negative bag of background pixels drawn without
/// replacement from pixels outside every window.
inline BagSet build_window_bags(const ConfidenceGrid& grid, std::span<const GridPoint> points,
                                int halo_radius, int num_background, Rng& rng) {
    if (halo_radius < 0) throw Error(ErrorCode::InvalidConfig, "halo radius must be >= 0");
    if (grid.data.size() != static_cast<std::size_t>(grid.rows) * grid.cols * grid.num_sources) {
        throw Error(ErrorCode::DimensionMismatch, "grid data size does not match its shape");
    }
    BagSet set;
    set.num_sources = grid.num_sources;
    std::vector<char> covered(static_cast<std::size_t>(grid.rows) * grid.cols, 0);
    for (std::size_t k = 0; k < points.size(); ++k) {
        const GridPoint p = points[k];
        if (p.row < 0 || p.row >= grid.rows || p.col < 0 || p.col >= grid.cols) {
            throw Error(ErrorCode::Range, "target point outside the grid");
        }
        Bag& bag = set.add_bag("target" + std::to_string(k), 1.0);
        for (int r = std::max(0, p.row - halo_radius); r <= std::min(grid.rows - 1, p.row + halo_radius); ++r) {
            for (int c = std::max(0, p.col - halo_radius); c <= std::min(grid.cols - 1, p.col + halo_radius); ++c) {
                bag.add_instance(grid.pixel(r, c));
                covered[static_cast<std::size_t>(r) * grid.cols + c] = 1;
            }
        }
    }
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < covered.size(); ++i) {
        if (!covered[i]) free.push_back(i);
    }
    if (num_background < 0 || static_cast<std::size_t>(num_background) > free.size()) {
        throw Error(ErrorCode::InsufficientBackground,
                    "requested " + std::to_string(num_background) + " background pixels, only " +
                        std::to_string(free.size()) + " available");
    }
    if (num_background > 0) {
        Bag& bg = set.add_bag("background", 0.0);
        for (int k = 0; k < num_background; ++k) {
            const std::size_t j = std::uniform_int_distribution<std::size_t>(k, free.size() - 1)(rng);
            std::swap(free[k], free[j]);
            const std::size_t idx = free[k];
            bg.add_instance(grid.pixel(static_cast<int>(idx / grid.cols), static_cast<int>(idx % grid.cols)));
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Label normalization

struct NormalizedLabels {
    std::vector<double> values;
    double min = 0.0;
    double max = 1.0;

    double denormalize(double y) const noexcept { return min + y * (max - min); }
};

inline NormalizedLabels normalize_labels(std::span<const double> labels) {
    if (labels.empty()) throw Error(ErrorCode::DegenerateRange, "no labels to normalize");
    const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
    if (!(*hi > *lo)) throw Error(ErrorCode::DegenerateRange, "labels span an empty range");
    NormalizedLabels out{{}, *lo, *hi};
    out.values.reserve(labels.size());
    const double range = *hi - *lo;
    for (const double y : labels) out.values.push_back((y - *lo) / range);
    return out;
}

}  // namespace mici
