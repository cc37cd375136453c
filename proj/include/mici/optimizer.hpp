#pragma once

// Evolutionary search over monotone fuzzy measures.
//
// Each generation every member is mutated once (one usage-weighted element
// with probability eta, otherwise every element in usage order), parents and
// children are pooled, the best quarter of the pool survives outright and
// the rest of the next generation is drawn by fitness from the remainder.

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mici/bags.hpp"
#include "mici/choquet.hpp"
#include "mici/error.hpp"
#include "mici/measure.hpp"
#include "mici/objectives.hpp"
#include "mici/rng.hpp"
#include "mici/truncated_gaussian.hpp"

namespace mici {

enum class Sampler : std::uint8_t {
    MeasureElement,  // usage-count driven ("ME")
    ValidInterval,   // widest valid interval first ("VI")
};

inline const char* to_string(Sampler s) {
    return s == Sampler::MeasureElement ? "me" : "vi";
}

inline std::optional<Sampler> parse_sampler(const std::string& s) {
    if (s == "me") return Sampler::MeasureElement;
    if (s == "vi") return Sampler::ValidInterval;
    return std::nullopt;
}

struct OptimizerConfig {
    int population = 30;
    int max_iterations = 5000;
    double fitness_threshold = 1e-4;
    double small_mutation_rate = 0.8;
    Sampler sampler = Sampler::MeasureElement;
    std::uint64_t seed = 0;
    // The run stops once the best objective has improved by no more than
    // fitness_threshold over this many generations. 1 compares consecutive
    // generations only, which under elitism fires at the first generation
    // without a large enough improvement.
    int stall_window = 100;
    // Worker threads for mutation and fitness evaluation. Results do not
    // depend on this value.
    int threads = 1;

    void validate() const {
        if (population < 2 || population % 2 != 0) {
            throw Error(ErrorCode::InvalidConfig, "population must be a positive even number");
        }
        if (max_iterations < 0) throw Error(ErrorCode::InvalidConfig, "max_iterations < 0");
        if (!(fitness_threshold > 0.0)) {
            throw Error(ErrorCode::InvalidConfig, "fitness threshold must be positive");
        }
        if (!(small_mutation_rate >= 0.0 && small_mutation_rate <= 1.0)) {
            throw Error(ErrorCode::InvalidConfig, "small mutation rate must be in [0,1]");
        }
        if (stall_window < 1) throw Error(ErrorCode::InvalidConfig, "stall_window must be >= 1");
        if (threads < 1) throw Error(ErrorCode::InvalidConfig, "threads must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Mutation

/// Element-choice tables derived from usage counts. The pinned full set is
/// never a candidate.
class MutationPlan {
public:
    explicit MutationPlan(const UsageCounts& counts) : num_sources_(counts.num_sources()) {
        const Subset top = full_set(num_sources_);
        cumulative_.reserve(top - 1);
        std::uint64_t acc = 0;
        for (Subset s = 1; s < top; ++s) {
            acc += counts[s];
            cumulative_.push_back(acc);
        }
        order_.resize(top - 1);
        std::iota(order_.begin(), order_.end(), Subset{1});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](Subset a, Subset b) { return counts[a] > counts[b]; });
    }

    int num_sources() const noexcept { return num_sources_; }

    /// Element l with probability v_l / sum v; uniform when every count is 0.
    Subset pick_element(Rng& rng) const {
        if (cumulative_.empty()) return 0;
        const std::uint64_t total = cumulative_.back();
        if (total == 0) {
            std::uniform_int_distribution<std::size_t> d(0, cumulative_.size() - 1);
            return static_cast<Subset>(d(rng) + 1);
        }
        std::uniform_int_distribution<std::uint64_t> d(0, total - 1);
        const std::uint64_t r = d(rng);
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
        return static_cast<Subset>(it - cumulative_.begin() + 1);
    }

    /// Non-full elements by descending count, ties by ascending bitmask.
    std::span<const Subset> visit_order() const noexcept { return order_; }

private:
    int num_sources_;
    std::vector<std::uint64_t> cumulative_;
    std::vector<Subset> order_;
};

namespace detail {

// Truncated Gaussian centred on the incumbent, scaled to a quarter of the
// available room.
inline double resample_in_interval(double current, ValidInterval iv, Rng& rng) {
    const double width = iv.width();
    if (!(width > 0.0)) return iv.lower;
    return sample_truncated_gaussian(std::clamp(current, iv.lower, iv.upper), width / 4.0,
                                     iv.lower, iv.upper, rng);
}

inline void check_plan(const FuzzyMeasure& g, const MutationPlan& plan) {
    if (plan.num_sources() != g.num_sources()) {
        throw Error(ErrorCode::DimensionMismatch, "usage counts do not match measure size");
    }
}

}  // namespace detail

inline FuzzyMeasure mutate_small(const FuzzyMeasure& g, const MutationPlan& plan, Rng& rng) {
    detail::check_plan(g, plan);
    const int m = g.num_sources();
    if (m < 2) return g;
    std::vector<double> dense(g.dense().begin(), g.dense().end());
    const Subset l = plan.pick_element(rng);
    dense[l] = detail::resample_in_interval(dense[l], detail::interval_dense(m, dense, l), rng);
    assert(is_valid_measure(m, dense));
    return detail::make_unchecked(m, std::move(dense));
}

inline FuzzyMeasure mutate_small(const FuzzyMeasure& g, const UsageCounts& counts, Rng& rng) {
    return mutate_small(g, MutationPlan(counts), rng);
}

/// Resamples every non-full element in usage order; each interval is taken
/// against the partially updated measure.
inline FuzzyMeasure mutate_large(const FuzzyMeasure& g, const MutationPlan& plan, Rng& rng) {
    detail::check_plan(g, plan);
    const int m = g.num_sources();
    std::vector<double> dense(g.dense().begin(), g.dense().end());
    for (const Subset l : plan.visit_order()) {
        dense[l] = detail::resample_in_interval(dense[l], detail::interval_dense(m, dense, l), rng);
    }
    assert(is_valid_measure(m, dense));
    return detail::make_unchecked(m, std::move(dense));
}

inline FuzzyMeasure mutate_large(const FuzzyMeasure& g, const UsageCounts& counts, Rng& rng) {
    return mutate_large(g, MutationPlan(counts), rng);
}

/// Legacy sampler: evaluate every valid interval, redraw the widest element
/// uniformly inside it.
inline FuzzyMeasure mutate_valid_interval(const FuzzyMeasure& g, Rng& rng) {
    const int m = g.num_sources();
    const Subset top = g.full();
    Subset widest = 0;
    ValidInterval best{0.0, 0.0};
    double best_width = -1.0;
    for (Subset s = 1; s < top; ++s) {
        const ValidInterval iv = detail::interval_dense(m, g.dense(), s);
        if (iv.width() > best_width) {
            best_width = iv.width();
            best = iv;
            widest = s;
        }
    }
    if (widest == 0 || !(best_width > 0.0)) return g;
    std::vector<double> dense(g.dense().begin(), g.dense().end());
    dense[widest] = uniform(rng, best.lower, best.upper);
    assert(is_valid_measure(m, dense));
    return detail::make_unchecked(m, std::move(dense));
}

/// Legacy large-scale pass: order the non-full elements by valid-interval
/// width (widest first, ties by bitmask) and redraw each uniformly inside its
/// interval against the partially updated measure.
inline FuzzyMeasure mutate_valid_interval_all(const FuzzyMeasure& g, Rng& rng) {
    const int m = g.num_sources();
    const Subset top = g.full();
    std::vector<std::pair<double, Subset>> widths;
    widths.reserve(top - 1);
    for (Subset s = 1; s < top; ++s) {
        widths.emplace_back(detail::interval_dense(m, g.dense(), s).width(), s);
    }
    std::stable_sort(widths.begin(), widths.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> dense(g.dense().begin(), g.dense().end());
    for (const auto& [width, s] : widths) {
        const ValidInterval iv = detail::interval_dense(m, dense, s);
        dense[s] = uniform(rng, iv.lower, iv.upper);
    }
    assert(is_valid_measure(m, dense));
    return detail::make_unchecked(m, std::move(dense));
}

// ---------------------------------------------------------------------------
// Selection

inline constexpr double kSelectionEpsilon = 1e-9;

/// Indices into the pooled objectives (parents then children) that survive.
/// The best pool_size/4 are kept in order of objective (ties by index); the
/// other half of the next generation is drawn without replacement from the
/// rest with weight (max objective - objective + eps).
inline std::vector<std::size_t> select_survivors(std::span<const double> objectives,
                                                 std::size_t population, Rng& rng) {
    if (objectives.size() != 2 * population || population % 2 != 0) {
        throw Error(ErrorCode::SizeMismatch, "pooled objectives must number 2P with P even");
    }
    std::vector<std::size_t> order(objectives.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return objectives[a] < objectives[b]; });

    const std::size_t elites = population / 2;
    std::vector<std::size_t> chosen(order.begin(), order.begin() + elites);

    std::vector<std::size_t> rest(order.begin() + elites, order.end());
    std::sort(rest.begin(), rest.end());
    const double worst = *std::max_element(objectives.begin(), objectives.end());
    std::vector<double> weights(rest.size());
    for (std::size_t i = 0; i < rest.size(); ++i) {
        weights[i] = worst - objectives[rest[i]] + kSelectionEpsilon;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = elites; k < population; ++k) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double r = unit(rng) * total;
        std::size_t pick = weights.size() - 1;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            if (r < weights[i]) {
                pick = i;
                break;
            }
            r -= weights[i];
        }
        while (weights[pick] <= 0.0) --pick;  // round-off landed on a taken slot
        chosen.push_back(rest[pick]);
        weights[pick] = 0.0;
    }
    return chosen;
}

using Population = std::vector<FuzzyMeasure>;

inline Population select_next_generation(const Population& parents, const Population& children,
                                         std::span<const double> objectives, Rng& rng) {
    if (parents.size() != children.size()) {
        throw Error(ErrorCode::SizeMismatch, "parent and child populations differ in size");
    }
    const auto idx = select_survivors(objectives, parents.size(), rng);
    Population next;
    next.reserve(idx.size());
    for (const std::size_t i : idx) {
        next.push_back(i < parents.size() ? parents[i] : children[i - parents.size()]);
    }
    return next;
}

// ---------------------------------------------------------------------------
// Training

struct TrainedModel {
    FuzzyMeasure best_measure = min_measure(1);
    double best_objective = 0.0;
    // Best-so-far objective: entry 0 is the initial population, entry t
    // the value after generation t.
    std::vector<double> trace;
    std::vector<double> trace_wallclock_ms;  // not part of the result identity
    int iterations_run = 0;
    bool converged = false;
    ObjectiveSpec objective;
    OptimizerConfig config;

    bool same_result(const TrainedModel& o) const {
        return best_measure == o.best_measure && best_objective == o.best_objective &&
               trace == o.trace && iterations_run == o.iterations_run &&
               converged == o.converged;
    }
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, 0);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i, w);
        });
    }
}

// Stream tags; iteration streams use t + 1 so initialisation stays apart.
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kSelectionMember = 0xFFFF'FFFFULL;

}  // namespace detail

inline TrainedModel train(const BagSet& bags, const ObjectiveSpec& spec,
                          const OptimizerConfig& config) {
    config.validate();
    if (bags.empty()) throw Error(ErrorCode::EmptyBagSet, "no training bags");
    validate_bagset(bags);
    const int m = bags.num_sources;
    const std::size_t P = static_cast<std::size_t>(config.population);

    const PreparedBags prepared(bags);
    const ObjectiveEvaluator evaluate(spec, prepared);
    const MutationPlan plan(prepared.usage_counts());

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    const int workers = config.threads;
    std::vector<std::vector<double>> scratch(static_cast<std::size_t>(workers));

    Population population(P, min_measure(m));
    std::vector<double> fitness(P);
    detail::parallel_for(P, workers, [&](std::size_t p, std::size_t w) {
        Rng rng = derive_stream(config.seed, detail::kInitStream, p);
        population[p] = init_measure(m, InitMode::CoinFlip, rng);
        fitness[p] = evaluate(population[p], scratch[w]);
    });

    TrainedModel model;
    model.objective = spec;
    model.config = config;
    {
        const auto best = std::min_element(fitness.begin(), fitness.end()) - fitness.begin();
        model.best_measure = population[best];
        model.best_objective = fitness[best];
    }
    model.trace.push_back(model.best_objective);
    model.trace_wallclock_ms.push_back(elapsed_ms());

    Population children(P, min_measure(m));
    std::vector<double> pooled(2 * P);

    for (int t = 0; t < config.max_iterations; ++t) {
        const std::uint64_t stream = static_cast<std::uint64_t>(t) + 1;
        detail::parallel_for(P, workers, [&](std::size_t p, std::size_t w) {
            Rng rng = derive_stream(config.seed, stream, p);
            const bool small =
                std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.small_mutation_rate;
            if (config.sampler == Sampler::ValidInterval) {
                children[p] = small ? mutate_valid_interval(population[p], rng)
                                    : mutate_valid_interval_all(population[p], rng);
            } else {
                children[p] = small ? mutate_small(population[p], plan, rng)
                                    : mutate_large(population[p], plan, rng);
            }
            pooled[P + p] = evaluate(children[p], scratch[w]);
        });
        std::copy(fitness.begin(), fitness.end(), pooled.begin());

        Rng select_rng = derive_stream(config.seed, stream, detail::kSelectionMember);
        const auto survivors = select_survivors(pooled, P, select_rng);
        Population next;
        next.reserve(P);
        for (std::size_t k = 0; k < P; ++k) {
            const std::size_t i = survivors[k];
            next.push_back(i < P ? population[i] : children[i - P]);
            fitness[k] = pooled[i];
        }
        population = std::move(next);

        const auto best = std::min_element(fitness.begin(), fitness.end()) - fitness.begin();
        if (fitness[best] < model.best_objective) {
            model.best_objective = fitness[best];
            model.best_measure = population[best];
        }
        model.iterations_run = t + 1;
        model.trace.push_back(model.best_objective);
        model.trace_wallclock_ms.push_back(elapsed_ms());
#ifndef NDEBUG
        for (const auto& g : population) assert(is_valid_measure(m, g.dense()));
#endif
        const std::size_t window = static_cast<std::size_t>(config.stall_window);
        if (model.trace.size() > window &&
            model.trace[model.trace.size() - 1 - window] - model.trace.back() <=
                config.fitness_threshold) {
            model.converged = true;
            break;
        }
    }
    return model;
}

}  // namespace mici
