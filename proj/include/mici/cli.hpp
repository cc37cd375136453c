#pragma once

// Command-line driver: train, predict, eval, synth, bench.
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mici/datagen.hpp"
#include "mici/eval.hpp"
#include "mici/io.hpp"
#include "mici/objectives.hpp"
#include "mici/optimizer.hpp"

namespace mici {

namespace detail {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "1..5" or "1,3,7".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    try {
        if (const auto dots = text.find(".."); dots != std::string::npos) {
            const auto lo = std::stoull(text.substr(0, dots));
            const auto hi = std::stoull(text.substr(dots + 2));
            if (hi < lo) throw UsageError("empty seed range '" + text + "'");
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
            return out;
        }
        std::stringstream ss(text);
        for (std::string tok; std::getline(ss, tok, ',');) out.push_back(std::stoull(tok));
    } catch (const std::logic_error&) {
        throw UsageError("bad seed list '" + text + "'");
    }
    if (out.empty()) throw UsageError("empty seed list");
    return out;
}

inline std::filesystem::path default_truth_path(const std::filesystem::path& out) {
    std::filesystem::path p = out;
    p.replace_extension();
    p += ".truth.csv";
    return p;
}

struct TrainArgs {
    std::string data;
    std::string objective = "minmax";
    double p1 = 10.0;
    double p2 = -10.0;
    double mu = 1.0;
    double sigma2 = 0.1;
    int pop = 30;
    int max_iter = 5000;
    double fit_thresh = 1e-4;
    double eta = 0.8;
    std::string sampler = "me";
    std::uint64_t seed = 0;
    int stall_window = 100;
    int threads = 1;
    bool reconstruct = false;
    std::string out;
    std::string trace;
};

inline void add_optimizer_options(CLI::App* cmd, TrainArgs& a) {
    cmd->add_option("--objective", a.objective, "minmax|genmean|noisyor|micir")
        ->check(CLI::IsMember({"minmax", "genmean", "noisyor", "micir"}));
    cmd->add_option("--p1", a.p1, "generalized-mean exponent for negative bags");
    cmd->add_option("--p2", a.p2, "generalized-mean exponent for positive bags");
    cmd->add_option("--mu", a.mu, "noisy-or kernel mean");
    cmd->add_option("--sigma2", a.sigma2, "noisy-or kernel variance");
    cmd->add_option("--pop", a.pop, "population size (even)");
    cmd->add_option("--max-iter", a.max_iter, "maximum generations");
    cmd->add_option("--fit-thresh", a.fit_thresh, "stop when the best objective improves less");
    cmd->add_option("--eta", a.eta, "small-mutation rate");
    cmd->add_option("--stall-window", a.stall_window, "generations over which improvement is measured");
    cmd->add_option("--threads", a.threads, "worker threads");
}

inline ObjectiveSpec objective_of(const TrainArgs& a) {
    ObjectiveSpec spec;
    spec.kind = *parse_objective_kind(a.objective);
    spec.p1 = a.p1;
    spec.p2 = a.p2;
    spec.mu = a.mu;
    spec.sigma2 = a.sigma2;
    spec.validate();
    return spec;
}

inline OptimizerConfig config_of(const TrainArgs& a, Sampler sampler, std::uint64_t seed) {
    OptimizerConfig c;
    c.population = a.pop;
    c.max_iterations = a.max_iter;
    c.fitness_threshold = a.fit_thresh;
    c.small_mutation_rate = a.eta;
    c.sampler = sampler;
    c.seed = seed;
    c.stall_window = a.stall_window;
    c.threads = a.threads;
    c.validate();
    return c;
}

inline int cmd_train(const TrainArgs& a) {
    BagSet bags = read_bags_csv(a.data);
    if (a.reconstruct) bags = reconstruct_bags_for_classification(bags);
    const ObjectiveSpec spec = objective_of(a);
    const OptimizerConfig config = config_of(a, *parse_sampler(a.sampler), a.seed);
    const TrainedModel model = train(bags, spec, config);
    if (!a.trace.empty()) write_file_atomic(a.trace, trace_to_csv(model));
    write_model(a.out, model);
    return 0;
}

struct PredictArgs {
    std::string data;
    std::string model;
    std::string agg = "mean";
    std::string out;
};

inline int cmd_predict(const PredictArgs& a) {
    const BagSet bags = read_bags_csv(a.data);
    const ModelFile model = read_model(a.model);
    if (model.measure.num_sources() != bags.num_sources) {
        throw Error(ErrorCode::DimensionMismatch, "model and data differ in number of sources");
    }
    const auto ci = predict_instances(bags, model.measure);
    std::vector<double> agg;
    for (const auto& v : ci) agg.push_back(aggregate(v, *parse_aggregation(a.agg)));
    write_file_atomic(a.out, predictions_to_csv(bags, ci, agg));
    return 0;
}

struct EvalArgs {
    std::string preds;
    std::string truth;
    std::string metric;
    double far_cap = 1e-3;
    std::string roc_out;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const InstanceTable preds = parse_instance_table(read_file(a.preds));
    const std::string truth_text = read_file(a.truth);
    const bool bag_truth = truth_text.rfind("bag_id,label", 0) == 0;

    std::map<std::string, double> bag_labels;
    InstanceTable truth;
    if (bag_truth) {
        for (const Bag& b : parse_bags_csv(truth_text).bags) bag_labels[b.id] = b.label;
    } else {
        truth = parse_instance_table(truth_text);
    }

    if (a.metric == "rmse") {
        if (!bag_truth) throw Error(ErrorCode::Schema, "rmse needs a bag CSV as truth");
        std::vector<double> y, yhat;
        for (const auto& [id, score] : preds.aggregates) {
            const auto it = bag_labels.find(id);
            if (it == bag_labels.end()) throw Error(ErrorCode::LengthMismatch, "no truth for bag '" + id + "'");
            y.push_back(it->second);
            yhat.push_back(score);
        }
        out << "rmse " << format_double(rmse(y, yhat)) << '\n';
        return 0;
    }

    std::vector<double> y, yhat;
    for (const std::string& id : preds.bag_order) {
        const auto pit = preds.instances.find(id);
        if (pit == preds.instances.end()) continue;
        const auto& scores = pit->second;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            double label = 0.0;
            if (bag_truth) {
                const auto it = bag_labels.find(id);
                if (it == bag_labels.end()) throw Error(ErrorCode::LengthMismatch, "no truth for bag '" + id + "'");
                label = it->second;
            } else {
                const auto it = truth.instances.find(id);
                if (it == truth.instances.end() || it->second.size() != scores.size()) {
                    throw Error(ErrorCode::LengthMismatch, "truth does not cover bag '" + id + "'");
                }
                label = it->second[i];
            }
            y.push_back(label);
            yhat.push_back(scores[i]);
        }
    }

    if (a.metric == "auc") {
        std::vector<int> labels;
        for (const double v : y) {
            if (!is_binary_label(v)) throw Error(ErrorCode::NonBinaryLabel, "auc needs 0/1 truth");
            labels.push_back(static_cast<int>(v));
        }
        if (!a.roc_out.empty()) write_file_atomic(a.roc_out, roc_to_csv(roc_curve(yhat, labels)));
        out << "auc " << format_double(roc_auc_capped(yhat, labels, a.far_cap)) << '\n';
        return 0;
    }
    const ErrorKind kind = a.metric == "relerr-cls" ? ErrorKind::Classification : ErrorKind::Regression;
    out << a.metric << ' ' << format_double(mean_relative_error(kind, y, yhat)) << '\n';
    return 0;
}

struct SynthArgs {
    std::string task;
    double sweep = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string truth_out;
    int num_bags = 0;
    int instances = 0;
    int sources = 5;
};

inline SynthConfig synth_config_of(const SynthArgs& a) {
    SynthConfig c = SynthConfig::defaults(*parse_synth_task(a.task), a.sweep, a.seed);
    if (a.num_bags > 0) c.num_bags = a.num_bags;
    if (a.instances > 0) c.instances_per_bag = a.instances;
    c.num_sources = a.sources;
    return c;
}

inline int cmd_synth(const SynthArgs& a) {
    const SynthData data = gen_synthetic(synth_config_of(a));
    const std::filesystem::path truth = a.truth_out.empty() ? default_truth_path(a.out) : std::filesystem::path(a.truth_out);
    write_bags_csv(a.out, data.bags);
    write_file_atomic(truth, truth_to_csv(data.bags, data.truth));
    return 0;
}

struct BenchArgs {
    std::string task = "contamination";
    double sweep = 0.0;
    std::string samplers = "me,vi";
    std::string seeds = "1..5";
    std::string out;
    TrainArgs train;
    bool objective_set = false;
};

inline int cmd_bench(const BenchArgs& a, std::ostream& log) {
    std::vector<Sampler> samplers;
    {
        std::stringstream ss(a.samplers);
        for (std::string tok; std::getline(ss, tok, ',');) {
            const auto s = parse_sampler(tok);
            if (!s) throw UsageError("unknown sampler '" + tok + "'");
            samplers.push_back(*s);
        }
    }
    const auto seeds = parse_seed_list(a.seeds);
    TrainArgs targs = a.train;
    if (!a.objective_set && (a.task == "primary-ratio" || a.task == "snr")) targs.objective = "micir";
    const ObjectiveSpec spec = objective_of(targs);

    std::string csv = "sampler,seed,iterations,wallclock_ms,best_objective,converged\n";
    for (const std::uint64_t seed : seeds) {
        const BagSet bags = a.task == "toy"
                                ? separable_toy_set(5, 5, 5, seed)
                                : gen_synthetic(SynthConfig::defaults(*parse_synth_task(a.task), a.sweep, seed)).bags;
        for (const Sampler s : samplers) {
            const auto t0 = std::chrono::steady_clock::now();
            const TrainedModel model = train(bags, spec, config_of(targs, s, seed));
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            csv += std::string(to_string(s)) + ',' + std::to_string(seed) + ',' +
                   std::to_string(model.iterations_run) + ',' + format_double(ms) + ',' +
                   format_double(model.best_objective) + ',' + (model.converged ? "1" : "0") + '\n';
            log << to_string(s) << " seed " << seed << ": " << model.iterations_run
                << " iterations, " << ms << " ms, objective " << model.best_objective << '\n';
        }
    }
    write_file_atomic(a.out, csv);
    return 0;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Multiple-instance Choquet integral fusion: learn fuzzy measures from bag labels"};
    app.require_subcommand(1);

    detail::TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "learn a fuzzy measure from a bag CSV");
    train_cmd->add_option("--data", train_args.data, "bag CSV")->required()->check(CLI::ExistingFile);
    detail::add_optimizer_options(train_cmd, train_args);
    train_cmd->add_option("--sampler", train_args.sampler, "me|vi")->check(CLI::IsMember({"me", "vi"}));
    train_cmd->add_option("--seed", train_args.seed, "random seed");
    train_cmd->add_flag("--reconstruct", train_args.reconstruct,
                        "split negative bags into singletons (two-class data with micir)");
    train_cmd->add_option("--out", train_args.out, "model JSON")->required();
    train_cmd->add_option("--trace", train_args.trace, "per-generation trace CSV");

    detail::PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "Choquet integral scores for a bag CSV");
    predict_cmd->add_option("--data", predict_args.data, "bag CSV")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--model", predict_args.model, "model JSON")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--agg", predict_args.agg, "mean|max|min")
        ->check(CLI::IsMember({"mean", "max", "min"}));
    predict_cmd->add_option("--out", predict_args.out, "predictions CSV")->required();

    detail::EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "score predictions against truth");
    eval_cmd->add_option("--preds", eval_args.preds, "predictions CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--truth", eval_args.truth, "truth CSV or bag CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--metric", eval_args.metric, "relerr-cls|relerr-reg|rmse|auc")
        ->required()
        ->check(CLI::IsMember({"relerr-cls", "relerr-reg", "rmse", "auc"}));
    eval_cmd->add_option("--far-cap", eval_args.far_cap, "FAR cap for auc");
    eval_cmd->add_option("--roc-out", eval_args.roc_out, "write ROC points CSV");

    detail::SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic bag set");
    synth_cmd->add_option("--task", synth_args.task, "contamination|primary-ratio|snr")
        ->required()
        ->check(CLI::IsMember({"contamination", "primary-ratio", "snr"}));
    synth_cmd->add_option("--sweep", synth_args.sweep, "fraction, or SNR in dB")->required();
    synth_cmd->add_option("--seed", synth_args.seed, "random seed");
    synth_cmd->add_option("--out", synth_args.out, "bag CSV")->required();
    synth_cmd->add_option("--truth-out", synth_args.truth_out, "hidden instance labels CSV");
    synth_cmd->add_option("--num-bags", synth_args.num_bags, "override bag count");
    synth_cmd->add_option("--instances", synth_args.instances, "override instances per bag");
    synth_cmd->add_option("--sources", synth_args.sources, "number of sources");

    detail::BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "compare samplers across seeds");
    bench_cmd->add_option("--task", bench_args.task, "contamination|primary-ratio|snr|toy")
        ->check(CLI::IsMember({"contamination", "primary-ratio", "snr", "toy"}));
    bench_cmd->add_option("--sweep", bench_args.sweep, "fraction, or SNR in dB");
    bench_cmd->add_option("--samplers", bench_args.samplers, "comma list of me,vi");
    bench_cmd->add_option("--seeds", bench_args.seeds, "range a..b or comma list");
    bench_cmd->add_option("--out", bench_args.out, "bench CSV")->required();
    detail::add_optimizer_options(bench_cmd, bench_args.train);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*train_cmd) return detail::cmd_train(train_args);
        if (*predict_cmd) return detail::cmd_predict(predict_args);
        if (*eval_cmd) return detail::cmd_eval(eval_args, out);
        if (*synth_cmd) return detail::cmd_synth(synth_args);
        if (*bench_cmd) {
            bench_args.objective_set = bench_cmd->count("--objective") > 0;
            return detail::cmd_bench(bench_args, err);
        }
    } catch (const detail::UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace mici
