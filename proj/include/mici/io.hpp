#pragma once

// File formats:
//   bag CSV           bag_id,label,src_1,...,src_m   (header required)
//   truth CSV         bag_id,instance_idx,label
//   predictions CSV   bag_id,instance_idx,ci_score   (plus one "agg" row per bag)
//   model / measure   JSON, see measure_to_json
//   trace CSV         iter,best_objective,wallclock_ms
//   ROC CSV           far,pd
// Numbers are written in shortest round-trip form.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mici/bags.hpp"
#include "mici/error.hpp"
#include "mici/eval.hpp"
#include "mici/measure.hpp"
#include "mici/objectives.hpp"
#include "mici/optimizer.hpp"

namespace mici {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Low-level helpers

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path.string());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto pos = line.find(',');
        out.push_back(trim(line.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        line.remove_prefix(pos + 1);
    }
    return out;
}

inline double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != end) {
        throw LineError(ErrorCode::Parse, line, "not a number: '" + std::string(field) + "'");
    }
    return v;
}

struct CsvLine {
    std::size_t number;
    std::vector<std::string_view> fields;
};

// Splits text into non-blank lines. string_views point into `text`.
inline std::vector<CsvLine> csv_lines(const std::string& text) {
    std::vector<CsvLine> out;
    std::string_view rest(text);
    std::size_t number = 0;
    while (!rest.empty()) {
        const auto pos = rest.find('\n');
        std::string_view line = rest.substr(0, pos);
        rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
        ++number;
        if (trim(line).empty()) continue;
        out.push_back({number, split_csv(line)});
    }
    return out;
}

inline void check_id(const std::string& id) {
    if (id.empty() || id.find_first_of(",\n\r") != std::string::npos) {
        throw Error(ErrorCode::Schema, "bag id '" + id + "' cannot be written to CSV");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bag CSV

inline BagSet parse_bags_csv(const std::string& text) {
    const auto lines = detail::csv_lines(text);
    if (lines.empty()) throw LineError(ErrorCode::Parse, 1, "missing header row");
    const auto& header = lines.front();
    if (header.fields.size() < 3 || header.fields[0] != "bag_id" || header.fields[1] != "label") {
        throw LineError(ErrorCode::Parse, header.number,
                        "header must be bag_id,label,src_1,...,src_m");
    }
    BagSet set;
    set.num_sources = static_cast<int>(header.fields.size() - 2);
    if (set.num_sources > kMaxSources) {
        throw LineError(ErrorCode::Parse, header.number, "too many source columns");
    }
    std::unordered_map<std::string, std::size_t> index;
    std::vector<double> x(set.num_sources);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& row = lines[k];
        if (row.fields.size() != header.fields.size()) {
            throw LineError(ErrorCode::RaggedWidth, row.number,
                            "expected " + std::to_string(header.fields.size()) + " fields, got " +
                                std::to_string(row.fields.size()));
        }
        const std::string id(row.fields[0]);
        if (id.empty()) throw LineError(ErrorCode::Parse, row.number, "empty bag_id");
        const double label = detail::parse_double(row.fields[1], row.number);
        if (!(label >= 0.0 && label <= 1.0)) {
            throw LineError(ErrorCode::Range, row.number, "label outside [0,1]");
        }
        for (int j = 0; j < set.num_sources; ++j) {
            x[j] = detail::parse_double(row.fields[2 + j], row.number);
            if (!(x[j] >= 0.0 && x[j] <= 1.0)) {
                throw LineError(ErrorCode::Range, row.number,
                                "src_" + std::to_string(j + 1) + " = " + std::string(row.fields[2 + j]) +
                                    " outside [0,1]");
            }
        }
        auto [it, inserted] = index.try_emplace(id, set.bags.size());
        if (inserted) set.add_bag(id, label);
        Bag& bag = set.bags[it->second];
        if (bag.label != label) {
            throw Error(ErrorCode::InconsistentLabel,
                        "bag '" + id + "' has labels " + format_double(bag.label) + " and " +
                            format_double(label) + " (line " + std::to_string(row.number) + ")");
        }
        bag.add_instance(x);
    }
    return set;
}

inline BagSet read_bags_csv(const std::filesystem::path& path) { return parse_bags_csv(read_file(path)); }

inline std::string bags_to_csv(const BagSet& set) {
    std::string out = "bag_id,label";
    for (int j = 0; j < set.num_sources; ++j) out += ",src_" + std::to_string(j + 1);
    out += '\n';
    for (const Bag& b : set.bags) {
        detail::check_id(b.id);
        for (std::size_t i = 0; i < b.size(); ++i) {
            out += b.id;
            out += ',';
            out += format_double(b.label);
            for (const double v : b.instance(i)) {
                out += ',';
                out += format_double(v);
            }
            out += '\n';
        }
    }
    return out;
}

inline void write_bags_csv(const std::filesystem::path& path, const BagSet& set) {
    write_file_atomic(path, bags_to_csv(set));
}

// ---------------------------------------------------------------------------
// Instance-level truth and predictions

/// Per-instance values keyed by bag id, in file order.
struct InstanceTable {
    std::vector<std::string> bag_order;
    std::map<std::string, std::vector<double>> instances;
    std::map<std::string, double> aggregates;
};

inline std::string truth_to_csv(const BagSet& set, const std::vector<std::vector<double>>& truth) {
    std::string out = "bag_id,instance_idx,label\n";
    for (std::size_t b = 0; b < set.size(); ++b) {
        detail::check_id(set.bags[b].id);
        for (std::size_t i = 0; i < truth.at(b).size(); ++i) {
            out += set.bags[b].id + ',' + std::to_string(i) + ',' + format_double(truth[b][i]) + '\n';
        }
    }
    return out;
}

inline std::string predictions_to_csv(const BagSet& set, const std::vector<std::vector<double>>& ci,
                                      std::span<const double> bag_scores) {
    std::string out = "bag_id,instance_idx,ci_score\n";
    for (std::size_t b = 0; b < set.size(); ++b) {
        detail::check_id(set.bags[b].id);
        for (std::size_t i = 0; i < ci[b].size(); ++i) {
            out += set.bags[b].id + ',' + std::to_string(i) + ',' + format_double(ci[b][i]) + '\n';
        }
        out += set.bags[b].id + ",agg," + format_double(bag_scores[b]) + '\n';
    }
    return out;
}

/// Reads a truth or predictions file (three columns, second is an instance
/// index or "agg").
inline InstanceTable parse_instance_table(const std::string& text) {
    const auto lines = detail::csv_lines(text);
    if (lines.empty()) throw LineError(ErrorCode::Parse, 1, "missing header row");
    const auto& header = lines.front();
    if (header.fields.size() != 3 || header.fields[0] != "bag_id" ||
        header.fields[1] != "instance_idx") {
        throw LineError(ErrorCode::Parse, header.number, "header must be bag_id,instance_idx,<value>");
    }
    InstanceTable table;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& row = lines[k];
        if (row.fields.size() != 3) {
            throw LineError(ErrorCode::RaggedWidth, row.number, "expected 3 fields");
        }
        const std::string id(row.fields[0]);
        const double value = detail::parse_double(row.fields[2], row.number);
        if (!table.instances.contains(id) && !table.aggregates.contains(id)) {
            table.bag_order.push_back(id);
        }
        if (row.fields[1] == "agg") {
            table.aggregates[id] = value;
            continue;
        }
        const double idx = detail::parse_double(row.fields[1], row.number);
        auto& list = table.instances[id];
        if (idx != static_cast<double>(list.size())) {
            throw LineError(ErrorCode::Parse, row.number, "instance indices must be consecutive from 0");
        }
        list.push_back(value);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Measure and model JSON

inline json measure_to_json(const FuzzyMeasure& g) {
    json elements = json::array();
    for (Subset s = 1; s <= g.full(); ++s) elements.push_back({{"subset", s}, {"value", g[s]}});
    return {{"num_sources", g.num_sources()}, {"elements", std::move(elements)}};
}

inline FuzzyMeasure measure_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("num_sources")) {
            throw Error(ErrorCode::Schema, "missing \"num_sources\"");
        }
        if (!j.contains("elements") || !j.at("elements").is_array()) {
            throw Error(ErrorCode::Schema, "missing \"elements\" array");
        }
        const int m = j.at("num_sources").get<int>();
        if (m < 1 || m > kMaxSources) throw Error(ErrorCode::Schema, "num_sources out of range");
        std::vector<double> values(num_elements(m), -1.0);
        std::vector<bool> seen(values.size(), false);
        for (const json& e : j.at("elements")) {
            const auto s = e.at("subset").get<std::int64_t>();
            if (s < 1 || s > static_cast<std::int64_t>(full_set(m))) {
                throw Error(ErrorCode::Schema, "subset " + std::to_string(s) + " not in lattice");
            }
            if (seen[s - 1]) throw Error(ErrorCode::Schema, "subset " + std::to_string(s) + " repeated");
            seen[s - 1] = true;
            values[s - 1] = e.at("value").get<double>();
        }
        for (std::size_t k = 0; k < seen.size(); ++k) {
            if (!seen[k]) throw Error(ErrorCode::Schema, "subset " + std::to_string(k + 1) + " missing");
        }
        return build_measure(m, values);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Schema, e.what());
    }
}

inline json objective_to_json(const ObjectiveSpec& spec) {
    json j{{"kind", to_string(spec.kind)}};
    if (spec.kind == ObjectiveKind::GeneralizedMean) {
        j["p1"] = spec.p1;
        j["p2"] = spec.p2;
    } else if (spec.kind == ObjectiveKind::NoisyOr) {
        j["mu"] = spec.mu;
        j["sigma2"] = spec.sigma2;
    }
    return j;
}

inline ObjectiveSpec objective_from_json(const json& j) {
    const auto kind = parse_objective_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::Schema, "unknown objective kind");
    ObjectiveSpec spec;
    spec.kind = *kind;
    if (spec.kind == ObjectiveKind::GeneralizedMean) {
        spec.p1 = j.at("p1").get<double>();
        spec.p2 = j.at("p2").get<double>();
    } else if (spec.kind == ObjectiveKind::NoisyOr) {
        spec.mu = j.at("mu").get<double>();
        spec.sigma2 = j.at("sigma2").get<double>();
    }
    spec.validate();
    return spec;
}

/// What a model file holds; the optimizer trace is not persisted.
struct ModelFile {
    FuzzyMeasure measure = min_measure(1);
    ObjectiveSpec objective;
    double best_objective = 0.0;
    std::uint64_t seed = 0;
    int iterations = 0;
    json config;

    friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

inline ModelFile to_model_file(const TrainedModel& model) {
    const OptimizerConfig& c = model.config;
    return {model.best_measure,
            model.objective,
            model.best_objective,
            c.seed,
            model.iterations_run,
            {{"population", c.population},
             {"max_iterations", c.max_iterations},
             {"fitness_threshold", c.fitness_threshold},
             {"small_mutation_rate", c.small_mutation_rate},
             {"sampler", to_string(c.sampler)},
             {"stall_window", c.stall_window},
             {"converged", model.converged}}};
}

inline std::string model_to_json_text(const ModelFile& model) {
    json j = measure_to_json(model.measure);
    j["objective"] = objective_to_json(model.objective);
    j["best_objective"] = model.best_objective;
    j["seed"] = model.seed;
    j["iterations"] = model.iterations;
    if (!model.config.is_null()) j["config"] = model.config;
    return j.dump(2) + "\n";
}

inline ModelFile parse_model_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Schema, e.what());
    }
    ModelFile model;
    model.measure = measure_from_json(j);
    try {
        for (const char* key : {"objective", "best_objective", "seed", "iterations"}) {
            if (!j.contains(key)) throw Error(ErrorCode::Schema, std::string("missing \"") + key + "\"");
        }
        model.objective = objective_from_json(j.at("objective"));
        model.best_objective = j.at("best_objective").get<double>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.iterations = j.at("iterations").get<int>();
        if (j.contains("config")) model.config = j.at("config");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Schema, e.what());
    }
    return model;
}

inline void write_model(const std::filesystem::path& path, const ModelFile& model) {
    write_file_atomic(path, model_to_json_text(model));
}

inline void write_model(const std::filesystem::path& path, const TrainedModel& model) {
    write_model(path, to_model_file(model));
}

inline ModelFile read_model(const std::filesystem::path& path) {
    return parse_model_json(read_file(path));
}

// ---------------------------------------------------------------------------
// Trace and ROC

inline std::string trace_to_csv(const TrainedModel& model) {
    std::string out = "iter,best_objective,wallclock_ms\n";
    for (std::size_t t = 0; t < model.trace.size(); ++t) {
        out += std::to_string(t) + ',' + format_double(model.trace[t]) + ',' +
               format_double(model.trace_wallclock_ms.at(t)) + '\n';
    }
    return out;
}

inline std::string roc_to_csv(std::span<const RocPoint> curve) {
    std::string out = "far,pd\n";
    for (const RocPoint& p : curve) out += format_double(p.far) + ',' + format_double(p.pd) + '\n';
    return out;
}

}  // namespace mici
