#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "holdout/random.hpp"
#include "holdout/synth_logits.hpp"
#include "json.hpp"

namespace holdout::harness {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Invalid or incomplete experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    SynthBias,
    QueriesToBias,
    MajorityCompare,
    Heuristics,
    BoundCheck,
    ReconstructDemo,
    Verify,
    GenLogits,
};

inline constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::SynthBias, "synth-bias"},
    {ExperimentKind::QueriesToBias, "queries-to-bias"},
    {ExperimentKind::MajorityCompare, "majority-compare"},
    {ExperimentKind::Heuristics, "heuristics"},
    {ExperimentKind::BoundCheck, "bound-check"},
    {ExperimentKind::ReconstructDemo, "reconstruct-demo"},
    {ExperimentKind::Verify, "verify"},
    {ExperimentKind::GenLogits, "gen-logits"},
};

inline std::string_view to_string(ExperimentKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

inline ExperimentKind parse_kind(std::string_view name) {
    for (const auto& [k, text] : kKindNames) {
        if (text == name) return k;
    }
    throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

/// Bias targets whose value is given by the figure being reproduced; other
/// targets are implementer defaults and are labeled as such in output.
inline constexpr double kStatedBiasTarget = 0.002;

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::SynthBias;
    std::optional<std::uint64_t> seed;
    std::size_t trials = 10;
    std::size_t threads = 1;
    std::string output = "out";

    std::vector<std::size_t> n;
    std::vector<std::size_t> m;
    std::vector<std::size_t> k;
    std::vector<std::size_t> r;
    std::size_t subset_size = 10'000;
    double temperature = 1.0;
    std::vector<double> targets;
    std::size_t k_cap = 200'000;
    double delta = 0.05;
    std::size_t t = 4;
    std::vector<std::string> attacks;
    double top1 = 0.751;
    std::vector<RecallTarget> recall;
    std::string logits_path;
    std::string labels_path;
    std::string format = "bin";
};

/// Kind-specific defaults for every grid left empty.
inline void apply_defaults(ExperimentConfig& c) {
    auto fill = [](auto& v, std::initializer_list<typename std::decay_t<decltype(v)>::value_type> d) {
        if (v.empty()) v.assign(d);
    };
    switch (c.kind) {
        case ExperimentKind::SynthBias:
            fill(c.n, {10'000, 50'000});
            fill(c.m, {2, 10, 100});
            fill(c.k, {250, 500, 1000, 2000, 4000});
            break;
        case ExperimentKind::QueriesToBias:
            fill(c.n, {100'000});
            fill(c.m, {2, 4, 8, 16, 32});
            fill(c.targets, {kStatedBiasTarget, 0.003, 0.004});
            break;
        case ExperimentKind::MajorityCompare:
            fill(c.n, {10'000});
            fill(c.m, {2});
            fill(c.k, {64, 256, 1024, 4096});
            break;
        case ExperimentKind::Heuristics:
        case ExperimentKind::GenLogits:
            fill(c.n, {50'000});
            fill(c.m, {1000});
            fill(c.k, {1300, 2600, 5200});
            fill(c.r, {2});
            fill(c.recall, {{2, 0.853}, {4, 0.910}, {10, 0.953}});
            break;
        case ExperimentKind::BoundCheck:
            fill(c.n, {1000});
            fill(c.m, {2, 10});
            fill(c.k, {50});
            fill(c.attacks, {"nb", "plurality", "majority"});
            break;
        case ExperimentKind::ReconstructDemo:
            fill(c.n, {4});
            fill(c.m, {3});
            fill(c.k, {40});
            break;
        case ExperimentKind::Verify: break;
    }
}

inline void validate(const ExperimentConfig& c) {
    if (!c.seed) throw ConfigError("a seed is required (config \"seed\" or --seed)");
    if (c.trials < 1) throw ConfigError("trials must be >= 1");
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
    if (c.kind == ExperimentKind::Verify) return;
    if (c.n.empty() || c.m.empty()) throw ConfigError("n and m grids must be non-empty");
    for (std::size_t v : c.n) {
        if (v < 1) throw ConfigError("n values must be >= 1");
    }
    for (std::size_t v : c.m) {
        if (v < 2) throw ConfigError("m values must be >= 2");
    }
    const bool needs_k = c.kind != ExperimentKind::QueriesToBias && c.kind != ExperimentKind::GenLogits;
    if (needs_k && c.k.empty()) throw ConfigError("k grid must be non-empty");
    if (c.kind == ExperimentKind::QueriesToBias) {
        if (c.targets.empty()) throw ConfigError("targets must be non-empty");
        for (double t : c.targets) {
            if (!(t > 0.0 && t < 1.0)) throw ConfigError("bias targets must be in (0, 1)");
        }
        if (c.k_cap < 1) throw ConfigError("k_cap must be >= 1");
    }
    if (c.kind == ExperimentKind::MajorityCompare) {
        for (std::size_t v : c.m) {
            if (v != 2) throw ConfigError("majority-compare needs m = 2");
        }
    }
    if (c.kind == ExperimentKind::Heuristics) {
        if (c.r.empty()) throw ConfigError("r grid must be non-empty");
        for (std::size_t v : c.r) {
            if (v < 2) throw ConfigError("r values must be >= 2");
        }
        if (c.subset_size < 1) throw ConfigError("subset_size must be >= 1");
        if (c.logits_path.empty() != c.labels_path.empty()) {
            throw ConfigError("imported logits need both \"logits\" and \"labels\"");
        }
    }
    if (c.kind == ExperimentKind::Heuristics || c.kind == ExperimentKind::GenLogits) {
        if (!(c.temperature > 0.0)) throw ConfigError("temperature must be positive");
        if (!(c.top1 > 0.0 && c.top1 <= 1.0)) throw ConfigError("top1 must be in (0, 1]");
    }
    if (c.kind == ExperimentKind::GenLogits && c.format != "bin" && c.format != "csv") {
        throw ConfigError("format must be \"bin\" or \"csv\"");
    }
    if (c.kind == ExperimentKind::BoundCheck) {
        if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must be in (0, 1)");
        for (const std::string& a : c.attacks) {
            if (a != "nb" && a != "plurality" && a != "majority" && a != "linear-scan" && a != "guess") {
                throw ConfigError("unknown attack '" + a + "'");
            }
        }
    }
    if (c.kind == ExperimentKind::ReconstructDemo && c.t < 1) throw ConfigError("t must be >= 1");
}

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field \"") + key + "\": " + e.what());
    }
}

}  // namespace detail

/// Reads a JSON config. Unknown keys are rejected so typos surface.
inline ExperimentConfig config_from_json(const nlohmann::json& j, std::optional<ExperimentKind> kind = std::nullopt) {
    static constexpr std::string_view kKnown[] = {"experiment", "seed", "trials",  "threads", "output",
                                                  "n",          "m",    "k",       "r",       "subset_size",
                                                  "temperature", "targets", "k_cap", "delta", "t",
                                                  "attacks",    "top1", "recall",  "logits",  "labels",
                                                  "format"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : j.items()) {
        if (std::find(std::begin(kKnown), std::end(kKnown), item.key()) == std::end(kKnown)) {
            throw ConfigError("unknown config key \"" + item.key() + "\"");
        }
    }
    ExperimentConfig c;
    if (j.contains("experiment")) {
        const ExperimentKind named = parse_kind(detail::get_field<std::string>(j, "experiment", ""));
        if (kind && *kind != named) {
            throw ConfigError("config is for '" + std::string(to_string(named)) + "' but the command is '" +
                              std::string(to_string(*kind)) + "'");
        }
        c.kind = named;
    } else if (kind) {
        c.kind = *kind;
    } else {
        throw ConfigError("config has no \"experiment\" field");
    }
    if (j.contains("seed")) c.seed = detail::get_field<std::uint64_t>(j, "seed", 0);
    c.trials = detail::get_field(j, "trials", c.trials);
    c.threads = detail::get_field(j, "threads", c.threads);
    c.output = detail::get_field(j, "output", c.output);
    c.n = detail::get_field(j, "n", c.n);
    c.m = detail::get_field(j, "m", c.m);
    c.k = detail::get_field(j, "k", c.k);
    c.r = detail::get_field(j, "r", c.r);
    c.subset_size = detail::get_field(j, "subset_size", c.subset_size);
    c.temperature = detail::get_field(j, "temperature", c.temperature);
    c.targets = detail::get_field(j, "targets", c.targets);
    c.k_cap = detail::get_field(j, "k_cap", c.k_cap);
    c.delta = detail::get_field(j, "delta", c.delta);
    c.t = detail::get_field(j, "t", c.t);
    c.attacks = detail::get_field(j, "attacks", c.attacks);
    c.top1 = detail::get_field(j, "top1", c.top1);
    c.logits_path = detail::get_field(j, "logits", c.logits_path);
    c.labels_path = detail::get_field(j, "labels", c.labels_path);
    c.format = detail::get_field(j, "format", c.format);
    if (j.contains("recall")) {
        const auto pairs = detail::get_field<std::vector<std::pair<std::size_t, double>>>(j, "recall", {});
        c.recall.clear();
        for (const auto& [r, v] : pairs) c.recall.push_back({r, v});
    }
    return c;
}

inline ExperimentConfig load_config_file(const std::string& path, std::optional<ExperimentKind> kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, kind);
}

/// The effective config as JSON. Thread count and output directory are left
/// out: they do not affect results.
inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["experiment"] = std::string(to_string(c.kind));
    if (c.seed) j["seed"] = *c.seed;
    j["trials"] = c.trials;
    j["n"] = c.n;
    j["m"] = c.m;
    j["k"] = c.k;
    j["r"] = c.r;
    j["subset_size"] = c.subset_size;
    j["temperature"] = c.temperature;
    j["targets"] = c.targets;
    j["k_cap"] = c.k_cap;
    j["delta"] = c.delta;
    j["t"] = c.t;
    j["attacks"] = c.attacks;
    j["top1"] = c.top1;
    nlohmann::json recall = nlohmann::json::array();
    for (const RecallTarget& rt : c.recall) recall.push_back({rt.r, rt.recall});
    j["recall"] = recall;
    j["logits"] = c.logits_path;
    j["labels"] = c.labels_path;
    j["format"] = c.format;
    return j;
}

/// FNV-1a of the canonical (key-sorted, compact) JSON form.
inline std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a64(to_json(c).dump()); }

}  // namespace holdout::harness
