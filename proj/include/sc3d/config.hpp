#ifndef SC3D_CONFIG_HPP
#define SC3D_CONFIG_HPP

#include "sc3d/core/io.hpp"
#include "sc3d/core/types.hpp"
#include "sc3d/datagen/svar.hpp"
#include "sc3d/eval/metrics.hpp"
#include "sc3d/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sc3d {

class ConfigError : public Error {
public:
    using Error::Error;
};

// Which benchmark system to simulate and at what size.
struct GeneratorConfig {
    SystemTag system = SystemTag::svar;
    int dim = 10;
    int lag_order = 3;
    int horizon = 200;
    int trajectories = 1;
    bool instantaneous = true;
    Nonlinearity nonlinearity = Nonlinearity::tanh;
    double lag_indegree = 1.0;
    double instant_indegree = 2.0;
    double noise_sigma = 1.0;
    double weight_low = 0.3;
    double weight_high = 0.8;
};

struct TrackingConfig {
    int window = 100;
    int stride = 25;
    int period = 200;
    // Stage-one epochs for each window fit; 0 keeps stage1.epochs. A 100-sample
    // window yields two minibatches per epoch, so it needs more passes.
    int stage1_epochs = 1000;
};

struct ExperimentConfig {
    GeneratorConfig generator;
    DiscoveryConfig discovery;
    Variant variant = Variant::full;
    MetricOptions metrics;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    TrackingConfig tracking;
    int jobs = 0;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
        if (!ok.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    using nlohmann::json;
    const auto& g = c.generator;
    const auto& s1 = c.discovery.stage1;
    const auto& s2 = c.discovery.stage2;
    json j;
    j["generator"] = {{"system", to_string(g.system)},
                      {"d", g.dim},
                      {"L", g.lag_order},
                      {"T", g.horizon},
                      {"N", g.trajectories},
                      {"instantaneous", g.instantaneous},
                      {"nonlinearity", to_string(g.nonlinearity)},
                      {"lag_indegree", g.lag_indegree},
                      {"instant_indegree", g.instant_indegree},
                      {"noise_sigma", g.noise_sigma},
                      {"weight_low", g.weight_low},
                      {"weight_high", g.weight_high}};
    j["standardize"] = to_string(c.discovery.standardize);
    j["stage1"] = {{"epochs", s1.epochs},
                   {"lambda", s1.lambda},
                   {"lr", s1.lr},
                   {"batch_size", s1.batch_size},
                   {"hidden_width", s1.hidden_width},
                   {"threshold",
                    {{"rule", s1.threshold.kind == ThresholdRule::Kind::relative ? "relative" : "quantile"},
                     {"value", s1.threshold.value}}}};
    j["stage2"] = {{"epochs", s2.epochs},
                   {"lr", s2.lr},
                   {"alpha", s2.alpha},
                   {"beta", s2.beta},
                   {"lambda_2c", s2.lambda_2c},
                   {"gamma_max", s2.gamma_max},
                   {"s_inst", s2.s_inst},
                   {"extract_every", s2.extract_every},
                   {"power_iterations", s2.power_iterations},
                   {"batch_size", s2.batch_size},
                   {"freeze_support", s2.freeze_support}};
    j["variant"] = to_string(c.variant);
    j["metrics"] = {{"tol", c.metrics.tol}, {"exclude_self_lags", c.metrics.exclude_self_lags}};
    j["metrics"]["topk"] = c.metrics.topk ? json(*c.metrics.topk) : json(nullptr);
    j["seeds"] = c.seeds;
    j["tracking"] = {{"window", c.tracking.window}, {"stride", c.tracking.stride}, {"period", c.tracking.period},
                     {"stage1_epochs", c.tracking.stage1_epochs}};
    j["jobs"] = c.jobs;
    return j;
}

/// Overlays a JSON document onto `base`. Missing keys keep their defaults;
/// unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
    using detail::check_keys;
    using detail::read;
    check_keys(j, {"generator", "standardize", "stage1", "stage2", "variant", "metrics", "seeds", "tracking", "jobs"},
               "config");
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        check_keys(g, {"system", "d", "L", "T", "N", "instantaneous", "nonlinearity", "lag_indegree",
                       "instant_indegree", "noise_sigma", "weight_low", "weight_high"},
                   "generator");
        auto& o = c.generator;
        std::string s;
        if (g.contains("system")) {
            read(g, "system", s, "generator");
            o.system = system_from_string(s);
        }
        read(g, "d", o.dim, "generator");
        read(g, "L", o.lag_order, "generator");
        read(g, "T", o.horizon, "generator");
        read(g, "N", o.trajectories, "generator");
        read(g, "instantaneous", o.instantaneous, "generator");
        if (g.contains("nonlinearity")) {
            read(g, "nonlinearity", s, "generator");
            o.nonlinearity = nonlinearity_from_string(s);
        }
        read(g, "lag_indegree", o.lag_indegree, "generator");
        read(g, "instant_indegree", o.instant_indegree, "generator");
        read(g, "noise_sigma", o.noise_sigma, "generator");
        read(g, "weight_low", o.weight_low, "generator");
        read(g, "weight_high", o.weight_high, "generator");
    }
    if (j.contains("standardize")) {
        std::string s;
        read(j, "standardize", s, "config");
        c.discovery.standardize = standardize_from_string(s);
    }
    if (j.contains("stage1")) {
        const auto& s = j.at("stage1");
        check_keys(s, {"epochs", "lambda", "lr", "batch_size", "hidden_width", "threshold"}, "stage1");
        auto& o = c.discovery.stage1;
        read(s, "epochs", o.epochs, "stage1");
        read(s, "lambda", o.lambda, "stage1");
        read(s, "lr", o.lr, "stage1");
        read(s, "batch_size", o.batch_size, "stage1");
        read(s, "hidden_width", o.hidden_width, "stage1");
        if (s.contains("threshold")) {
            const auto& t = s.at("threshold");
            check_keys(t, {"rule", "value"}, "stage1.threshold");
            std::string rule = o.threshold.kind == ThresholdRule::Kind::relative ? "relative" : "quantile";
            read(t, "rule", rule, "stage1.threshold");
            read(t, "value", o.threshold.value, "stage1.threshold");
            if (rule == "relative") o.threshold.kind = ThresholdRule::Kind::relative;
            else if (rule == "quantile") o.threshold.kind = ThresholdRule::Kind::quantile;
            else throw ConfigError("stage1.threshold.rule: expected 'relative' or 'quantile'");
        }
    }
    if (j.contains("stage2")) {
        const auto& s = j.at("stage2");
        check_keys(s, {"epochs", "lr", "alpha", "beta", "lambda_2c", "gamma_max", "s_inst", "extract_every",
                       "power_iterations", "batch_size", "freeze_support"},
                   "stage2");
        auto& o = c.discovery.stage2;
        read(s, "epochs", o.epochs, "stage2");
        read(s, "lr", o.lr, "stage2");
        read(s, "alpha", o.alpha, "stage2");
        read(s, "beta", o.beta, "stage2");
        read(s, "lambda_2c", o.lambda_2c, "stage2");
        read(s, "gamma_max", o.gamma_max, "stage2");
        read(s, "s_inst", o.s_inst, "stage2");
        read(s, "extract_every", o.extract_every, "stage2");
        read(s, "power_iterations", o.power_iterations, "stage2");
        read(s, "batch_size", o.batch_size, "stage2");
        read(s, "freeze_support", o.freeze_support, "stage2");
    }
    if (j.contains("variant")) {
        std::string s;
        read(j, "variant", s, "config");
        c.variant = variant_from_string(s);
    }
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        check_keys(m, {"tol", "exclude_self_lags", "topk"}, "metrics");
        read(m, "tol", c.metrics.tol, "metrics");
        read(m, "exclude_self_lags", c.metrics.exclude_self_lags, "metrics");
        if (m.contains("topk")) {
            if (m.at("topk").is_null()) c.metrics.topk.reset();
            else {
                int k = 0;
                read(m, "topk", k, "metrics");
                c.metrics.topk = k;
            }
        }
    }
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        if (s.is_number_integer()) {
            const int n = s.get<int>();
            if (n < 1) throw ConfigError("seeds: count must be >= 1");
            c.seeds.clear();
            for (int i = 0; i < n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
        } else {
            read(j, "seeds", c.seeds, "config");
        }
    }
    if (j.contains("tracking")) {
        const auto& t = j.at("tracking");
        check_keys(t, {"window", "stride", "period", "stage1_epochs"}, "tracking");
        read(t, "window", c.tracking.window, "tracking");
        read(t, "stride", c.tracking.stride, "tracking");
        read(t, "period", c.tracking.period, "tracking");
        read(t, "stage1_epochs", c.tracking.stage1_epochs, "tracking");
        if (c.tracking.stage1_epochs < 0) throw ConfigError("tracking: stage1_epochs must be >= 0");
    }
    read(j, "jobs", c.jobs, "config");
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace sc3d

#endif  // SC3D_CONFIG_HPP
