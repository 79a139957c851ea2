// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace fggm {

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::Config, "config: " + msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) config_error("'" + where + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!ok.count(k)) config_error("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

std::string path_of(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_double(const json& obj, const std::string& where, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_number()) config_error("'" + path_of(where, key) + "' must be a number");
    return v.get<double>();
}

std::size_t get_count(const json& obj, const std::string& where, const char* key, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_number_integer() || v.get<long long>() < 0)
        config_error("'" + path_of(where, key) + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_boolean()) config_error("'" + path_of(where, key) + "' must be true or false");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_string()) config_error("'" + path_of(where, key) + "' must be a string");
    return v.get<std::string>();
}

std::vector<std::size_t> get_counts(const json& obj, const std::string& where, const char* key,
                                    std::vector<std::size_t> fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (v.is_number_integer()) return {get_count(obj, where, key, 0)};
    if (!v.is_array()) config_error("'" + path_of(where, key) + "' must be an integer or a list of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<long long>() < 0)
            config_error("'" + path_of(where, key) + "' must hold non-negative integers");
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

/// Runs a domain validator and re-labels its failure as a config error on `where`.
template <typename F>
void validated(const std::string& where, F&& f) {
    try {
        f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        config_error("'" + where + "': " + e.what());
    }
}

}  // namespace

ModelSpec RunConfig::model_spec() const {
    ModelSpec m;
    m.input_dim = stream.input_dim;
    m.hidden_dims = hidden_dims;
    m.num_classes = stream.num_classes;
    return m;
}

StreamConfig RunConfig::effective_stream() const {
    StreamConfig s = stream;
    if (epochs_override) s.epochs = {*epochs_override};
    return s;
}

RunConfig parse_run_config(const json& doc) {
    check_keys(doc, "", {"strategy", "model", "stream", "optimizer", "epochs", "seeds", "output_dir", "harness"});
    RunConfig cfg;

    if (doc.contains("strategy")) {
        const json& s = doc["strategy"];
        const std::string w = "strategy";
        check_keys(s, w, {"kind", "alpha", "aggregation", "mask_mode", "fisher_mode", "fisher_batch", "fisher_samples",
                          "ewc_lambda", "buffer_size", "replay_ratio"});
        auto& st = cfg.strategy;
        validated(w + ".kind", [&] { st.kind = parse_strategy_kind(get_string(s, w, "kind", "fggm")); });
        st.alpha = get_double(s, w, "alpha", st.alpha);
        validated(w + ".aggregation", [&] { st.aggregation = parse_aggregation(get_string(s, w, "aggregation", "IA")); });
        validated(w + ".mask_mode", [&] { st.mask_mode = parse_mask_mode(get_string(s, w, "mask_mode", "hard")); });
        const std::string fm = get_string(s, w, "fisher_mode", "per_sample");
        if (fm == "per_sample")
            st.fisher_mode = FisherMode::per_sample();
        else if (fm == "per_batch")
            st.fisher_mode = FisherMode::per_batch(get_count(s, w, "fisher_batch", 32));
        else
            config_error("'strategy.fisher_mode' must be per_sample or per_batch");
        if (s.contains("fisher_samples") && !s["fisher_samples"].is_null())
            st.fisher_samples = get_count(s, w, "fisher_samples", 0);
        st.ewc_lambda = get_double(s, w, "ewc_lambda", st.ewc_lambda);
        st.buffer_size = get_count(s, w, "buffer_size", st.buffer_size);
        st.replay_ratio = get_double(s, w, "replay_ratio", st.replay_ratio);
    }
    validated("strategy", [&] { cfg.strategy.validate(); });

    if (doc.contains("model")) {
        const json& m = doc["model"];
        check_keys(m, "model", {"hidden_dims", "activation"});
        cfg.hidden_dims = get_counts(m, "model", "hidden_dims", cfg.hidden_dims);
        if (get_string(m, "model", "activation", "relu") != "relu") config_error("'model.activation' must be relu");
    }

    if (doc.contains("stream")) {
        const json& s = doc["stream"];
        const std::string w = "stream";
        check_keys(s, w, {"family", "num_tasks", "n_per_task", "n_eval", "n_probe", "input_dim", "num_classes",
                          "separation", "noise_var", "permute_fraction", "epochs"});
        auto& st = cfg.stream;
        validated(w + ".family", [&] { st.family = parse_stream_family(get_string(s, w, "family", "permuted")); });
        st.num_tasks = get_count(s, w, "num_tasks", st.num_tasks);
        st.n_per_task = get_count(s, w, "n_per_task", st.n_per_task);
        st.n_eval = get_count(s, w, "n_eval", st.n_eval);
        st.n_probe = get_count(s, w, "n_probe", st.n_probe);
        st.input_dim = get_count(s, w, "input_dim", st.input_dim);
        st.num_classes = get_count(s, w, "num_classes", st.num_classes);
        st.separation = get_double(s, w, "separation", st.separation);
        st.noise_var = get_double(s, w, "noise_var", st.noise_var);
        st.permute_fraction = get_double(s, w, "permute_fraction", st.permute_fraction);
        st.epochs = get_counts(s, w, "epochs", st.epochs);
    }

    if (doc.contains("optimizer")) {
        const json& o = doc["optimizer"];
        const std::string w = "optimizer";
        check_keys(o, w, {"kind", "lr", "beta1", "beta2", "eps", "weight_decay", "batch_size", "schedule"});
        auto& tr = cfg.train;
        const std::string kind = get_string(o, w, "kind", "adamw");
        if (kind == "adamw")
            tr.optimizer = OptimizerKind::AdamW;
        else if (kind == "sgd")
            tr.optimizer = OptimizerKind::Sgd;
        else
            config_error("'optimizer.kind' must be adamw or sgd");
        tr.lr = get_double(o, w, "lr", tr.lr);
        tr.adamw.beta1 = get_double(o, w, "beta1", tr.adamw.beta1);
        tr.adamw.beta2 = get_double(o, w, "beta2", tr.adamw.beta2);
        tr.adamw.eps = get_double(o, w, "eps", tr.adamw.eps);
        tr.adamw.weight_decay = get_double(o, w, "weight_decay", tr.adamw.weight_decay);
        tr.batch_size = get_count(o, w, "batch_size", tr.batch_size);
        const std::string sched = get_string(o, w, "schedule", "linear");
        if (sched == "linear")
            tr.linear_decay = true;
        else if (sched == "constant")
            tr.linear_decay = false;
        else
            config_error("'optimizer.schedule' must be linear or constant");
    }
    validated("optimizer", [&] { cfg.train.validate(); });

    if (doc.contains("epochs") && !doc["epochs"].is_null()) {
        cfg.epochs_override = get_count(doc, "", "epochs", 1);
        if (*cfg.epochs_override < 1) config_error("'epochs' must be >= 1");
    }
    validated("stream", [&] { cfg.effective_stream().validate(); });
    validated("model", [&] { cfg.model_spec().validate(); });

    if (doc.contains("seeds")) {
        const json& s = doc["seeds"];
        const json list = s.is_array() ? s : json::array({s});
        cfg.seeds.clear();
        for (const auto& e : list) {
            if (!e.is_number_integer() || e.get<long long>() < 0)
                config_error("'seeds' must be a non-negative integer or a list of them");
            cfg.seeds.push_back(e.get<std::uint64_t>());
        }
        if (cfg.seeds.empty()) config_error("'seeds' must not be empty");
    }
    cfg.output_dir = get_string(doc, "", "output_dir", "");

    if (doc.contains("harness")) {
        const json& h = doc["harness"];
        const std::string w = "harness";
        check_keys(h, w, {"mode", "eval_every_epoch", "record_wall_ms", "save_checkpoints", "save_masks"});
        const std::string mode = get_string(h, w, "mode", "train");
        if (mode == "train")
            cfg.harness.original_only = false;
        else if (mode == "ori")
            cfg.harness.original_only = true;
        else
            config_error("'harness.mode' must be train or ori");
        cfg.harness.eval_every_epoch = get_bool(h, w, "eval_every_epoch", false);
        cfg.harness.record_wall_ms = get_bool(h, w, "record_wall_ms", false);
        cfg.harness.save_checkpoints = get_bool(h, w, "save_checkpoints", true);
        cfg.harness.save_masks = get_bool(h, w, "save_masks", false);
    }
    return cfg;
}

RunConfig parse_run_config_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        config_error(std::string("not valid JSON: ") + e.what());
    }
    return parse_run_config(doc);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) config_error("cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config_text(ss.str());
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) config_error("override '" + std::string(assignment) + "' is not KEY=VALUE");
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    if (!doc.is_object()) config_error("config document must be an object");
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) config_error("override key '" + key + "' has an empty component");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        json& child = (*node)[part];
        if (child.is_null()) child = json::object();
        if (!child.is_object()) config_error("override key '" + key + "' descends into a non-object");
        node = &child;
        start = dot + 1;
    }
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    auto& s = j["strategy"];
    s["kind"] = to_string(strategy.kind);
    s["alpha"] = strategy.alpha;
    s["aggregation"] = to_string(strategy.aggregation);
    s["mask_mode"] = to_string(strategy.mask_mode);
    s["fisher_mode"] = strategy.fisher_mode.kind == FisherMode::Kind::PerSample ? "per_sample" : "per_batch";
    s["fisher_batch"] = strategy.fisher_mode.batch_size;
    s["fisher_samples"] = strategy.fisher_samples ? nlohmann::ordered_json(*strategy.fisher_samples) : nlohmann::ordered_json(nullptr);
    s["ewc_lambda"] = strategy.ewc_lambda;
    s["buffer_size"] = strategy.buffer_size;
    s["replay_ratio"] = strategy.replay_ratio;

    j["model"] = {{"hidden_dims", hidden_dims}, {"activation", "relu"}};

    auto& st = j["stream"];
    st["family"] = to_string(stream.family);
    st["num_tasks"] = stream.num_tasks;
    st["n_per_task"] = stream.n_per_task;
    st["n_eval"] = stream.n_eval;
    st["n_probe"] = stream.n_probe;
    st["input_dim"] = stream.input_dim;
    st["num_classes"] = stream.num_classes;
    st["separation"] = stream.separation;
    st["noise_var"] = stream.noise_var;
    st["permute_fraction"] = stream.permute_fraction;
    st["epochs"] = stream.epochs;

    auto& o = j["optimizer"];
    o["kind"] = train.optimizer == OptimizerKind::AdamW ? "adamw" : "sgd";
    o["lr"] = train.lr;
    o["beta1"] = train.adamw.beta1;
    o["beta2"] = train.adamw.beta2;
    o["eps"] = train.adamw.eps;
    o["weight_decay"] = train.adamw.weight_decay;
    o["batch_size"] = train.batch_size;
    o["schedule"] = train.linear_decay ? "linear" : "constant";

    j["epochs"] = epochs_override ? nlohmann::ordered_json(*epochs_override) : nlohmann::ordered_json(nullptr);
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    auto& h = j["harness"];
    h["mode"] = harness.original_only ? "ori" : "train";
    h["eval_every_epoch"] = harness.eval_every_epoch;
    h["record_wall_ms"] = harness.record_wall_ms;
    h["save_checkpoints"] = harness.save_checkpoints;
    h["save_masks"] = harness.save_masks;
    return j;
}

}  // namespace fggm
