// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/fggm.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "fggm/config.hpp"
#include "fggm/runner.hpp"

struct fggm_params {
    fggm::ParamSet params;
};

struct fggm_config {
    nlohmann::json doc;
    fggm::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

fggm_status status_of(fggm::ErrorKind k) {
    switch (k) {
        case fggm::ErrorKind::Dimension: return FGGM_ERR_DIMENSION;
        case fggm::ErrorKind::Validation: return FGGM_ERR_VALIDATION;
        case fggm::ErrorKind::Contract: return FGGM_ERR_CONTRACT;
        case fggm::ErrorKind::Io: return FGGM_ERR_IO;
        case fggm::ErrorKind::BadMagic: return FGGM_ERR_BAD_MAGIC;
        case fggm::ErrorKind::Length: return FGGM_ERR_LENGTH;
        case fggm::ErrorKind::Config: return FGGM_ERR_CONFIG;
        case fggm::ErrorKind::Runtime: return FGGM_ERR_RUNTIME;
    }
    return FGGM_ERR_RUNTIME;
}

fggm_status set_error(fggm_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

template <class F>
fggm_status guarded(F&& body) {
    try {
        g_last_error.clear();
        return body();
    } catch (const fggm::Error& e) {
        return set_error(status_of(e.kind()), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return set_error(FGGM_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(FGGM_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return set_error(FGGM_ERR_RUNTIME, e.what());
    } catch (...) {
        return set_error(FGGM_ERR_RUNTIME, "unknown failure");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<std::string> split_csv(const char* csv) {
    std::vector<std::string> out;
    if (!csv) return out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

fggm::Error as_config(const fggm::Error& e) {
    return e.kind() == fggm::ErrorKind::Validation ? fggm::Error(fggm::ErrorKind::Config, e.what()) : e;
}

fggm_status finish_sweep(const fggm::SweepResult& r, char** text_out, size_t* failed_out) {
    if (failed_out) *failed_out = r.failed;
    if (text_out) *text_out = dup_string(r.text);
    if (r.failed) {
        std::string msg = std::to_string(r.failed) + " of " + std::to_string(r.cells.size()) + " run(s) failed";
        for (const auto& c : r.cells)
            if (!c.ok) msg += "\n  " + c.name + ": " + c.error;
        return set_error(FGGM_ERR_RUNTIME, msg);
    }
    return FGGM_OK;
}

}  // namespace

extern "C" {

const char* fggm_last_error(void) { return g_last_error.c_str(); }

const char* fggm_status_string(fggm_status status) {
    switch (status) {
        case FGGM_OK: return "ok";
        case FGGM_ERR_DIMENSION: return "dimension error";
        case FGGM_ERR_VALIDATION: return "validation error";
        case FGGM_ERR_CONTRACT: return "contract error";
        case FGGM_ERR_IO: return "io error";
        case FGGM_ERR_BAD_MAGIC: return "bad magic";
        case FGGM_ERR_LENGTH: return "length error";
        case FGGM_ERR_CONFIG: return "config error";
        case FGGM_ERR_RUNTIME: return "runtime error";
        case FGGM_ERR_ARGUMENT: return "invalid argument";
    }
    return "unknown status";
}

const char* fggm_version(void) { return "0.1.0"; }

void fggm_string_free(char* s) { std::free(s); }

fggm_status fggm_params_init(const size_t* dims, size_t n_dims, uint64_t seed, fggm_params** out) {
    if (!dims || n_dims < 2 || !out) return set_error(FGGM_ERR_ARGUMENT, "params_init needs at least input and output dims");
    return guarded([&] {
        fggm::ModelSpec spec;
        spec.input_dim = dims[0];
        spec.hidden_dims.assign(dims + 1, dims + n_dims - 1);
        spec.num_classes = dims[n_dims - 1];
        *out = new fggm_params{fggm::init_params(spec, seed)};
        return FGGM_OK;
    });
}

fggm_status fggm_params_load(const char* path, fggm_params** out) {
    if (!path || !out) return set_error(FGGM_ERR_ARGUMENT, "params_load: null argument");
    return guarded([&] {
        *out = new fggm_params{fggm::load_checkpoint(path)};
        return FGGM_OK;
    });
}

fggm_status fggm_params_save(const fggm_params* params, const char* path) {
    if (!params || !path) return set_error(FGGM_ERR_ARGUMENT, "params_save: null argument");
    return guarded([&] {
        fggm::save_checkpoint(params->params, path);
        return FGGM_OK;
    });
}

void fggm_params_free(fggm_params* params) { delete params; }

size_t fggm_params_count(const fggm_params* params) { return params ? params->params.size() : 0; }

const char* fggm_params_name(const fggm_params* params, size_t index) {
    if (!params || index >= params->params.size()) return nullptr;
    return params->params[index].name.c_str();
}

fggm_status fggm_params_shape(const fggm_params* params, size_t index, size_t* rank, size_t* rows, size_t* cols) {
    if (!params || index >= params->params.size()) return set_error(FGGM_ERR_ARGUMENT, "params_shape: bad index");
    const auto& t = params->params[index].tensor;
    if (rank) *rank = t.rank();
    if (rows) *rows = t.shape()[0];
    if (cols) *cols = t.rank() > 1 ? t.shape()[1] : 1;
    return FGGM_OK;
}

const double* fggm_params_data(const fggm_params* params, size_t index) {
    if (!params || index >= params->params.size()) return nullptr;
    return params->params[index].tensor.data().data();
}

fggm_status fggm_params_equal(const fggm_params* a, const fggm_params* b, int* equal) {
    if (!a || !b || !equal) return set_error(FGGM_ERR_ARGUMENT, "params_equal: null argument");
    *equal = a->params.bit_equal(b->params) ? 1 : 0;
    return FGGM_OK;
}

fggm_status fggm_forward(const fggm_params* params, const double* inputs, size_t n, size_t dim, double* logits,
                         size_t logits_len) {
    if (!params || !inputs || !logits || n == 0 || dim == 0) return set_error(FGGM_ERR_ARGUMENT, "forward: bad argument");
    return guarded([&] {
        fggm::Tensor x({n, dim}, std::vector<double>(inputs, inputs + n * dim));
        const fggm::Tensor y = fggm::forward(params->params, x);
        if (y.numel() != logits_len)
            return set_error(FGGM_ERR_DIMENSION, "forward: logits buffer holds " + std::to_string(logits_len) +
                                                     " values, need " + std::to_string(y.numel()));
        std::memcpy(logits, y.data().data(), y.numel() * sizeof(double));
        return FGGM_OK;
    });
}

fggm_status fggm_config_parse(const char* json_text, fggm_config** out) {
    if (!json_text || !out) return set_error(FGGM_ERR_ARGUMENT, "config_parse: null argument");
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::exception& e) {
            return set_error(FGGM_ERR_CONFIG, std::string("config: not valid JSON: ") + e.what());
        }
        fggm::RunConfig cfg = fggm::parse_run_config(doc);
        *out = new fggm_config{std::move(doc), std::move(cfg)};
        return FGGM_OK;
    });
}

fggm_status fggm_config_load(const char* path, fggm_config** out) {
    if (!path || !out) return set_error(FGGM_ERR_ARGUMENT, "config_load: null argument");
    return guarded([&] {
        std::ifstream is(path);
        if (!is) return set_error(FGGM_ERR_CONFIG, std::string("config: cannot read ") + path);
        std::stringstream ss;
        ss << is.rdbuf();
        const std::string text = ss.str();
        return fggm_config_parse(text.c_str(), out);
    });
}

fggm_status fggm_config_set(fggm_config* config, const char* assignment) {
    if (!config || !assignment) return set_error(FGGM_ERR_ARGUMENT, "config_set: null argument");
    return guarded([&] {
        nlohmann::json doc = config->doc;
        fggm::apply_override(doc, assignment);
        fggm::RunConfig cfg = fggm::parse_run_config(doc);
        config->doc = std::move(doc);
        config->cfg = std::move(cfg);
        return FGGM_OK;
    });
}

fggm_status fggm_config_dump(const fggm_config* config, char** json_out) {
    if (!config || !json_out) return set_error(FGGM_ERR_ARGUMENT, "config_dump: null argument");
    return guarded([&] {
        *json_out = dup_string(config->cfg.to_json().dump(2));
        return FGGM_OK;
    });
}

fggm_status fggm_config_output_dir(const fggm_config* config, char** dir_out) {
    if (!config || !dir_out) return set_error(FGGM_ERR_ARGUMENT, "config_output_dir: null argument");
    return guarded([&] {
        *dir_out = dup_string(config->cfg.output_dir);
        return FGGM_OK;
    });
}

void fggm_config_free(fggm_config* config) { delete config; }

fggm_status fggm_run(const fggm_config* config, const char* out_dir, unsigned jobs, char** text_out) {
    if (!config || !out_dir) return set_error(FGGM_ERR_ARGUMENT, "run: null argument");
    return guarded([&] {
        fggm::SweepOptions opts;
        opts.jobs = jobs;
        return finish_sweep(fggm::run_sweep(config->cfg, opts, out_dir), text_out, nullptr);
    });
}

fggm_status fggm_sweep(const fggm_config* config, const fggm_sweep_options* options, const char* out_dir,
                       char** text_out, size_t* failed_out) {
    if (!config || !out_dir) return set_error(FGGM_ERR_ARGUMENT, "sweep: null argument");
    return guarded([&] {
        fggm::SweepOptions opts;
        if (options) {
            try {
                if (options->alphas) opts.alphas.assign(options->alphas, options->alphas + options->n_alphas);
                for (const auto& s : split_csv(options->strategies)) opts.strategies.push_back(fggm::parse_strategy_kind(s));
                for (const auto& s : split_csv(options->aggregations)) opts.aggregations.push_back(fggm::parse_aggregation(s));
            } catch (const fggm::Error& e) {
                throw as_config(e);
            }
            if (options->seeds) opts.seeds.assign(options->seeds, options->seeds + options->n_seeds);
            opts.jobs = options->jobs;
        }
        return finish_sweep(fggm::run_sweep(config->cfg, opts, out_dir), text_out, failed_out);
    });
}

fggm_status fggm_report(const char* dir, char** text_out) {
    if (!dir) return set_error(FGGM_ERR_ARGUMENT, "report: null argument");
    return guarded([&] {
        const fggm::ReportResult r = fggm::build_report(dir);
        if (text_out) *text_out = dup_string(r.text);
        return FGGM_OK;
    });
}

}  // extern "C"
