#include "nclosure/nclosure.h"

#include <iostream>
#include <string>

#include "nclosure/experiment/commands.hpp"
#include "nclosure/experiment/csv.hpp"

struct ncm_experiment {
    ncm::ExperimentConfig cfg;
    bool verbose = false;
    std::string name;
};

namespace {

thread_local std::string g_last_error;

template <class F>
ncm_status guarded(F&& f) {
    g_last_error.clear();
    try {
        return f();
    } catch (const ncm::ConfigError& e) {
        g_last_error = e.what();
        return NCM_ERR_INVALID;
    } catch (const ncm::CheckpointError& e) {
        g_last_error = e.what();
        return NCM_ERR_INVALID;
    } catch (const ncm::InvalidArgument& e) {
        g_last_error = e.what();
        return NCM_ERR_INVALID;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return NCM_ERR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return NCM_ERR_RUNTIME;
    }
}

ncm_status null_handle() {
    g_last_error = "null experiment handle";
    return NCM_ERR_INVALID;
}

std::ostream* log_of(const ncm_experiment* e) { return e->verbose ? &std::cout : nullptr; }

ncm_status wrap(ncm::ExperimentConfig cfg, ncm_experiment** out) {
    if (!out) {
        g_last_error = "null output pointer";
        return NCM_ERR_INVALID;
    }
    auto* e = new ncm_experiment{std::move(cfg), false, {}};
    e->name = ncm::to_string(e->cfg.experiment);
    *out = e;
    return NCM_OK;
}

}  // namespace

extern "C" {

const char* ncm_version(void) { return "1.0.0"; }

const char* ncm_last_error(void) { return g_last_error.c_str(); }

ncm_status ncm_experiment_load(const char* path, ncm_experiment** out) {
    return guarded([&] {
        if (!path) throw ncm::ConfigError("null config path");
        return wrap(ncm::load_config(path), out);
    });
}

ncm_status ncm_experiment_parse(const char* text, ncm_experiment** out) {
    return guarded([&] {
        if (!text) throw ncm::ConfigError("null config text");
        return wrap(ncm::parse_config(text), out);
    });
}

void ncm_experiment_free(ncm_experiment* exp) { delete exp; }

ncm_status ncm_experiment_set_seed(ncm_experiment* exp, uint64_t seed) {
    if (!exp) return null_handle();
    exp->cfg.seed = seed;
    return NCM_OK;
}

ncm_status ncm_experiment_set_out_dir(ncm_experiment* exp, const char* dir) {
    if (!exp) return null_handle();
    return guarded([&] {
        if (!dir || !*dir) throw ncm::ConfigError("empty output directory");
        exp->cfg.out_dir = dir;
        return NCM_OK;
    });
}

ncm_status ncm_experiment_set_verbose(ncm_experiment* exp, int verbose) {
    if (!exp) return null_handle();
    exp->verbose = verbose != 0;
    return NCM_OK;
}

ncm_status ncm_experiment_name(const ncm_experiment* exp, const char** name) {
    if (!exp) return null_handle();
    if (name) *name = exp->name.c_str();
    return NCM_OK;
}

ncm_status ncm_gen_data(ncm_experiment* exp) {
    if (!exp) return null_handle();
    return guarded([&] {
        ncm::cmd_gen_data(exp->cfg, log_of(exp));
        return NCM_OK;
    });
}

ncm_status ncm_train(ncm_experiment* exp, const char* checkpoint) {
    if (!exp) return null_handle();
    return guarded([&] {
        ncm::cmd_train(exp->cfg, checkpoint ? checkpoint : "", log_of(exp));
        return NCM_OK;
    });
}

ncm_status ncm_evaluate(ncm_experiment* exp, const char* checkpoint) {
    if (!exp) return null_handle();
    return guarded([&] {
        ncm::cmd_evaluate(exp->cfg, checkpoint ? checkpoint : "", log_of(exp));
        return NCM_OK;
    });
}

ncm_status ncm_verify_gradients(ncm_experiment* exp, double* max_rel_err) {
    if (!exp) return null_handle();
    return guarded([&] {
        const ncm::VerifyReport r = ncm::cmd_verify_gradients(exp->cfg, log_of(exp));
        if (max_rel_err) *max_rel_err = r.max_rel_err;
        if (!r.passed) {
            g_last_error = "gradient check failed: max relative error " + ncm::format_double(r.max_rel_err);
            return NCM_ERR_CHECK_FAILED;
        }
        return NCM_OK;
    });
}

ncm_status ncm_sweep_delay(ncm_experiment* exp) {
    if (!exp) return null_handle();
    return guarded([&] {
        ncm::cmd_sweep_delay(exp->cfg, log_of(exp));
        return NCM_OK;
    });
}

}  // extern "C"
