#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "nclosure/nclosure.h"

namespace {

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::string checkpoint;
    bool quiet = false;
};

int exit_code(ncm_status s) {
    switch (s) {
        case NCM_OK: return 0;
        case NCM_ERR_INVALID:
        case NCM_ERR_CHECK_FAILED: return 2;
        case NCM_ERR_RUNTIME: return 1;
    }
    return 1;
}

int fail(ncm_status s) {
    std::fprintf(stderr, "error: %s\n", ncm_last_error());
    return exit_code(s);
}

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Options& o,
                      bool with_checkpoint) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "experiment config file")->required();
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--out", o.out, "override the output directory");
    if (with_checkpoint) sub->add_option("--checkpoint", o.checkpoint, "checkpoint file");
    sub->add_flag("-q,--quiet", o.quiet, "no progress output");
    return sub;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural closure models with delays: data generation, training and evaluation"};
    app.set_version_flag("--version", std::string(ncm_version()));
    app.require_subcommand(1);
    Options o;
    CLI::App* gen = add_command(app, "gen-data", "write truth snapshots", o, false);
    CLI::App* train = add_command(app, "train", "train the configured closure", o, true);
    CLI::App* eval = add_command(app, "evaluate", "roll out truth, baseline and closure models", o, true);
    CLI::App* verify = add_command(app, "verify-gradients", "adjoint vs finite-difference gradients", o, false);
    CLI::App* sweep = add_command(app, "sweep-delay", "distributed-delay window sweep", o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    ncm_experiment* exp = nullptr;
    if (ncm_status s = ncm_experiment_load(o.config.c_str(), &exp); s != NCM_OK) return fail(s);
    ncm_status s = NCM_OK;
    bool have_seed = false;
    for (CLI::App* sub : {gen, train, eval, verify, sweep})
        if (sub->parsed() && sub->count("--seed") > 0) have_seed = true;
    if (have_seed) s = ncm_experiment_set_seed(exp, o.seed);
    if (s == NCM_OK && !o.out.empty()) s = ncm_experiment_set_out_dir(exp, o.out.c_str());
    if (s == NCM_OK) s = ncm_experiment_set_verbose(exp, o.quiet ? 0 : 1);
    const char* ckpt = o.checkpoint.empty() ? nullptr : o.checkpoint.c_str();

    if (s == NCM_OK) {
        if (gen->parsed()) s = ncm_gen_data(exp);
        else if (train->parsed()) s = ncm_train(exp, ckpt);
        else if (eval->parsed()) s = ncm_evaluate(exp, ckpt);
        else if (verify->parsed()) s = ncm_verify_gradients(exp, nullptr);
        else if (sweep->parsed()) s = ncm_sweep_delay(exp);
    }
    ncm_experiment_free(exp);
    return s == NCM_OK ? 0 : fail(s);
}
