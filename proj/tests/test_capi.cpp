#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

#include "nclosure/nclosure.h"

namespace fs = std::filesystem;

TEST_CASE("handle lifecycle and status codes") {
    CHECK(std::string(ncm_version()).size() > 0);
    ncm_experiment* exp = nullptr;
    CHECK(ncm_experiment_parse("[experiment]\nname = toy\n[train]\nepochs = 2\n", &exp) == NCM_OK);
    REQUIRE(exp != nullptr);
    const char* name = nullptr;
    CHECK(ncm_experiment_name(exp, &name) == NCM_OK);
    CHECK(std::string(name) == "toy");

    const fs::path out = fs::temp_directory_path() / "nclosure_test_capi";
    fs::remove_all(out);
    CHECK(ncm_experiment_set_out_dir(exp, out.string().c_str()) == NCM_OK);
    CHECK(ncm_experiment_set_seed(exp, 3) == NCM_OK);
    CHECK(ncm_gen_data(exp) == NCM_OK);
    CHECK(fs::exists(out / "truth.csv"));
    CHECK(ncm_train(exp, nullptr) == NCM_OK);
    CHECK(fs::exists(out / "checkpoint.json"));
    CHECK(ncm_evaluate(exp, nullptr) == NCM_OK);
    CHECK(fs::exists(out / "summary.csv"));
    double err = -1;
    CHECK(ncm_verify_gradients(exp, &err) == NCM_OK);
    CHECK(err >= 0.0);
    CHECK(err < 1e-4);
    CHECK(ncm_evaluate(exp, (out / "missing.json").string().c_str()) == NCM_ERR_INVALID);
    CHECK(std::string(ncm_last_error()).find("missing.json") != std::string::npos);
    ncm_experiment_free(exp);
}

TEST_CASE("invalid input is reported, not thrown") {
    ncm_experiment* exp = nullptr;
    CHECK(ncm_experiment_parse("[experiment]\nname = toy\n[train]\nbogus = 1\n", &exp) == NCM_ERR_INVALID);
    CHECK(exp == nullptr);
    CHECK(std::string(ncm_last_error()).find("bogus") != std::string::npos);
    CHECK(ncm_experiment_load("/nonexistent/config.ini", &exp) == NCM_ERR_INVALID);
    CHECK(ncm_experiment_parse(nullptr, &exp) == NCM_ERR_INVALID);
    CHECK(ncm_gen_data(nullptr) == NCM_ERR_INVALID);
    CHECK(ncm_experiment_set_out_dir(nullptr, "x") == NCM_ERR_INVALID);
    ncm_experiment_free(nullptr);
}

TEST_CASE("a failing gradient check maps to its own status") {
    ncm_experiment* exp = nullptr;
    const fs::path out = fs::temp_directory_path() / "nclosure_test_capi_verify";
    const std::string text = "[experiment]\nname = toy\nout = " + out.string() + "\n[verify]\nthreshold = 1e-15\n";
    REQUIRE(ncm_experiment_parse(text.c_str(), &exp) == NCM_OK);
    CHECK(ncm_verify_gradients(exp, nullptr) == NCM_ERR_CHECK_FAILED);
    ncm_experiment_free(exp);
}
