#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "subfp/experiments.hpp"

using namespace subfp;

TEST_CASE("config parsing and field-level validation") {
    auto cfg = ExperimentConfig::parse_text(
        "experiment = fp-evolve\n"
        "potential.preset = harmonic-sine\n"
        "potential.amplitude = 0.3\n"
        "grid.L = 8\ngrid.nx = 64\ngrid.nxi = 64\n"
        "gamma.value = 0.02\n"
        "time.dt = 0.01\ntime.final = 0.1\n"
        "seed = 7\n");
    CHECK(cfg.experiment == "fp-evolve");
    CHECK(cfg.amplitude == 0.3);
    CHECK(cfg.seed == 7);

    // empty h-list rejected before execution
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse_text("experiment = correspondence-li\n"),
                         doctest::Contains("scan.h"), std::invalid_argument);
    // unknown experiment carries the field name
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse_text("experiment = nope\n"),
                         doctest::Contains("experiment"), std::invalid_argument);
    CHECK_THROWS(ExperimentConfig::parse_text("experiment = fp-evolve\nrho = 0.9\n"));
    CHECK_THROWS(ExperimentConfig::parse_text("experiment = fp-evolve\nbogus.key = 1\n"));
}

TEST_CASE("determinism: identical config and seed give identical csv bytes") {
    ExperimentConfig cfg;
    cfg.experiment = "fp-evolve";
    cfg.potential_preset = "zero";
    cfg.gamma = 0.02;
    cfg.grid = {8.0, 64, 64};
    cfg.dt = 0.02;
    cfg.t_final = 0.2;
    auto r1 = run_experiment(cfg);
    auto r2 = run_experiment(cfg);
    CHECK(report_csv_text(r1) == report_csv_text(r2));
    CHECK(r1.all_pass());
}

TEST_CASE("cache list and clear") {
    setenv("SUBFP_CACHE_DIR", "/tmp/subfp_test_cache", 1);
    cache_clear();
    CHECK(cache_list().empty());
    ExperimentConfig cfg;
    cfg.experiment = "parametrix-order";
    cfg.potential_preset = "harmonic";
    bool was_cached = true;
    auto K1 = cached_parametrix(cfg, 2, 1.0, ParametrixSide::Right, &was_cached);
    CHECK(!was_cached);
    CHECK(cache_list().size() == 1);
    auto K2 = cached_parametrix(cfg, 2, 1.0, ParametrixSide::Right, &was_cached);
    CHECK(was_cached);
    CHECK(kernel_sum_to_json(K1) == kernel_sum_to_json(K2));
    cache_clear();
    CHECK(cache_list().empty());
    unsetenv("SUBFP_CACHE_DIR");
}

TEST_CASE("env overrides") {
    ExperimentConfig cfg;
    cfg.out_dir = "somewhere";
    cfg.workers = 3;
    CHECK(effective_out_dir(cfg) == "somewhere");
    CHECK(effective_workers(cfg) == 3);
    setenv("SUBFP_OUT_DIR", "/tmp/elsewhere", 1);
    setenv("SUBFP_WORKERS", "2", 1);
    CHECK(effective_out_dir(cfg) == "/tmp/elsewhere");
    CHECK(effective_workers(cfg) == 2);
    unsetenv("SUBFP_OUT_DIR");
    unsetenv("SUBFP_WORKERS");
}

TEST_CASE("plot emission is byte-stable") {
    ExperimentConfig cfg;
    cfg.experiment = "fp-evolve";
    cfg.potential_preset = "zero";
    cfg.gamma = 0.02;
    cfg.grid = {8.0, 64, 64};
    cfg.dt = 0.02;
    cfg.t_final = 0.2;
    auto rep = run_experiment(cfg);
    namespace fs = std::filesystem;
    fs::create_directories("/tmp/subfp_plots_a");
    fs::create_directories("/tmp/subfp_plots_b");
    emit_plots(rep, "/tmp/subfp_plots_a");
    emit_plots(rep, "/tmp/subfp_plots_b");
    std::ifstream fa("/tmp/subfp_plots_a/fp-evolve.svg"), fb("/tmp/subfp_plots_b/fp-evolve.svg");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().find("<svg") != std::string::npos);
}
