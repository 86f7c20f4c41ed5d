#pragma once

// Experiment orchestration: config parsing/validation, named experiments
// composing the library modules, CSV + SVG emission, parametrix caching.

#include <cstdint>
#include <string>
#include <vector>

#include "subfp/fp_dynamics.hpp"
#include "subfp/kernel_calculus.hpp"

namespace subfp {

struct ExperimentConfig {
    std::string experiment;

    // potential preset: zero | harmonic | harmonic-sine | harmonic-bump
    std::string potential_preset = "harmonic-sine";
    double omega2 = 1.0;
    double amplitude = 0.3;
    double wavenumber = 2.0;
    double bump_center = 0.0;
    double bump_width = 1.0;

    // jump preset: x | x-scaled
    std::string jump_preset = "x";
    double jump_scale = 1.0;

    GridSpec grid{8.0, 256, 256};
    std::vector<double> h_list;
    std::string gamma_rule = "fixed";  // fixed | rho (gamma = h^{2 rho - 1})
    double gamma = 0.5;
    double rho = 0.5;

    int parametrix_N = 3;
    double T = 1.0;
    double dt = 0.005;
    double dt_q = 0.01;
    double t_final = 1.0;
    std::vector<double> eps_list{0.5, 0.1, 0.02};

    // initial bump
    double x0 = 0.5, xi0 = 0.0, sigma_x = 0.5, sigma_xi = 0.5;

    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int workers = 0;  // 0 = auto

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);
    void validate() const;  // throws with a field-level message

    PotentialSpec make_potential() const;
    JumpSpec make_jump() const;
};

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct RunReport {
    std::string experiment_id;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<Verdict> verdicts;
    double wall_seconds = 0.0;  // side channel, not part of the CSV contract
    bool all_pass() const;
};

RunReport run_experiment(const ExperimentConfig& cfg);

void write_report_csv(const RunReport& rep, const std::string& path);
std::string report_csv_text(const RunReport& rep);
void emit_plots(const RunReport& rep, const std::string& dir);

// Parametrix cache keyed by (potential preset, jump preset, N, T, eps, side).
std::string cache_directory();
std::vector<std::string> cache_list();
void cache_clear();
KernelSum cached_parametrix(const ExperimentConfig& cfg, int N, double eps, ParametrixSide side,
                            bool* was_cached = nullptr);

// Effective settings with environment overrides applied
// (SUBFP_OUT_DIR, SUBFP_WORKERS).
std::string effective_out_dir(const ExperimentConfig& cfg);
int effective_workers(const ExperimentConfig& cfg);

namespace detail {
// kernel-verify sub-suites, used by the acceptance driver to keep the
// per-criterion timing separate: 1 = group/frame laws, 2 = fundamental
// solution, 3 = convolution identities, 4 = L1 scaling. 0 runs everything.
RunReport kernel_verify_subset(const ExperimentConfig& cfg, int part);
}  // namespace detail

}  // namespace subfp
