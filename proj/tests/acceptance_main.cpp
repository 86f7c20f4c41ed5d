// Acceptance suite: one pinned configuration per criterion, one pass/fail
// line each. Usage: acceptance <criterion...> | all

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "subfp/experiments.hpp"

using namespace subfp;

namespace {

struct Outcome {
    int criterion;
    bool pass;
    double seconds;
    std::string detail;
};

double now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool verdicts_ok(const RunReport& rep, const std::string& prefix, std::string& detail) {
    bool ok = true;
    int count = 0;
    for (const auto& v : rep.verdicts) {
        if (!prefix.empty() && v.name.rfind(prefix, 0) != 0) continue;
        ++count;
        if (!v.pass) {
            ok = false;
            char buf[256];
            std::snprintf(buf, sizeof buf, " [%s value=%.4g thr=%.4g]", v.name.c_str(), v.value,
                          v.threshold);
            detail += buf;
        }
    }
    if (count == 0) {
        ok = false;
        detail += " [no verdicts matched '" + prefix + "']";
    }
    return ok;
}

Outcome run_criterion(int k) {
    Outcome out{k, false, 0.0, ""};
    const double t0 = now();
    ExperimentConfig cfg;
    switch (k) {
        case 1: {  // group/kernel algebra suite, < 10 s
            cfg.experiment = "kernel-verify";
            auto rep = detail::kernel_verify_subset(cfg, 1);
            out.pass = rep.all_pass() && !rep.verdicts.empty();
            for (const auto& v : rep.verdicts)
                if (!v.pass) out.detail += " " + v.name;
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 10.0;
            break;
        }
        case 2: {  // fundamental solution, < 5 s
            cfg.experiment = "kernel-verify";
            auto rep = detail::kernel_verify_subset(cfg, 2);
            out.pass = verdicts_ok(rep, "fundamental_solution", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 5.0;
            break;
        }
        case 3: {  // convolution identities, < 2 min
            cfg.experiment = "kernel-verify";
            auto rep = detail::kernel_verify_subset(cfg, 3);
            out.pass = verdicts_ok(rep, "conv_", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 120.0;
            break;
        }
        case 4: {  // kernel L1 scaling, < 1 min
            cfg.experiment = "kernel-verify";
            auto rep = detail::kernel_verify_subset(cfg, 4);
            out.pass = verdicts_ok(rep, "l1_scaling", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 60.0;
            break;
        }
        case 5: {  // parametrix residual order, < 5 min
            cfg.experiment = "parametrix-order";
            cfg.potential_preset = "harmonic";
            cfg.parametrix_N = 3;
            auto rep = run_experiment(cfg);
            out.pass = verdicts_ok(rep, "residual_slope", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 300.0;
            break;
        }
        case 6: {  // solver conservation, < 3 min
            cfg.experiment = "fp-evolve";
            cfg.potential_preset = "harmonic-sine";
            cfg.gamma = 0.02;  // eps = 0.1 at h = 1
            cfg.grid = {8.0, 256, 256};
            cfg.dt = 0.005;
            cfg.t_final = 5.0;
            cfg.x0 = 0.5;
            cfg.xi0 = 0.0;
            cfg.sigma_x = 0.5;
            cfg.sigma_xi = 0.5;
            auto rep = run_experiment(cfg);
            std::string d;
            out.pass = verdicts_ok(rep, "mass_drift", d) && verdicts_ok(rep, "sup_", d) &&
                       verdicts_ok(rep, "l1_contraction", d) &&
                       verdicts_ok(rep, "l2_contraction", d);
            out.detail = d;
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 180.0;
            break;
        }
        case 7: {  // free-case exactness, < 1 min
            cfg.experiment = "fp-evolve";
            cfg.potential_preset = "zero";
            cfg.gamma = 0.045;  // eps = 0.15
            cfg.grid = {8.0, 256, 256};
            cfg.dt = 1.0 / 512;
            cfg.t_final = 1.0;
            cfg.x0 = 0.5;
            cfg.xi0 = -0.3;
            cfg.sigma_x = 0.6;
            cfg.sigma_xi = 0.5;
            auto rep = run_experiment(cfg);
            out.pass = verdicts_ok(rep, "free_case_exactness", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 60.0;
            break;
        }
        case 8: {  // Gronwall envelope, < 15 min
            cfg.experiment = "gronwall-scan";
            cfg.potential_preset = "harmonic-sine";
            cfg.eps_list = {0.5, 0.1, 0.02};
            cfg.grid = {8.0, 512, 512};
            cfg.dt = 0.01;
            cfg.t_final = 10.0;
            cfg.x0 = 1.0;
            cfg.xi0 = 0.0;
            cfg.sigma_x = 0.5;
            cfg.sigma_xi = 0.5;
            auto rep = run_experiment(cfg);
            out.pass = verdicts_ok(rep, "gronwall_", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 900.0;
            break;
        }
        case 9: {  // smoothing rate, < 10 min
            cfg.experiment = "opbound-scan";
            cfg.potential_preset = "harmonic-sine";
            cfg.grid = {4.0, 512, 512};
            cfg.dt = 0.005;
            cfg.x0 = 0.3;
            cfg.xi0 = 0.0;
            cfg.sigma_x = 0.06;
            cfg.sigma_xi = 0.06;
            auto rep = run_experiment(cfg);
            out.pass = verdicts_ok(rep, "smoothing_slope", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 600.0;
            break;
        }
        case 10: {  // quadratic exactness of correspondence, < 5 min
            cfg.experiment = "correspondence-li";
            cfg.potential_preset = "harmonic";
            cfg.h_list = {1.0 / 16, 1.0 / 64};
            cfg.gamma = 0.5;
            cfg.grid = {3.0, 512, 512};
            cfg.dt = 0.004;
            cfg.dt_q = 0.01;
            cfg.t_final = 5.0;
            cfg.x0 = 0.4;
            cfg.xi0 = 0.0;
            auto rep = run_experiment(cfg);
            out.pass = verdicts_ok(rep, "exact_case", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 300.0;
            break;
        }
        case 11: {  // Theorem 1.2 scaling, < 30 min
            cfg.experiment = "correspondence-li";
            cfg.potential_preset = "harmonic-sine";
            cfg.h_list = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
            cfg.gamma = 0.5;
            cfg.grid = {2.0, 512, 512};
            cfg.dt = 0.0025;
            cfg.dt_q = 0.01;
            cfg.x0 = 0.25;
            cfg.xi0 = 0.0;
            auto rep = run_experiment(cfg);
            std::string d;
            out.pass = verdicts_ok(rep, "li_trace_slope", d) &&
                       verdicts_ok(rep, "li_linear_t_growth", d);
            out.detail = d;
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 1800.0;
            break;
        }
        case 12: {  // Theorem 1.3 scaling, < 30 min
            cfg.experiment = "correspondence-gaz";
            cfg.potential_preset = "harmonic-sine";
            cfg.h_list = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
            cfg.grid = {1.5, 512, 512};
            cfg.dt = 0.0025;
            cfg.dt_q = 0.01;
            cfg.x0 = 0.2;
            cfg.xi0 = 0.0;
            auto rep = run_experiment(cfg);
            out.pass = verdicts_ok(rep, "gaz_hs_slope", out.detail);
            out.seconds = now() - t0;
            out.pass = out.pass && out.seconds < 1800.0;
            break;
        }
        default:
            out.detail = " unknown criterion";
            return out;
    }
    return out;
}

const char* kDescriptions[13] = {
    "",
    "group/kernel algebra invariants",
    "fundamental solution (Y0 - sum Y_j^2) K0 = 0",
    "convolution identities (symbolic + 3D quadrature)",
    "kernel L1 scaling law",
    "parametrix residual order (quadratic V, N in {2,3})",
    "solver conservation (mass, max principle, Lp contraction)",
    "free-case exactness vs closed-form propagation",
    "Gronwall eps-uniform derivative envelope",
    "smoothing rate C_{N,T}",
    "quadratic exactness of quantum/classical correspondence",
    "trace-norm h^(1/2) scaling and linear-in-t growth",
    "HS-norm h^(2-3rho) scaling",
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> todo;
    if (argc < 2 || std::strcmp(argv[1], "all") == 0) {
        for (int k = 1; k <= 12; ++k) todo.push_back(k);
    } else {
        for (int i = 1; i < argc; ++i) todo.push_back(std::atoi(argv[i]));
    }
    int failures = 0;
    for (int k : todo) {
        if (k < 1 || k > 12) {
            std::printf("[FAIL] criterion %d: unknown\n", k);
            ++failures;
            continue;
        }
        Outcome o;
        try {
            o = run_criterion(k);
        } catch (const std::exception& e) {
            std::printf("[FAIL] criterion %2d: %s -- exception: %s\n", k, kDescriptions[k],
                        e.what());
            ++failures;
            continue;
        }
        std::printf("[%s] criterion %2d: %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL", k,
                    kDescriptions[k], o.seconds, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
