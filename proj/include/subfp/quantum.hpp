#pragma once

// Quantum side: grid Weyl quantization, Heisenberg-picture Lindblad evolution
// with linear jump operators, Schatten norms, and the correspondence error.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "subfp/fp_dynamics.hpp"

namespace subfp {

struct QuantGrid {
    int M = 256;     // position points, power of two
    double L = 4.0;  // box [-L, L)
    double h = 0.1;  // semiclassical parameter

    double dx() const { return 2.0 * L / M; }
    double x(int j) const { return -L + 2.0 * L * j / M; }
    // quantization momentum grid: 2M samples, spacing pi h / (2 L)
    double dxi() const { return 3.14159265358979323846 * h / (2.0 * L); }
    double xi_window() const { return M * dxi(); }  // covers [-window, window)
    void validate(double xi_support_needed) const;
};

struct ObservableMatrix {
    Eigen::MatrixXcd a;
    QuantGrid grid;

    double hermiticity_defect() const;  // ||A - A*||_F / max(||A||_F, eps)
};

// Midpoint-sampled FFT quantization of a symbol given as a callable.
ObservableMatrix weyl_quantize_fn(const std::function<double(double, double)>& a,
                                  const QuantGrid& qg);

// Spectral resampling of a periodic GridSymbol onto the quantization nodes,
// then the same FFT assembly. Requires the symbol's xi-support to fit the
// momentum window (validated against the grid box decay).
ObservableMatrix weyl_quantize(const GridSymbol& a, const QuantGrid& qg);

struct LindbladGenerator {
    QuantGrid grid;
    double gamma = 0.0;
    double h = 1.0;
    Eigen::VectorXd hamiltonian_eigs;   // eigenvalues of P
    Eigen::MatrixXcd hamiltonian_vecs;  // eigenvectors of P
    Eigen::MatrixXcd p_matrix;          // P = p^w(x, hD)
    Eigen::MatrixXcd dissipator;        // entry (a,b): sum_j (2 l_a l_b* - |l_a|^2 - |l_b|^2)

    static LindbladGenerator make(const QuantGrid& qg, const PotentialSpec& pot,
                                  const JumpSpec& jump, double gamma);
};

ObservableMatrix lindblad_evolve(const ObservableMatrix& A0, double t,
                                 const LindbladGenerator& gen, double dt);

// Generator applied once: (i/h)[P, A] + (gamma/2h) dissipator entrywise.
Eigen::MatrixXcd lindblad_apply(const Eigen::MatrixXcd& A, const LindbladGenerator& gen);

enum class SchattenP { One, Two, Inf };
double schatten_norm(const ObservableMatrix& A, SchattenP p);

struct CorrespondenceResult {
    double err_trace = 0.0;
    double err_hs = 0.0;
    double classical_hs = 0.0;  // || Op(a(t)) ||_L2, for scale reference
};

// || A(t) - Op_h^w(a(t)) || with A(t) from lindblad_evolve(weyl_quantize(a0))
// and a(t) from fp_evolve(a0).
CorrespondenceResult correspondence_error(const GridSymbol& a0, double t,
                                          const PotentialSpec& pot, const JumpSpec& jump,
                                          const FPConfig& cfg, const QuantGrid& qg, double dt_q);

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms of log-residuals
};

// Least-squares slope of log(err) against log(h); weights optional (empty = 1).
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& h_err,
                       const std::vector<double>& weights = {});

}  // namespace subfp
