#pragma once

// Classical side: the drift flow and its variational data, exponential
// coordinates, the frame Taylor expansion feeding the parametrix builder,
// the split-step Fourier grid solver for d_t a = Q a, and diagnostics.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "subfp/kernel_calculus.hpp"

namespace subfp {

struct PotentialSpec {
    enum class Perturbation { Zero, Sine, Bump };

    Eigen::MatrixXd quadratic;  // Hessian at infinity
    Perturbation kind = Perturbation::Zero;
    double amplitude = 0.0;
    Eigen::VectorXd wavevector;  // Sine: V += A sin(k.x)
    Eigen::VectorXd center;      // Bump parameters
    double width = 1.0;

    static PotentialSpec harmonic(int n, double omega2 = 1.0);
    static PotentialSpec harmonic_sine(int n, double omega2, double amp, double wavenum);
    static PotentialSpec zero(int n);
    static PotentialSpec with_bump(int n, double omega2, double amp, double center1,
                                   double width);

    int n() const { return static_cast<int>(quadratic.rows()); }
    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd hess(const Eigen::VectorXd& x) const;
    bool constant_hessian() const { return kind == Perturbation::Zero || amplitude == 0.0; }
};

struct JumpSpec {
    Eigen::MatrixXcd coeffs;  // J x n, l_j(x) = sum_i c_{ji} x_i

    static JumpSpec position(int n);  // l_i = x_i
    static JumpSpec scaled_position(int n, double c);

    int n() const { return static_cast<int>(coeffs.cols()); }
    Eigen::MatrixXd bbt() const;           // sum_j Re(grad l_j (x) grad l_j-bar)
    Eigen::MatrixXd bmatrix() const;       // Cholesky factor, throws if singular
    Eigen::MatrixXd drift_matrix() const;  // D with sum_j Im(l_j-bar grad l_j) = D x
};

struct GridSpec {
    double L = 8.0;  // box [-L, L)^2
    int nx = 256;
    int nxi = 256;
};

struct FPConfig {
    double gamma = 1.0;
    double h = 1.0;
    double eps = 0.0;  // sqrt(gamma h / 2)
    GridSpec grid;
    double dt = 0.01;
    double T = 1.0;

    static FPConfig make(double gamma, double h, GridSpec grid, double dt, double T);
    void validate() const;
};

struct GridSymbol {
    int nx = 0, nxi = 0;
    double L = 0.0;
    double h = 1.0, gamma = 1.0, eps = 1.0;
    double t = 0.0;
    std::vector<double> values;  // row-major, values[ix * nxi + ixi]

    static GridSymbol sampled(const GridSpec& g, const FPConfig& cfg,
                              const std::function<double(double, double)>& f);
    double x(int ix) const { return -L + 2.0 * L * ix / nx; }
    double xi(int ixi) const { return -L + 2.0 * L * ixi / nxi; }
    double dx() const { return 2.0 * L / nx; }
    double dxi() const { return 2.0 * L / nxi; }
    double& at(int ix, int ixi) { return values[static_cast<size_t>(ix) * nxi + ixi]; }
    double at(int ix, int ixi) const { return values[static_cast<size_t>(ix) * nxi + ixi]; }

    double norm_l1() const;
    double norm_l2() const;
    double norm_sup() const;
    double mass() const;
    double boundary_max() const;  // max |a| on the outermost ring
};

void write_grid_binary(const GridSymbol& g, const std::string& path);
GridSymbol read_grid_binary(const std::string& path);
void write_grid_csv(const GridSymbol& g, const std::string& path);

struct PhasePoint {
    Eigen::VectorXd x;
    Eigen::VectorXd xi;
};

struct FlowOptions {
    double max_step = 0.005;
};

// Flow of X0 = d_t - xi.dx + (grad V - gamma D x).dxi for time t (RK4).
PhasePoint flow_map(const PhasePoint& w, double t, const PotentialSpec& pot,
                    const JumpSpec& jump, double gamma, const FlowOptions& opt = {});

// d Phi_t(w) via the variational equation, integrated alongside the flow.
Eigen::MatrixXd flow_jacobian(const PhasePoint& w, double t, const PotentialSpec& pot,
                              const JumpSpec& jump, double gamma, const FlowOptions& opt = {});

struct SpacetimePoint {
    double t = 0.0;
    PhasePoint w;
};

SpacetimePoint exp_coords(const SpacetimePoint& w, const GroupElement& y,
                          const PotentialSpec& pot, const JumpSpec& jump, double gamma);

GroupElement theta_coords(const SpacetimePoint& w, const SpacetimePoint& v,
                          const PotentialSpec& pot, const JumpSpec& jump, double gamma);

// Smooth radial cutoff: 1 for |y| <= 1/2, 0 for |y| >= 1.
double cutoff_chi(const GroupElement& y);

struct FrameExpansion {
    std::vector<PolyDiffOp> P;  // P[k] is P_{k+1}, order 2-(k+1); may be empty ops
    double remainder_sup = 0.0;
};

struct FrameExpansionOptions {
    int jmax = 10;          // emit P_1 .. P_jmax
    int taylor_max = 3;     // spatial Taylor degree in (y', y'')
    double t_domain = 1.0;  // coefficient domain [0, T]
    double fit_tol = 1e-11;
};

FrameExpansion frame_expansion(const SpacetimePoint& w, int N, const PotentialSpec& pot,
                               const JumpSpec& jump, double gamma,
                               const FrameExpansionOptions& opt = {});

// Correction coefficients of the pulled-back frame at exp-coordinates y
// (direct variational computation; used to cross-check frame_expansion).
struct FrameCorrection {
    Eigen::MatrixXd dyp;   // row k: d_{y'_k} coefficient of field X_i (column i)
    Eigen::MatrixXd dypp;  // row k: d_{y''_k} coefficient
};
FrameCorrection frame_correction_direct(const SpacetimePoint& w, const GroupElement& y,
                                        const PotentialSpec& pot, const JumpSpec& jump,
                                        double gamma);

// Split-step Fourier solver for d_t a = Q a (exact substeps, Strang order).
GridSymbol fp_evolve(const GridSymbol& a0, double t, const PotentialSpec& pot,
                     const JumpSpec& jump, const FPConfig& cfg);

// Same loop with snapshots every snap_stride steps (always includes t = 0 and t).
std::vector<GridSymbol> fp_evolve_trajectory(const GridSymbol& a0, double t,
                                             const PotentialSpec& pot, const JumpSpec& jump,
                                             const FPConfig& cfg, int snap_stride);

// T_K against initial-slice data: quadrature of the parametrix kernel through
// exponential coordinates. The kernel K comes from build_parametrix at a
// representative base point (exact for constant-Hessian potentials).
GridSymbol parametrix_evolve(const std::function<double(double, double)>& a0, double t,
                             const KernelSum& K, const PotentialSpec& pot, const JumpSpec& jump,
                             const FPConfig& cfg);
GridSymbol parametrix_evolve(const GridSymbol& a0, double t, const KernelSum& K,
                             const PotentialSpec& pot, const JumpSpec& jump,
                             const FPConfig& cfg);

// Q a = xi d_x a - (grad V - gamma D x) d_xi a + eps^2 (B B^T) d_xi^2 a,
// spectral derivatives on the periodic grid.
GridSymbol apply_q(const GridSymbol& a, const PotentialSpec& pot, const JumpSpec& jump,
                   const FPConfig& cfg);

struct DerivativeNormRow {
    int a_xi = 0;  // order in (eps d_xi)
    int a_x = 0;   // order in (eps d_x)
    double l1 = 0.0, l2 = 0.0, sup = 0.0;
};

// All rows with a_xi + a_x <= maxN, spectral differentiation, eps from the grid.
std::vector<DerivativeNormRow> scaled_derivative_norms(const GridSymbol& a, int maxN);

struct ConservationReport {
    double mass_drift_rel = 0.0;  // max |m(t) - m(0)| / |m(0)|
    double sup_increase = 0.0;    // max over t of (sup(t) - sup(0)) / sup(0)
    double lp_ratio_max[3] = {0.0, 0.0, 0.0};  // p = 1, 2, inf
    std::vector<std::array<double, 2>> rows_t_mass;
    bool max_principle_ok(double tol = 1e-7) const { return sup_increase <= tol; }
};

ConservationReport check_conservation_and_contraction(const std::vector<GridSymbol>& traj);

}  // namespace subfp
