#pragma once

// The kernel algebra spanned by eps^j c(y0) y^gamma K0^(eps)(y): evaluation,
// frame derivatives, group convolution against K0, the recursive parametrix
// builder, and closed-form L1 slice norms.

#include <string>
#include <vector>

#include "subfp/carnot.hpp"
#include "subfp/coeff_fn.hpp"

namespace subfp {

// K0(y) = G_{y0}(y') G_{y0^3/12}(y''), scaled as eps^{-2n} K0(y0, y'/eps, y''/eps).
double eval_K0(const GroupElement& y, double eps);

struct KernelTerm {
    int eps_power = 0;       // j >= 0
    CoefficientFn coeff;     // c(y0)
    MultiIndex gamma;        // monomial in the scaled variables
};

class KernelSum {
  public:
    KernelSum(int n, double eps);
    static KernelSum k0(int n, double eps);  // single term: j=0, c=1, gamma=0

    int n() const { return n_; }
    double eps() const { return eps_; }
    const std::vector<KernelTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    void add_term(KernelTerm t);
    void add(const KernelSum& o);
    KernelSum scaled(double c) const;
    KernelSum with_eps(double eps) const;  // same algebraic content, new scale

    int min_order() const;  // min over terms of order(gamma); throws if empty
    double eval(const GroupElement& y) const;

    // Merge equal (eps_power, gamma) terms and drop coefficients whose sup norm
    // is below drop_tol relative to the largest one.
    KernelSum canonicalized(double drop_tol = 0.0) const;

    // Parity flip y'' -> -y'': term sign (-1)^{|gamma''|}.
    KernelSum flipped_ypp() const;

  private:
    int n_;
    double eps_;
    std::vector<KernelTerm> terms_;
};

// Derivative in the scaled-kernel sense: the (coeff, gamma) transformation of
// d/dy_k acting on K_gamma at eps = 1. For eps < 1 the returned sum represents
// eps * d_{y'}K, eps * d_{y''}K, or d_{y0}K respectively (the combinations the
// calculus uses). coord: 0 -> y0, 1..n -> y'_i, n+1..2n -> y''_i.
KernelSum apply_partial(const KernelSum& K, int coord);

// Same convention for the left-invariant frame: represents Y0 K for j = 0 and
// eps * Y_j K for j >= 1, so that apply_frame(apply_frame(K, j), j) summed over
// 1 <= j <= n and subtracted from apply_frame(K, 0) is (Y0 - eps^2 Sum Y_j^2) K.
KernelSum apply_frame(const KernelSum& K, FrameId j);

// Multiplication by the unscaled coordinate monomial y^alpha
// (adds |alpha'| + |alpha''| to eps_power).
KernelSum mul_monomial(const KernelSum& K, const MultiIndex& alpha);

struct RewriteTerm {
    int j = 0;          // power of y0
    MultiIndex theta;   // Y-multi-index over 1..2n (theta.a0 == 0)
    double c = 0.0;
};

// K_gamma = sum c y0^j Y^theta K0 with theta_0 = 0, |theta| <= |gamma'|+|gamma''|.
std::vector<RewriteTerm> rewrite_monomial(const MultiIndex& gamma);

// int K0^(eps)(z^{-1} y) f(z0) K^(eps)(z) dz, term orders gain exactly +2.
// Requires every term order >= -1.
KernelSum convolve_with_K0(const KernelSum& K);

struct PolyDiffTerm {
    int eps_power = 0;        // 2 - |derivative| in the canonical form
    CoefficientFn coeff;      // f(y0)
    MultiIndex monomial;      // alpha >= 0, alpha.a0 >= 0
    MultiIndex derivative;    // beta, beta.a0 == 0, |beta| <= 2
};

class PolyDiffOp {
  public:
    PolyDiffOp(int n, int op_order);
    int n() const { return n_; }
    int op_order() const { return op_order_; }  // 2 - j for a P_j
    const std::vector<PolyDiffTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    // Validates ord(derivative) - ord(monomial) == op_order and the shape rules.
    void add_term(PolyDiffTerm t);

  private:
    int n_;
    int op_order_;
    std::vector<PolyDiffTerm> terms_;
};

KernelSum apply_op(const PolyDiffOp& P, const KernelSum& K);
PolyDiffOp transpose(const PolyDiffOp& P);
PolyDiffOp flip_ypp(const PolyDiffOp& P);

enum class ParametrixSide { Right, Left };

struct ParametrixResult {
    KernelSum K;                    // K_{0,eps} + sum K_m
    KernelSum R;                    // residual, term orders >= N-1
    std::vector<KernelSum> layers;  // K_0 .. K_N
};

// P[k] is P_{k+1} of order 2-(k+1); the list may extend past N (the extra
// operators enter the residual only). side = Left builds the left parametrix
// via transposition and the y'' -> -y'' conjugation.
ParametrixResult build_parametrix(const std::vector<PolyDiffOp>& P, int N, double eps,
                                  ParametrixSide side);

enum class L1Mode { TriangleClosedForm, Quadrature };

// int |K(y0, .)| dy' dy''; closed form per term (exact for a single term),
// adaptive quadrature of |sum| otherwise. eps-independent per eq-level scaling.
double kernel_L1_slice_norm(const KernelSum& K, double y0,
                            L1Mode mode = L1Mode::TriangleClosedForm);

// Closed-form absolute Gaussian moment: int |w|^k G_t(w) dw over R (1D factor).
double gaussian_abs_moment(int k, double t);

std::string kernel_sum_to_json(const KernelSum& K);
KernelSum kernel_sum_from_json(const std::string& text);

}  // namespace subfp
