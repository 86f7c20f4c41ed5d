#pragma once

// Scalar functions of y0 on [0, T]: exact polynomials or Chebyshev
// interpolants, closed under sum, product, derivative, and the weighted
// average f -> (y0 -> int_0^1 s^m f(s y0) ds) used by kernel convolution.

#include <functional>
#include <vector>

namespace subfp {

// Gauss-Legendre nodes/weights on [0, 1]; cached per order.
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const QuadRule& gauss_legendre(int order);

// Chebyshev-Lobatto nodes x_j = (1 - cos(pi j / N)) / 2 * t_max, j = 0..N.
std::vector<double> lobatto_nodes(int degree, double t_max);

// Interpolation coefficients for values at Lobatto nodes (T_k basis on [0, t_max]).
std::vector<double> chebyshev_transform(const std::vector<double>& values);

class CoefficientFn {
  public:
    enum class Kind { Polynomial, Chebyshev };

    CoefficientFn();  // zero polynomial on [0, 1]
    static CoefficientFn polynomial(std::vector<double> monomial_coeffs, double t_max = 1.0);
    static CoefficientFn constant(double c, double t_max = 1.0);
    static CoefficientFn chebyshev(std::vector<double> cheb_coeffs, double t_max);
    // Adaptive fit with degree doubling; throws if tol is not met by max_degree.
    static CoefficientFn fit(const std::function<double(double)>& f, double t_max,
                             double tol = 1e-10, int max_degree = 4096);

    Kind kind() const { return kind_; }
    double t_max() const { return t_max_; }
    int degree() const { return static_cast<int>(data_.size()) - 1; }
    const std::vector<double>& data() const { return data_; }

    double operator()(double y0) const;

    CoefficientFn operator+(const CoefficientFn& o) const;
    CoefficientFn operator*(const CoefficientFn& o) const;
    CoefficientFn scaled(double c) const;
    CoefficientFn derivative() const;

    // y0 -> int_0^1 s^m f(s y0) ds, exact on the polynomial content.
    CoefficientFn weighted_average(int m) const;

    double sup_norm() const;
    bool is_zero(double tol = 0.0) const;

  private:
    Kind kind_;
    double t_max_;
    std::vector<double> data_;

    CoefficientFn(Kind k, double t_max, std::vector<double> data);
    CoefficientFn to_chebyshev(int degree) const;
    void trim();
};

}  // namespace subfp
