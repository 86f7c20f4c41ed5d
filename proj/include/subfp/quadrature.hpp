#pragma once

// Adaptive Gauss-Kronrod quadrature, with product-rule nesting for the
// 2D/3D convolution cross-checks. Integrands here are Gaussians times
// polynomials: smooth and rapidly decaying.

#include <functional>

namespace subfp {

struct QuadOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    int max_depth = 28;
};

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    const QuadOptions& opt = {});

double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx,
                    double ay, double by, const QuadOptions& opt = {});

double integrate_3d(const std::function<double(double, double, double)>& f, double ax, double bx,
                    double ay, double by, double az, double bz, const QuadOptions& opt = {});

}  // namespace subfp
