#include "subfp/quadrature.hpp"

#include <cmath>
#include <queue>
#include <vector>

namespace subfp {

namespace {

// 15-point Kronrod extension of 7-point Gauss, positive abscissae.
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.0};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = h * kXgk[i];
        double fv = (i == 7) ? f(c) : f(c - dx) + f(c + dx);
        resk += kWgk[i] * fv;
        if (i % 2 == 1) resg += kWg[i / 2] * fv;  // odd indices are the Gauss nodes
    }
    resk *= h;
    resg *= h;
    double err = std::abs(resk - resg);
    return {a, b, resk, err};
}

}  // namespace

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    const QuadOptions& opt) {
    if (a == b) return 0.0;
    std::priority_queue<Panel> heap;
    Panel p0 = eval_panel(f, a, b);
    double total = p0.value, toterr = p0.err;
    heap.push(p0);
    int splits = 0;
    const int max_splits = 1 << 14;
    while (toterr > opt.abs_tol && toterr > opt.rel_tol * std::abs(total) &&
           splits < max_splits) {
        Panel worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid == worst.a || mid == worst.b) break;  // interval exhausted
        Panel l = eval_panel(f, worst.a, mid);
        Panel r = eval_panel(f, mid, worst.b);
        total += l.value + r.value - worst.value;
        toterr += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        ++splits;
    }
    return total;
}

double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx,
                    double ay, double by, const QuadOptions& opt) {
    QuadOptions inner = opt;
    inner.abs_tol = opt.abs_tol * 0.1;
    inner.rel_tol = opt.rel_tol * 0.1;
    auto outer = [&](double x) {
        return integrate_1d([&](double y) { return f(x, y); }, ay, by, inner);
    };
    return integrate_1d(outer, ax, bx, opt);
}

double integrate_3d(const std::function<double(double, double, double)>& f, double ax, double bx,
                    double ay, double by, double az, double bz, const QuadOptions& opt) {
    QuadOptions inner = opt;
    inner.abs_tol = opt.abs_tol * 0.1;
    inner.rel_tol = opt.rel_tol * 0.1;
    auto outer = [&](double x) {
        return integrate_2d([&](double y, double z) { return f(x, y, z); }, ay, by, az, bz,
                            inner);
    };
    return integrate_1d(outer, ax, bx, opt);
}

}  // namespace subfp
