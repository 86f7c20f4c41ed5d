#include "subfp/carnot.hpp"

#include <cmath>

namespace subfp {

GroupElement::GroupElement(double y0_, std::vector<double> yp_, std::vector<double> ypp_)
    : y0(y0_), yp(std::move(yp_)), ypp(std::move(ypp_)) {
    if (yp.size() != ypp.size() || yp.empty())
        throw std::invalid_argument("GroupElement: blocks must have equal length n >= 1");
}

GroupElement GroupElement::identity(int n) {
    return GroupElement(0.0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
}

double GroupElement::coord(int k) const {
    const int nn = n();
    if (k == 0) return y0;
    if (k <= nn) return yp[k - 1];
    if (k <= 2 * nn) return ypp[k - 1 - nn];
    throw std::out_of_range("GroupElement::coord");
}

double& GroupElement::coord(int k) {
    const int nn = n();
    if (k == 0) return y0;
    if (k <= nn) return yp[k - 1];
    if (k <= 2 * nn) return ypp[k - 1 - nn];
    throw std::out_of_range("GroupElement::coord");
}

GroupElement group_mul(const GroupElement& z, const GroupElement& y) {
    if (z.n() != y.n()) throw std::invalid_argument("group_mul: dimension mismatch");
    const int n = z.n();
    GroupElement out = GroupElement::identity(n);
    out.y0 = y.y0 + z.y0;
    for (int i = 0; i < n; ++i) {
        out.yp[i] = y.yp[i] + z.yp[i];
        out.ypp[i] = y.ypp[i] + z.ypp[i] + 0.5 * z.y0 * y.yp[i] - 0.5 * y.y0 * z.yp[i];
    }
    return out;
}

GroupElement group_inv(const GroupElement& y) {
    GroupElement out = y;
    out.y0 = -out.y0;
    for (int i = 0; i < y.n(); ++i) {
        out.yp[i] = -out.yp[i];
        out.ypp[i] = -out.ypp[i];
    }
    return out;
}

GroupElement dilate(double r, const GroupElement& y) {
    if (!(r > 0.0)) throw std::invalid_argument("dilate: r must be positive");
    GroupElement out = y;
    out.y0 *= r * r;
    for (int i = 0; i < y.n(); ++i) {
        out.yp[i] *= r;
        out.ypp[i] *= r * r * r;
    }
    return out;
}

MultiIndex::MultiIndex(int a0_, std::vector<int> ap_, std::vector<int> app_)
    : a0(a0_), ap(std::move(ap_)), app(std::move(app_)) {
    if (ap.size() != app.size()) throw std::invalid_argument("MultiIndex: block size mismatch");
}

MultiIndex MultiIndex::zero(int n) {
    return MultiIndex(0, std::vector<int>(n, 0), std::vector<int>(n, 0));
}

int MultiIndex::abs_spatial() const {
    int s = 0;
    for (int v : ap) s += v;
    for (int v : app) s += v;
    return s;
}

int MultiIndex::total_degree() const { return a0 + abs_spatial(); }

bool MultiIndex::spatial_nonneg() const {
    for (int v : ap)
        if (v < 0) return false;
    for (int v : app)
        if (v < 0) return false;
    return true;
}

int order_of(const MultiIndex& mi) {
    int sp = 0, spp = 0;
    for (int v : mi.ap) sp += v;
    for (int v : mi.app) spp += v;
    return 2 * mi.a0 + sp + 3 * spp;
}

double eval_monomial(const MultiIndex& gamma, const GroupElement& y) {
    double v = std::pow(y.y0, gamma.a0);
    for (int i = 0; i < gamma.n(); ++i) {
        for (int k = 0; k < gamma.ap[i]; ++k) v *= y.yp[i];
        for (int k = 0; k < gamma.app[i]; ++k) v *= y.ypp[i];
    }
    return v;
}

int frame_order(FrameId j, int n) {
    if (j.index == 0) return 2;
    if (j.index <= n) return 1;
    if (j.index <= 2 * n) return 3;
    throw std::out_of_range("frame_order");
}

double frame_apply(FrameId j, const ScalarField& f, const GroupElement& y) {
    const int n = y.n();
    if (j.index == 0) {
        // Y0 = d0 - 1/2 sum_j y'_j d_{j+n}
        double v = f.partial(y, 0);
        for (int i = 1; i <= n; ++i) v -= 0.5 * y.yp[i - 1] * f.partial(y, i + n);
        return v;
    }
    if (j.index <= n) {
        // Y_j = d_j + 1/2 y0 d_{j+n}
        return f.partial(y, j.index) + 0.5 * y.y0 * f.partial(y, j.index + n);
    }
    if (j.index <= 2 * n) return f.partial(y, j.index);
    throw std::out_of_range("frame_apply");
}

}  // namespace subfp
