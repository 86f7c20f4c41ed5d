#pragma once

// Step-2 nilpotent group structure on R^{2n+1}: product, dilations,
// left-invariant frame, and non-isotropic multi-index bookkeeping.

#include <functional>
#include <stdexcept>
#include <vector>

namespace subfp {

// A point y = (y0, y', y'') with y', y'' in R^n.
struct GroupElement {
    double y0 = 0.0;
    std::vector<double> yp;   // y'  (momentum-like block)
    std::vector<double> ypp;  // y'' (position-like block)

    GroupElement() = default;
    GroupElement(double y0_, std::vector<double> yp_, std::vector<double> ypp_);

    int n() const { return static_cast<int>(yp.size()); }
    static GroupElement identity(int n);

    // Coordinate access by flat index: 0 -> y0, 1..n -> y'_i, n+1..2n -> y''_i.
    double coord(int k) const;
    double& coord(int k);
};

GroupElement group_mul(const GroupElement& z, const GroupElement& y);
GroupElement group_inv(const GroupElement& y);
GroupElement dilate(double r, const GroupElement& y);

// Multi-index (a0, a', a'') with a0 in Z (negative allowed), a', a'' >= 0.
struct MultiIndex {
    int a0 = 0;
    std::vector<int> ap;
    std::vector<int> app;

    MultiIndex() = default;
    MultiIndex(int a0_, std::vector<int> ap_, std::vector<int> app_);

    int n() const { return static_cast<int>(ap.size()); }
    static MultiIndex zero(int n);

    int abs_spatial() const;    // |a'| + |a''|
    int total_degree() const;   // a0 + |a'| + |a''| (a0 may be negative)
    bool spatial_nonneg() const;

    bool operator==(const MultiIndex& o) const {
        return a0 == o.a0 && ap == o.ap && app == o.app;
    }
};

// ord = 2 a0 + |a'| + 3 |a''|
int order_of(const MultiIndex& mi);

// y^gamma; requires y0 != 0 when gamma.a0 < 0.
double eval_monomial(const MultiIndex& gamma, const GroupElement& y);

// Frame index: 0 -> Y0 (order 2), 1..n -> Y'_j (order 1), n+1..2n -> Y''_j (order 3).
struct FrameId {
    int index = 0;
};

int frame_order(FrameId j, int n);

// Caller supplies the field and its exact partials; finite differences stay in tests.
struct ScalarField {
    std::function<double(const GroupElement&)> value;
    std::function<double(const GroupElement&, int)> partial;  // flat coord index
};

double frame_apply(FrameId j, const ScalarField& f, const GroupElement& y);

}  // namespace subfp
