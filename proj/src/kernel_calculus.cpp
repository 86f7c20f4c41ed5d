#include "subfp/kernel_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "subfp/quadrature.hpp"

namespace subfp {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Canonical term key: (eps_power, gamma).
std::vector<int> term_key(const KernelTerm& t) {
    std::vector<int> k;
    k.push_back(t.eps_power);
    k.push_back(t.gamma.a0);
    k.insert(k.end(), t.gamma.ap.begin(), t.gamma.ap.end());
    k.insert(k.end(), t.gamma.app.begin(), t.gamma.app.end());
    return k;
}

// Constant-coefficient monomial terms c y^gamma K0; partial derivative rules.
struct MonoTerm {
    double c;
    MultiIndex gamma;
};

std::vector<MonoTerm> partial_mono(const std::vector<MonoTerm>& in, int coord, int n) {
    std::vector<MonoTerm> out;
    for (const auto& t : in) {
        if (coord == 0) {
            // gamma0 power rule
            if (t.gamma.a0 != 0) {
                MultiIndex g = t.gamma;
                g.a0 -= 1;
                out.push_back({t.c * t.gamma.a0, g});
            }
            // d0 K0 = (|y'|^2/4y0^2 - 2n/y0·(1/2+3/2 per dim) + 9|y''|^2/y0^4) K0
            for (int i = 0; i < n; ++i) {
                MultiIndex g = t.gamma;
                g.a0 -= 2;
                g.ap[i] += 2;
                out.push_back({t.c * 0.25, g});
            }
            {
                MultiIndex g = t.gamma;
                g.a0 -= 1;
                out.push_back({-2.0 * n * t.c, g});
            }
            for (int i = 0; i < n; ++i) {
                MultiIndex g = t.gamma;
                g.a0 -= 4;
                g.app[i] += 2;
                out.push_back({9.0 * t.c, g});
            }
        } else if (coord <= n) {
            const int i = coord - 1;
            if (t.gamma.ap[i] > 0) {
                MultiIndex g = t.gamma;
                g.ap[i] -= 1;
                out.push_back({t.c * t.gamma.ap[i], g});
            }
            MultiIndex g = t.gamma;
            g.a0 -= 1;
            g.ap[i] += 1;
            out.push_back({-0.5 * t.c, g});
        } else {
            const int i = coord - 1 - n;
            if (t.gamma.app[i] > 0) {
                MultiIndex g = t.gamma;
                g.app[i] -= 1;
                out.push_back({t.c * t.gamma.app[i], g});
            }
            MultiIndex g = t.gamma;
            g.a0 -= 3;
            g.app[i] += 1;
            out.push_back({-6.0 * t.c, g});
        }
    }
    return out;
}

// d^mu K0 = sum c_sigma K_sigma for spatial mu.
std::vector<MonoTerm> expand_partial_multi(const MultiIndex& mu) {
    const int n = mu.n();
    std::vector<MonoTerm> terms = {{1.0, MultiIndex::zero(n)}};
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < mu.ap[i]; ++k) terms = partial_mono(terms, i + 1, n);
        for (int k = 0; k < mu.app[i]; ++k) terms = partial_mono(terms, i + 1 + n, n);
    }
    return terms;
}

int binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return static_cast<int>(r);
}

long falling_factorial(int a, int m) {
    long r = 1;
    for (int i = 0; i < m; ++i) r *= (a - i);
    return r;
}
}  // namespace

double eval_K0(const GroupElement& y, double eps) {
    if (!(eps > 0.0) || eps > 1.0 + 1e-12)
        throw std::invalid_argument("eval_K0: eps must lie in (0, 1]");
    if (y.y0 <= 0.0) return 0.0;
    const int n = y.n();
    const double t1 = y.y0;
    const double t2 = y.y0 * y.y0 * y.y0 / 12.0;
    double q1 = 0.0, q2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = y.yp[i] / eps;
        const double v = y.ypp[i] / eps;
        q1 += u * u;
        q2 += v * v;
    }
    const double g1 = std::pow(4.0 * kPi * t1, -0.5 * n) * std::exp(-q1 / (4.0 * t1));
    const double g2 = std::pow(4.0 * kPi * t2, -0.5 * n) * std::exp(-q2 / (4.0 * t2));
    return std::pow(eps, -2.0 * n) * g1 * g2;
}

KernelSum::KernelSum(int n, double eps) : n_(n), eps_(eps) {
    if (n < 1) throw std::invalid_argument("KernelSum: n >= 1");
    if (!(eps > 0.0) || eps > 1.0 + 1e-12)
        throw std::invalid_argument("KernelSum: eps must lie in (0, 1]");
}

KernelSum KernelSum::k0(int n, double eps) {
    KernelSum K(n, eps);
    K.add_term({0, CoefficientFn::constant(1.0), MultiIndex::zero(n)});
    return K;
}

void KernelSum::add_term(KernelTerm t) {
    if (t.gamma.n() != n_) throw std::invalid_argument("KernelSum: gamma dimension mismatch");
    if (!t.gamma.spatial_nonneg())
        throw std::invalid_argument("KernelSum: gamma spatial part must be >= 0");
    if (t.eps_power < 0) throw std::invalid_argument("KernelSum: eps_power must be >= 0");
    terms_.push_back(std::move(t));
}

void KernelSum::add(const KernelSum& o) {
    if (o.n_ != n_ || std::abs(o.eps_ - eps_) > 0.0)
        throw std::invalid_argument("KernelSum::add: incompatible sums");
    for (const auto& t : o.terms_) terms_.push_back(t);
}

KernelSum KernelSum::scaled(double c) const {
    KernelSum out(n_, eps_);
    for (const auto& t : terms_) out.terms_.push_back({t.eps_power, t.coeff.scaled(c), t.gamma});
    return out;
}

KernelSum KernelSum::with_eps(double eps) const {
    KernelSum out(n_, eps);
    out.terms_ = terms_;
    return out;
}

int KernelSum::min_order() const {
    if (terms_.empty()) throw std::runtime_error("KernelSum::min_order: empty sum");
    int m = order_of(terms_[0].gamma);
    for (const auto& t : terms_) m = std::min(m, order_of(t.gamma));
    return m;
}

double KernelSum::eval(const GroupElement& y) const {
    if (y.n() != n_) throw std::invalid_argument("KernelSum::eval: dimension mismatch");
    if (y.y0 <= 0.0) return 0.0;
    const double base = eval_K0(y, eps_);
    double acc = 0.0;
    for (const auto& t : terms_) {
        double mono = std::pow(y.y0, t.gamma.a0);
        for (int i = 0; i < n_; ++i) {
            for (int k = 0; k < t.gamma.ap[i]; ++k) mono *= y.yp[i] / eps_;
            for (int k = 0; k < t.gamma.app[i]; ++k) mono *= y.ypp[i] / eps_;
        }
        acc += std::pow(eps_, t.eps_power) * t.coeff(y.y0) * mono;
    }
    return acc * base;
}

KernelSum KernelSum::canonicalized(double drop_tol) const {
    std::map<std::vector<int>, CoefficientFn> acc;
    for (const auto& t : terms_) {
        auto key = term_key(t);
        auto it = acc.find(key);
        if (it == acc.end())
            acc.emplace(key, t.coeff);
        else
            it->second = it->second + t.coeff;
    }
    double scale = 0.0;
    std::map<std::vector<int>, double> sups;
    for (const auto& [k, c] : acc) {
        double s = c.sup_norm();
        sups[k] = s;
        scale = std::max(scale, s);
    }
    KernelSum out(n_, eps_);
    for (auto& [k, c] : acc) {
        if (scale > 0.0 && sups[k] <= drop_tol * scale) continue;
        if (sups[k] == 0.0) continue;
        KernelTerm t;
        t.eps_power = k[0];
        t.gamma.a0 = k[1];
        t.gamma.ap.assign(k.begin() + 2, k.begin() + 2 + n_);
        t.gamma.app.assign(k.begin() + 2 + n_, k.end());
        t.coeff = c;
        out.terms_.push_back(std::move(t));
    }
    return out;
}

KernelSum KernelSum::flipped_ypp() const {
    KernelSum out(n_, eps_);
    for (const auto& t : terms_) {
        int spp = 0;
        for (int v : t.gamma.app) spp += v;
        out.terms_.push_back({t.eps_power, (spp % 2) ? t.coeff.scaled(-1.0) : t.coeff, t.gamma});
    }
    return out;
}

KernelSum apply_partial(const KernelSum& K, int coord) {
    const int n = K.n();
    KernelSum out(n, K.eps());
    for (const auto& t : K.terms()) {
        // coefficient derivative enters only through d/dy0
        if (coord == 0) {
            CoefficientFn dc = t.coeff.derivative();
            if (!dc.is_zero()) out.add_term({t.eps_power, dc, t.gamma});
        }
        std::vector<MonoTerm> expanded = partial_mono({{1.0, t.gamma}}, coord, n);
        for (const auto& m : expanded)
            out.add_term({t.eps_power, t.coeff.scaled(m.c), m.gamma});
    }
    return out;
}

KernelSum apply_frame(const KernelSum& K, FrameId j) {
    const int n = K.n();
    if (j.index == 0) {
        KernelSum out = apply_partial(K, 0);
        for (int i = 1; i <= n; ++i) {
            MultiIndex e = MultiIndex::zero(n);
            e.ap[i - 1] = 1;
            // -1/2 y'_i d_{y''_i}; in the scaled calculus the monomial and the
            // derivative eps factors cancel.
            KernelSum piece = apply_partial(K, i + n);
            for (const auto& t : piece.terms()) {
                MultiIndex g = t.gamma;
                g.ap[i - 1] += 1;
                out.add_term({t.eps_power, t.coeff.scaled(-0.5), g});
            }
        }
        return out;
    }
    if (j.index <= n) {
        KernelSum out = apply_partial(K, j.index);
        KernelSum piece = apply_partial(K, j.index + n);
        for (const auto& t : piece.terms()) {
            MultiIndex g = t.gamma;
            g.a0 += 1;
            out.add_term({t.eps_power, t.coeff.scaled(0.5), g});
        }
        return out;
    }
    if (j.index <= 2 * n) return apply_partial(K, j.index);
    throw std::out_of_range("apply_frame");
}

KernelSum mul_monomial(const KernelSum& K, const MultiIndex& alpha) {
    if (!alpha.spatial_nonneg() || alpha.a0 < 0)
        throw std::invalid_argument("mul_monomial: alpha must be nonnegative");
    KernelSum out(K.n(), K.eps());
    const int extra = alpha.abs_spatial();
    for (const auto& t : K.terms()) {
        MultiIndex g = t.gamma;
        g.a0 += alpha.a0;
        for (int i = 0; i < K.n(); ++i) {
            g.ap[i] += alpha.ap[i];
            g.app[i] += alpha.app[i];
        }
        out.add_term({t.eps_power + extra, t.coeff, g});
    }
    return out;
}

std::vector<RewriteTerm> rewrite_monomial(const MultiIndex& gamma) {
    if (!gamma.spatial_nonneg())
        throw std::invalid_argument("rewrite_monomial: gamma', gamma'' must be >= 0");
    const int n = gamma.n();
    struct W {
        double c;
        int a0;
        std::vector<int> sp, spp;  // remaining monomial
        std::vector<int> tp, tpp;  // accumulated Y factors
    };
    std::vector<W> work = {
        {1.0, gamma.a0, gamma.ap, gamma.app, std::vector<int>(n, 0), std::vector<int>(n, 0)}};
    std::vector<W> done;
    while (!work.empty()) {
        W t = work.back();
        work.pop_back();
        int i = -1;
        bool dpp = false;
        for (int k = 0; k < n; ++k)
            if (t.spp[k] > 0) {
                i = k;
                dpp = true;
                break;
            }
        if (i < 0)
            for (int k = 0; k < n; ++k)
                if (t.sp[k] > 0) {
                    i = k;
                    break;
                }
        if (i < 0) {
            done.push_back(t);
            continue;
        }
        if (dpp) {
            // y''_i Y^theta K0 = Y^theta(-1/6 y0^3 Y''_i K0)
            //                   - theta'_i (1/2 y0) Y^{theta-e'_i} K0
            //                   - theta''_i Y^{theta-e''_i} K0
            W t1 = t;
            t1.spp[i] -= 1;
            t1.c *= -1.0 / 6.0;
            t1.a0 += 3;
            t1.tpp[i] += 1;
            work.push_back(t1);
            if (t.tp[i] > 0) {
                W t2 = t;
                t2.spp[i] -= 1;
                t2.c *= -0.5 * t.tp[i];
                t2.a0 += 1;
                t2.tp[i] -= 1;
                work.push_back(t2);
            }
            if (t.tpp[i] > 0) {
                W t3 = t;
                t3.spp[i] -= 1;
                t3.c *= -1.0 * t.tpp[i];
                t3.tpp[i] -= 1;
                work.push_back(t3);
            }
        } else {
            // y'_i Y^theta K0 = Y^theta((y0^2 Y''_i - 2 y0 Y'_i) K0)
            //                   - theta'_i Y^{theta-e'_i} K0
            W t1 = t;
            t1.sp[i] -= 1;
            t1.a0 += 2;
            t1.tpp[i] += 1;
            work.push_back(t1);
            W t2 = t;
            t2.sp[i] -= 1;
            t2.c *= -2.0;
            t2.a0 += 1;
            t2.tp[i] += 1;
            work.push_back(t2);
            if (t.tp[i] > 0) {
                W t3 = t;
                t3.sp[i] -= 1;
                t3.c *= -1.0 * t.tp[i];
                t3.tp[i] -= 1;
                work.push_back(t3);
            }
        }
    }
    // merge by (a0, theta)
    std::map<std::vector<int>, double> acc;
    for (const auto& t : done) {
        std::vector<int> key;
        key.push_back(t.a0);
        key.insert(key.end(), t.tp.begin(), t.tp.end());
        key.insert(key.end(), t.tpp.begin(), t.tpp.end());
        acc[key] += t.c;
    }
    std::vector<RewriteTerm> out;
    for (const auto& [key, c] : acc) {
        if (c == 0.0) continue;
        RewriteTerm rt;
        rt.j = key[0];
        rt.theta = MultiIndex::zero(n);
        rt.theta.ap.assign(key.begin() + 1, key.begin() + 1 + n);
        rt.theta.app.assign(key.begin() + 1 + n, key.end());
        rt.c = c;
        out.push_back(std::move(rt));
    }
    return out;
}

KernelSum convolve_with_K0(const KernelSum& K) {
    const int n = K.n();
    KernelSum out(n, K.eps());
    struct State {
        double q;
        int a, b;  // powers of y0 and z0 pulled out by the substitution
        MultiIndex mu;
    };
    for (const auto& term : K.terms()) {
        const int gord = order_of(term.gamma);
        if (gord < -1)
            throw std::invalid_argument("convolve_with_K0: term order below -1");
        for (const auto& rt : rewrite_monomial(term.gamma)) {
            if (rt.j < 0)
                throw std::runtime_error("convolve_with_K0: negative y0 power in rewrite");
            std::vector<State> states = {{rt.c, 0, 0, MultiIndex::zero(n)}};
            // integrate by parts: Y'_i -> d_{y'_i} - (y0/2 - z0) d_{y''_i},
            //                     Y''_i -> d_{y''_i}
            for (int i = 0; i < n; ++i) {
                for (int k = 0; k < rt.theta.ap[i]; ++k) {
                    std::vector<State> next;
                    next.reserve(3 * states.size());
                    for (const auto& s : states) {
                        State s1 = s;
                        s1.mu.ap[i] += 1;
                        next.push_back(s1);
                        State s2 = s;
                        s2.q *= -0.5;
                        s2.a += 1;
                        s2.mu.app[i] += 1;
                        next.push_back(s2);
                        State s3 = s;
                        s3.b += 1;
                        s3.mu.app[i] += 1;
                        next.push_back(s3);
                    }
                    states = std::move(next);
                }
                for (int k = 0; k < rt.theta.app[i]; ++k) {
                    for (auto& s : states) s.mu.app[i] += 1;
                }
            }
            for (const auto& s : states) {
                const int m = rt.j + s.b;
                CoefficientFn h = term.coeff.weighted_average(m);
                const int ledger = s.a + m + 1;
                for (const auto& mono : expand_partial_multi(s.mu)) {
                    MultiIndex g = mono.gamma;
                    g.a0 += ledger;
                    out.add_term({term.eps_power, h.scaled(s.q * mono.c), g});
                }
            }
        }
    }
    return out.canonicalized(1e-14);
}

PolyDiffOp::PolyDiffOp(int n, int op_order) : n_(n), op_order_(op_order) {
    if (n < 1) throw std::invalid_argument("PolyDiffOp: n >= 1");
}

void PolyDiffOp::add_term(PolyDiffTerm t) {
    if (t.monomial.n() != n_ || t.derivative.n() != n_)
        throw std::invalid_argument("PolyDiffOp: dimension mismatch");
    if (t.derivative.a0 != 0)
        throw std::invalid_argument("PolyDiffOp: derivative.a0 must be 0");
    if (t.derivative.abs_spatial() > 2)
        throw std::invalid_argument("PolyDiffOp: |derivative| must be <= 2");
    if (!t.derivative.spatial_nonneg() || !t.monomial.spatial_nonneg() || t.monomial.a0 < 0)
        throw std::invalid_argument("PolyDiffOp: monomial must be >= 0");
    if (t.eps_power < 0) throw std::invalid_argument("PolyDiffOp: eps_power must be >= 0");
    const int ord = order_of(t.derivative) - order_of(t.monomial);
    if (ord != op_order_)
        throw std::invalid_argument("PolyDiffOp: term order mismatch (malformed P_j)");
    terms_.push_back(std::move(t));
}

KernelSum apply_op(const PolyDiffOp& P, const KernelSum& K) {
    if (P.n() != K.n()) throw std::invalid_argument("apply_op: dimension mismatch");
    const int n = K.n();
    KernelSum out(n, K.eps());
    for (const auto& pt : P.terms()) {
        KernelSum cur(n, K.eps());
        for (const auto& kt : K.terms()) cur.add_term(kt);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < pt.derivative.ap[i]; ++k) cur = apply_partial(cur, i + 1);
            for (int k = 0; k < pt.derivative.app[i]; ++k) cur = apply_partial(cur, i + 1 + n);
        }
        const int extra = pt.eps_power + pt.monomial.abs_spatial();
        for (const auto& t : cur.terms()) {
            MultiIndex g = t.gamma;
            g.a0 += pt.monomial.a0;
            for (int i = 0; i < n; ++i) {
                g.ap[i] += pt.monomial.ap[i];
                g.app[i] += pt.monomial.app[i];
            }
            out.add_term({t.eps_power + extra, t.coeff * pt.coeff, g});
        }
    }
    return out.canonicalized(1e-15);
}

PolyDiffOp transpose(const PolyDiffOp& P) {
    const int n = P.n();
    PolyDiffOp out(n, P.op_order());
    for (const auto& t : P.terms()) {
        const int bp_total = t.derivative.abs_spatial();
        // enumerate mu <= min(alpha, beta) componentwise (spatial)
        std::vector<std::pair<MultiIndex, long>> mus = {{MultiIndex::zero(n), 1}};
        for (int i = 0; i < 2 * n; ++i) {
            const bool pp = i >= n;
            const int ai = pp ? t.monomial.app[i - n] : t.monomial.ap[i];
            const int bi = pp ? t.derivative.app[i - n] : t.derivative.ap[i];
            const int cap = std::min(ai, bi);
            std::vector<std::pair<MultiIndex, long>> next;
            for (const auto& [mu, w] : mus)
                for (int m = 0; m <= cap; ++m) {
                    MultiIndex mu2 = mu;
                    if (pp)
                        mu2.app[i - n] = m;
                    else
                        mu2.ap[i] = m;
                    next.push_back({mu2, w * binom(bi, m) * falling_factorial(ai, m)});
                }
            mus = std::move(next);
        }
        for (const auto& [mu, w] : mus) {
            PolyDiffTerm nt;
            nt.eps_power = t.eps_power + mu.abs_spatial();
            const double sign = (bp_total % 2) ? -1.0 : 1.0;
            nt.coeff = t.coeff.scaled(sign * static_cast<double>(w));
            nt.monomial = t.monomial;
            nt.derivative = t.derivative;
            for (int i = 0; i < n; ++i) {
                nt.monomial.ap[i] -= mu.ap[i];
                nt.monomial.app[i] -= mu.app[i];
                nt.derivative.ap[i] -= mu.ap[i];
                nt.derivative.app[i] -= mu.app[i];
            }
            out.add_term(std::move(nt));
        }
    }
    return out;
}

PolyDiffOp flip_ypp(const PolyDiffOp& P) {
    const int n = P.n();
    PolyDiffOp out(n, P.op_order());
    for (const auto& t : P.terms()) {
        int spp = 0;
        for (int v : t.monomial.app) spp += v;
        for (int v : t.derivative.app) spp += v;
        PolyDiffTerm nt = t;
        if (spp % 2) nt.coeff = nt.coeff.scaled(-1.0);
        out.add_term(std::move(nt));
    }
    return out;
}

ParametrixResult build_parametrix(const std::vector<PolyDiffOp>& P, int N, double eps,
                                  ParametrixSide side) {
    if (P.empty()) throw std::invalid_argument("build_parametrix: empty operator list");
    const int n = P[0].n();
    const int J = static_cast<int>(P.size());
    std::vector<PolyDiffOp> Pu;
    Pu.reserve(J);
    for (int j = 1; j <= J; ++j) {
        if (P[j - 1].op_order() != 2 - j)
            throw std::invalid_argument("build_parametrix: P_j must have order 2-j");
        Pu.push_back(side == ParametrixSide::Left ? flip_ypp(transpose(P[j - 1])) : P[j - 1]);
    }

    std::vector<KernelSum> layers;
    layers.push_back(KernelSum::k0(n, eps));
    for (int m = 1; m <= N; ++m) {
        KernelSum S(n, eps);
        for (int j = 1; j <= std::min(m, J); ++j) {
            if (Pu[j - 1].empty()) continue;
            S.add(apply_op(Pu[j - 1], layers[m - j]));
        }
        S = S.canonicalized(1e-14);
        if (S.empty()) {
            layers.push_back(S);
            continue;
        }
        KernelSum Km = convolve_with_K0(S).scaled(-1.0).canonicalized(1e-14);
        for (const auto& t : Km.terms())
            if (order_of(t.gamma) != m)
                throw std::runtime_error("build_parametrix: K_m term with wrong order");
        layers.push_back(std::move(Km));
    }

    KernelSum R(n, eps);
    for (int j = 1; j <= J; ++j) {
        if (Pu[j - 1].empty()) continue;
        for (int m = 0; m <= N; ++m) {
            if (j + m <= N) continue;
            if (layers[m].empty()) continue;
            R.add(apply_op(Pu[j - 1], layers[m]));
        }
    }
    R = R.canonicalized(1e-14);
    for (const auto& t : R.terms())
        if (order_of(t.gamma) < N - 1)
            throw std::runtime_error("build_parametrix: residual term below order N-1");

    ParametrixResult res{KernelSum(n, eps), KernelSum(n, eps), {}};
    if (side == ParametrixSide::Left) {
        for (auto& L : layers) L = L.flipped_ypp();
        R = R.flipped_ypp();
    }
    for (const auto& L : layers) res.K.add(L);
    res.K = res.K.canonicalized(0.0);
    res.R = std::move(R);
    res.layers = std::move(layers);
    return res;
}

double gaussian_abs_moment(int k, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("gaussian_abs_moment: t must be positive");
    if (k < 0) throw std::invalid_argument("gaussian_abs_moment: k must be >= 0");
    return std::pow(4.0 * t, 0.5 * k) * std::tgamma(0.5 * (k + 1)) / std::sqrt(kPi);
}

double kernel_L1_slice_norm(const KernelSum& K, double y0, L1Mode mode) {
    if (!(y0 > 0.0)) throw std::invalid_argument("kernel_L1_slice_norm: y0 must be positive");
    const int n = K.n();
    if (mode == L1Mode::TriangleClosedForm || K.size() <= 1) {
        double acc = 0.0;
        for (const auto& t : K.terms()) {
            double v = std::abs(t.coeff(y0)) * std::pow(K.eps(), t.eps_power) *
                       std::pow(y0, t.gamma.a0);
            for (int i = 0; i < n; ++i) {
                if (t.gamma.ap[i] > 0) v *= gaussian_abs_moment(t.gamma.ap[i], y0);
                if (t.gamma.app[i] > 0)
                    v *= gaussian_abs_moment(t.gamma.app[i], y0 * y0 * y0 / 12.0);
            }
            acc += v;
        }
        return acc;
    }
    if (n != 1)
        throw std::invalid_argument("kernel_L1_slice_norm: quadrature mode implemented for n=1");
    int maxdeg = 0;
    for (const auto& t : K.terms())
        maxdeg = std::max(maxdeg, t.gamma.abs_spatial());
    const double sp = K.eps() * std::sqrt(2.0 * y0);
    const double spp = K.eps() * std::sqrt(y0 * y0 * y0 / 6.0);
    const double w = 12.0 + 2.0 * maxdeg;
    const double ub = kernel_L1_slice_norm(K, y0, L1Mode::TriangleClosedForm);
    QuadOptions opt;
    opt.abs_tol = std::max(1e-300, 1e-9 * ub);
    opt.rel_tol = 1e-7;
    auto f = [&](double a, double b) {
        GroupElement y(y0, {a}, {b});
        return std::abs(K.eval(y));
    };
    return integrate_2d(f, -w * sp, w * sp, -w * spp, w * spp, opt);
}

std::string kernel_sum_to_json(const KernelSum& K) {
    nlohmann::json j;
    j["n"] = K.n();
    j["eps"] = K.eps();
    nlohmann::json terms = nlohmann::json::array();
    KernelSum C = K.canonicalized(0.0);
    for (const auto& t : C.terms()) {
        nlohmann::json jt;
        jt["j"] = t.eps_power;
        jt["gamma"] = {{"a0", t.gamma.a0}, {"ap", t.gamma.ap}, {"app", t.gamma.app}};
        jt["coeff"] = {
            {"kind", t.coeff.kind() == CoefficientFn::Kind::Polynomial ? "poly" : "cheb"},
            {"t_max", t.coeff.t_max()},
            {"data", t.coeff.data()}};
        terms.push_back(jt);
    }
    j["terms"] = terms;
    return j.dump(1);
}

KernelSum kernel_sum_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    KernelSum K(j.at("n").get<int>(), j.at("eps").get<double>());
    for (const auto& jt : j.at("terms")) {
        KernelTerm t;
        t.eps_power = jt.at("j").get<int>();
        t.gamma.a0 = jt.at("gamma").at("a0").get<int>();
        t.gamma.ap = jt.at("gamma").at("ap").get<std::vector<int>>();
        t.gamma.app = jt.at("gamma").at("app").get<std::vector<int>>();
        const auto& jc = jt.at("coeff");
        const double tm = jc.at("t_max").get<double>();
        auto data = jc.at("data").get<std::vector<double>>();
        t.coeff = jc.at("kind").get<std::string>() == "poly"
                      ? CoefficientFn::polynomial(data, tm)
                      : CoefficientFn::chebyshev(data, tm);
        K.add_term(std::move(t));
    }
    return K;
}

}  // namespace subfp
