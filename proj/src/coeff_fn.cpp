#include "subfp/coeff_fn.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace subfp {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Legendre polynomial value and derivative at x.
std::pair<double, double> legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}
}  // namespace

const QuadRule& gauss_legendre(int order) {
    static std::map<int, QuadRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    QuadRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        // Newton from the Chebyshev-like initial guess, on [-1, 1].
        double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
        for (int it2 = 0; it2 < 100; ++it2) {
            auto [p, dp] = legendre(order, x);
            double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        auto [p, dp] = legendre(order, x);
        (void)p;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map to [0, 1]
        rule.nodes[i] = 0.5 * (x + 1.0);
        rule.weights[i] = 0.5 * w;
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

std::vector<double> lobatto_nodes(int degree, double t_max) {
    std::vector<double> xs(degree + 1);
    for (int j = 0; j <= degree; ++j)
        xs[j] = 0.5 * t_max * (1.0 - std::cos(kPi * j / degree));
    return xs;
}

std::vector<double> chebyshev_transform(const std::vector<double>& values) {
    const int N = static_cast<int>(values.size()) - 1;
    if (N < 1) return values;
    std::vector<double> c(N + 1, 0.0);
    // values[j] is at x_j = -cos(pi j / N) in the u variable (increasing y0),
    // i.e. u_j = -cos(pi j / N); T_k(u_j) = cos(k pi (N - j) / N) = (-1)^k cos(k pi j / N).
    for (int k = 0; k <= N; ++k) {
        double s = 0.5 * (values[0] * std::cos(0.0) * ((k % 2) ? -1.0 : 1.0));
        for (int j = 1; j < N; ++j)
            s += values[j] * ((k % 2) ? -1.0 : 1.0) * std::cos(kPi * k * j / N);
        s += 0.5 * values[N] * ((k % 2) ? -1.0 : 1.0) * std::cos(kPi * k);
        c[k] = 2.0 * s / N;
    }
    c[0] *= 0.5;
    c[N] *= 0.5;
    return c;
}

CoefficientFn::CoefficientFn() : kind_(Kind::Polynomial), t_max_(1.0), data_{0.0} {}

CoefficientFn::CoefficientFn(Kind k, double t_max, std::vector<double> data)
    : kind_(k), t_max_(t_max), data_(std::move(data)) {
    if (data_.empty()) data_.push_back(0.0);
    if (!(t_max_ > 0.0)) throw std::invalid_argument("CoefficientFn: t_max must be positive");
}

CoefficientFn CoefficientFn::polynomial(std::vector<double> monomial_coeffs, double t_max) {
    return CoefficientFn(Kind::Polynomial, t_max, std::move(monomial_coeffs));
}

CoefficientFn CoefficientFn::constant(double c, double t_max) {
    return CoefficientFn(Kind::Polynomial, t_max, {c});
}

CoefficientFn CoefficientFn::chebyshev(std::vector<double> cheb_coeffs, double t_max) {
    CoefficientFn f(Kind::Chebyshev, t_max, std::move(cheb_coeffs));
    f.trim();
    return f;
}

CoefficientFn CoefficientFn::fit(const std::function<double(double)>& f, double t_max,
                                 double tol, int max_degree) {
    for (int deg = 16; deg <= max_degree; deg *= 2) {
        auto xs = lobatto_nodes(deg, t_max);
        std::vector<double> vals(deg + 1);
        for (int j = 0; j <= deg; ++j) vals[j] = f(xs[j]);
        auto c = chebyshev_transform(vals);
        double scale = 0.0;
        for (double v : c) scale = std::max(scale, std::abs(v));
        if (scale == 0.0) return CoefficientFn::constant(0.0, t_max);
        double tail = 0.0;
        for (int k = deg - 3; k <= deg; ++k) tail = std::max(tail, std::abs(c[k]));
        if (tail <= tol * std::max(1.0, scale)) {
            CoefficientFn out(Kind::Chebyshev, t_max, std::move(c));
            out.trim();
            return out;
        }
    }
    throw std::runtime_error("CoefficientFn::fit: tolerance not met at max_degree");
}

double CoefficientFn::operator()(double y0) const {
    if (kind_ == Kind::Polynomial) {
        double v = 0.0;
        for (int k = degree(); k >= 0; --k) v = v * y0 + data_[k];
        return v;
    }
    // Clenshaw on u = 2 y0 / t_max - 1.
    const double u = 2.0 * y0 / t_max_ - 1.0;
    double b1 = 0.0, b2 = 0.0;
    for (int k = degree(); k >= 1; --k) {
        double b0 = 2.0 * u * b1 - b2 + data_[k];
        b2 = b1;
        b1 = b0;
    }
    return u * b1 - b2 + data_[0];
}

CoefficientFn CoefficientFn::to_chebyshev(int deg) const {
    auto xs = lobatto_nodes(deg, t_max_);
    std::vector<double> vals(deg + 1);
    for (int j = 0; j <= deg; ++j) vals[j] = (*this)(xs[j]);
    return CoefficientFn(Kind::Chebyshev, t_max_, chebyshev_transform(vals));
}

void CoefficientFn::trim() {
    double scale = 0.0;
    for (double v : data_) scale = std::max(scale, std::abs(v));
    const double cut = 1e-14 * std::max(1.0, scale);
    int last = static_cast<int>(data_.size()) - 1;
    while (last > 0 && std::abs(data_[last]) <= cut) --last;
    data_.resize(last + 1);
}

namespace {
// Polynomials are domain-free; only two Chebyshev representatives must agree.
double resolve_tmax(const CoefficientFn& a, const CoefficientFn& b) {
    const bool ap = a.kind() == CoefficientFn::Kind::Polynomial;
    const bool bp = b.kind() == CoefficientFn::Kind::Polynomial;
    if (ap && bp) return std::max(a.t_max(), b.t_max());
    if (ap) return b.t_max();
    if (bp) return a.t_max();
    if (std::abs(a.t_max() - b.t_max()) > 1e-12 * std::max(a.t_max(), b.t_max()))
        throw std::invalid_argument("CoefficientFn: Chebyshev domain mismatch");
    return a.t_max();
}
}  // namespace

CoefficientFn CoefficientFn::operator+(const CoefficientFn& o) const {
    const double tm = resolve_tmax(*this, o);
    if (kind_ == Kind::Polynomial && o.kind_ == Kind::Polynomial) {
        std::vector<double> c(std::max(data_.size(), o.data_.size()), 0.0);
        for (size_t k = 0; k < data_.size(); ++k) c[k] += data_[k];
        for (size_t k = 0; k < o.data_.size(); ++k) c[k] += o.data_[k];
        return CoefficientFn(Kind::Polynomial, tm, std::move(c));
    }
    const int deg = std::max(std::max(degree(), o.degree()), 1);
    auto xs = lobatto_nodes(deg, tm);
    std::vector<double> vals(deg + 1);
    for (int j = 0; j <= deg; ++j) vals[j] = (*this)(xs[j]) + o(xs[j]);
    CoefficientFn out(Kind::Chebyshev, tm, chebyshev_transform(vals));
    out.trim();
    return out;
}

CoefficientFn CoefficientFn::operator*(const CoefficientFn& o) const {
    const double tm = resolve_tmax(*this, o);
    if (kind_ == Kind::Polynomial && o.kind_ == Kind::Polynomial) {
        std::vector<double> c(data_.size() + o.data_.size() - 1, 0.0);
        for (size_t i = 0; i < data_.size(); ++i)
            for (size_t j = 0; j < o.data_.size(); ++j) c[i + j] += data_[i] * o.data_[j];
        return CoefficientFn(Kind::Polynomial, tm, std::move(c));
    }
    const int deg = std::max(degree() + o.degree(), 1);
    auto xs = lobatto_nodes(deg, tm);
    std::vector<double> vals(deg + 1);
    for (int j = 0; j <= deg; ++j) vals[j] = (*this)(xs[j]) * o(xs[j]);
    CoefficientFn out(Kind::Chebyshev, tm, chebyshev_transform(vals));
    out.trim();
    return out;
}

CoefficientFn CoefficientFn::scaled(double c) const {
    CoefficientFn out = *this;
    for (double& v : out.data_) v *= c;
    return out;
}

CoefficientFn CoefficientFn::derivative() const {
    if (kind_ == Kind::Polynomial) {
        if (degree() == 0) return CoefficientFn::constant(0.0, t_max_);
        std::vector<double> c(degree());
        for (int k = 1; k <= degree(); ++k) c[k - 1] = k * data_[k];
        return CoefficientFn(Kind::Polynomial, t_max_, std::move(c));
    }
    const int N = degree();
    if (N == 0) return CoefficientFn::constant(0.0, t_max_);
    std::vector<double> b(N + 1, 0.0);
    // b_{k-1} = b_{k+1} + 2k a_k on [-1, 1]
    for (int k = N; k >= 1; --k) b[k - 1] = (k + 1 <= N ? b[k + 1] : 0.0) + 2.0 * k * data_[k];
    b[0] *= 0.5;
    b.resize(N);
    const double chain = 2.0 / t_max_;
    for (double& v : b) v *= chain;
    CoefficientFn out(Kind::Chebyshev, t_max_, std::move(b));
    out.trim();
    return out;
}

CoefficientFn CoefficientFn::weighted_average(int m) const {
    if (m < 0) throw std::invalid_argument("weighted_average: m must be >= 0");
    if (kind_ == Kind::Polynomial) {
        std::vector<double> c(data_.size());
        for (size_t k = 0; k < data_.size(); ++k) c[k] = data_[k] / (m + static_cast<int>(k) + 1);
        return CoefficientFn(Kind::Polynomial, t_max_, std::move(c));
    }
    // Result is a polynomial of the same numerical degree; the s-integrand has
    // degree m + deg, so a (m+deg)/2+1 point rule is exact.
    const int deg = degree();
    const QuadRule& rule = gauss_legendre((m + deg) / 2 + 2);
    auto xs = lobatto_nodes(std::max(deg, 1), t_max_);
    std::vector<double> vals(xs.size());
    for (size_t j = 0; j < xs.size(); ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < rule.nodes.size(); ++i) {
            const double s = rule.nodes[i];
            acc += rule.weights[i] * std::pow(s, m) * (*this)(s * xs[j]);
        }
        vals[j] = acc;
    }
    CoefficientFn out(Kind::Chebyshev, t_max_, chebyshev_transform(vals));
    out.trim();
    return out;
}

double CoefficientFn::sup_norm() const {
    const int samples = std::max(129, 2 * degree() + 1);
    auto xs = lobatto_nodes(samples, t_max_);
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs((*this)(x)));
    return m;
}

bool CoefficientFn::is_zero(double tol) const {
    for (double v : data_)
        if (std::abs(v) > tol) return false;
    return true;
}

}  // namespace subfp
