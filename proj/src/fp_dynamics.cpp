#include "subfp/fp_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "subfp/grid_kernels.hpp"

namespace subfp {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// ---------------------------------------------------------------- potential

PotentialSpec PotentialSpec::zero(int n) {
    PotentialSpec p;
    p.quadratic = Eigen::MatrixXd::Zero(n, n);
    p.wavevector = Eigen::VectorXd::Zero(n);
    p.center = Eigen::VectorXd::Zero(n);
    return p;
}

PotentialSpec PotentialSpec::harmonic(int n, double omega2) {
    PotentialSpec p = zero(n);
    p.quadratic = omega2 * Eigen::MatrixXd::Identity(n, n);
    return p;
}

PotentialSpec PotentialSpec::harmonic_sine(int n, double omega2, double amp, double wavenum) {
    PotentialSpec p = harmonic(n, omega2);
    p.kind = Perturbation::Sine;
    p.amplitude = amp;
    p.wavevector = wavenum * Eigen::VectorXd::Ones(n);
    return p;
}

PotentialSpec PotentialSpec::with_bump(int n, double omega2, double amp, double center1,
                                       double width) {
    PotentialSpec p = harmonic(n, omega2);
    p.kind = Perturbation::Bump;
    p.amplitude = amp;
    p.center = center1 * Eigen::VectorXd::Ones(n);
    p.width = width;
    return p;
}

double PotentialSpec::value(const Eigen::VectorXd& x) const {
    double v = 0.5 * x.dot(quadratic * x);
    if (kind == Perturbation::Sine && amplitude != 0.0) {
        v += amplitude * std::sin(wavevector.dot(x));
    } else if (kind == Perturbation::Bump && amplitude != 0.0) {
        const double s = (x - center).squaredNorm() / (width * width);
        if (s < 1.0) v += amplitude * std::exp(-s / (1.0 - s));
    }
    return v;
}

Eigen::VectorXd PotentialSpec::grad(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = quadratic * x;
    if (kind == Perturbation::Sine && amplitude != 0.0) {
        g += amplitude * std::cos(wavevector.dot(x)) * wavevector;
    } else if (kind == Perturbation::Bump && amplitude != 0.0) {
        const double s = (x - center).squaredNorm() / (width * width);
        if (s < 1.0) {
            const double g0 = std::exp(-s / (1.0 - s));
            const double d1 = -g0 / ((1.0 - s) * (1.0 - s));
            g += amplitude * d1 * 2.0 / (width * width) * (x - center);
        }
    }
    return g;
}

Eigen::MatrixXd PotentialSpec::hess(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd H = quadratic;
    if (kind == Perturbation::Sine && amplitude != 0.0) {
        H -= amplitude * std::sin(wavevector.dot(x)) * (wavevector * wavevector.transpose());
    } else if (kind == Perturbation::Bump && amplitude != 0.0) {
        const double w2 = width * width;
        const double s = (x - center).squaredNorm() / w2;
        if (s < 1.0) {
            const double u = 1.0 - s;
            const double g0 = std::exp(-s / u);
            const double d1 = -g0 / (u * u);
            const double d2 = g0 * (1.0 / (u * u * u * u) - 2.0 / (u * u * u));
            Eigen::VectorXd r = (x - center) * (2.0 / w2);
            H += amplitude * (d2 * (r * r.transpose()) +
                              d1 * (2.0 / w2) * Eigen::MatrixXd::Identity(n(), n()));
        }
    }
    return H;
}

// ---------------------------------------------------------------- jumps

JumpSpec JumpSpec::position(int n) {
    JumpSpec j;
    j.coeffs = Eigen::MatrixXcd::Identity(n, n);
    return j;
}

JumpSpec JumpSpec::scaled_position(int n, double c) {
    JumpSpec j;
    j.coeffs = c * Eigen::MatrixXcd::Identity(n, n);
    return j;
}

Eigen::MatrixXd JumpSpec::bbt() const {
    // (sum_j grad l_j (x) grad l_j-bar)_{ik} = sum_j c_{ji} conj(c_{jk})
    Eigen::MatrixXcd m = coeffs.transpose() * coeffs.conjugate();
    return m.real();
}

Eigen::MatrixXd JumpSpec::bmatrix() const {
    Eigen::LLT<Eigen::MatrixXd> llt(bbt());
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("JumpSpec: BB^T is degenerate (Hormander hypothesis fails)");
    Eigen::MatrixXd B = llt.matrixL();
    if (std::abs(B.determinant()) < 1e-14)
        throw std::runtime_error("JumpSpec: det(B) = 0");
    return B;
}

Eigen::MatrixXd JumpSpec::drift_matrix() const {
    Eigen::MatrixXcd m = coeffs.transpose() * coeffs.conjugate();
    return m.imag();
}

// ---------------------------------------------------------------- config

FPConfig FPConfig::make(double gamma, double h, GridSpec grid, double dt, double T) {
    FPConfig c;
    c.gamma = gamma;
    c.h = h;
    c.eps = std::sqrt(gamma * h / 2.0);
    c.grid = grid;
    c.dt = dt;
    c.T = T;
    c.validate();
    return c;
}

void FPConfig::validate() const {
    if (gamma < 0.0 || gamma > 1.0 + 1e-12)
        throw std::invalid_argument("FPConfig: gamma must lie in [0, 1]");
    if (h <= 0.0 || h > 1.0 + 1e-12) throw std::invalid_argument("FPConfig: h must lie in (0, 1]");
    const double e = std::sqrt(gamma * h / 2.0);
    if (std::abs(e - eps) > 1e-12)
        throw std::invalid_argument("FPConfig: eps must equal sqrt(gamma h / 2)");
    if (grid.L <= 0.0 || grid.nx < 8 || grid.nxi < 8)
        throw std::invalid_argument("FPConfig: invalid grid");
    if (dt <= 0.0 || T <= 0.0) throw std::invalid_argument("FPConfig: dt, T must be positive");
}

// ---------------------------------------------------------------- grid symbol

GridSymbol GridSymbol::sampled(const GridSpec& g, const FPConfig& cfg,
                               const std::function<double(double, double)>& f) {
    GridSymbol s;
    s.nx = g.nx;
    s.nxi = g.nxi;
    s.L = g.L;
    s.h = cfg.h;
    s.gamma = cfg.gamma;
    s.eps = cfg.eps;
    s.t = 0.0;
    s.values.resize(static_cast<size_t>(g.nx) * g.nxi);
    for (int ix = 0; ix < g.nx; ++ix)
        for (int ixi = 0; ixi < g.nxi; ++ixi) s.at(ix, ixi) = f(s.x(ix), s.xi(ixi));
    return s;
}

double GridSymbol::norm_l1() const {
    return gridk::sum_abs(values.data(), values.size()) * dx() * dxi();
}

double GridSymbol::norm_l2() const {
    return std::sqrt(gridk::sum_sq(values.data(), values.size()) * dx() * dxi());
}

double GridSymbol::norm_sup() const { return gridk::max_abs(values.data(), values.size()); }

double GridSymbol::mass() const { return gridk::sum(values.data(), values.size()) * dx() * dxi(); }

double GridSymbol::boundary_max() const {
    double m = 0.0;
    for (int ixi = 0; ixi < nxi; ++ixi)
        m = std::max({m, std::abs(at(0, ixi)), std::abs(at(nx - 1, ixi))});
    for (int ix = 0; ix < nx; ++ix)
        m = std::max({m, std::abs(at(ix, 0)), std::abs(at(ix, nxi - 1))});
    return m;
}

void write_grid_binary(const GridSymbol& g, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_grid_binary: cannot open " + path);
    const int64_t n = 1, nx = g.nx, nxi = g.nxi;
    auto put_i = [&](int64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_d = [&](double v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    put_i(n);
    put_i(nx);
    put_i(nxi);
    put_d(g.L);
    put_d(g.h);
    put_d(g.gamma);
    put_d(g.eps);
    put_d(g.t);
    f.write(reinterpret_cast<const char*>(g.values.data()),
            static_cast<std::streamsize>(g.values.size() * 8));
}

GridSymbol read_grid_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_grid_binary: cannot open " + path);
    auto get_i = [&]() {
        int64_t v;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    auto get_d = [&]() {
        double v;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    const int64_t n = get_i();
    if (n != 1) throw std::runtime_error("read_grid_binary: only n = 1 grids supported");
    GridSymbol g;
    g.nx = static_cast<int>(get_i());
    g.nxi = static_cast<int>(get_i());
    g.L = get_d();
    g.h = get_d();
    g.gamma = get_d();
    g.eps = get_d();
    g.t = get_d();
    g.values.resize(static_cast<size_t>(g.nx) * g.nxi);
    f.read(reinterpret_cast<char*>(g.values.data()),
           static_cast<std::streamsize>(g.values.size() * 8));
    if (!f) throw std::runtime_error("read_grid_binary: truncated file");
    return g;
}

void write_grid_csv(const GridSymbol& g, const std::string& path) {
    if (static_cast<long>(g.nx) * g.nxi > 1 << 16)
        throw std::runtime_error("write_grid_csv: grid too large for CSV output");
    std::ofstream f(path);
    f << "x,xi,value\n";
    char buf[96];
    for (int ix = 0; ix < g.nx; ++ix)
        for (int ixi = 0; ixi < g.nxi; ++ixi) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.x(ix), g.xi(ixi),
                          g.at(ix, ixi));
            f << buf;
        }
}

// ---------------------------------------------------------------- flow

namespace {

struct FlowField {
    const PotentialSpec* pot;
    double gamma;
    Eigen::MatrixXd drift;  // gamma-weighted xi-drift matrix

    // X0 spatial part: xdot = -xi, xidot = grad V(x) - gamma D x.
    void operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& xi, Eigen::VectorXd& dx,
                    Eigen::VectorXd& dxi) const {
        dx = -xi;
        dxi = pot->grad(x) - gamma * (drift * x);
    }
    Eigen::MatrixXd smat(const Eigen::VectorXd& x) const { return pot->hess(x) - gamma * drift; }
};

int flow_steps(double t, double max_step) {
    return std::max(1, static_cast<int>(std::ceil(std::abs(t) / max_step)));
}

}  // namespace

PhasePoint flow_map(const PhasePoint& w, double t, const PotentialSpec& pot, const JumpSpec& jump,
                    double gamma, const FlowOptions& opt) {
    FlowField F{&pot, gamma, jump.drift_matrix()};
    const int steps = flow_steps(t, opt.max_step);
    const double h = t / steps;
    Eigen::VectorXd x = w.x, xi = w.xi;
    Eigen::VectorXd k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
    for (int s = 0; s < steps; ++s) {
        F(x, xi, k1x, k1v);
        F(x + 0.5 * h * k1x, xi + 0.5 * h * k1v, k2x, k2v);
        F(x + 0.5 * h * k2x, xi + 0.5 * h * k2v, k3x, k3v);
        F(x + h * k3x, xi + h * k3v, k4x, k4v);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        xi += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if (!x.allFinite() || !xi.allFinite())
            throw std::runtime_error("flow_map: trajectory blew up (step-size underflow)");
    }
    return {x, xi};
}

Eigen::MatrixXd flow_jacobian(const PhasePoint& w, double t, const PotentialSpec& pot,
                              const JumpSpec& jump, double gamma, const FlowOptions& opt) {
    FlowField F{&pot, gamma, jump.drift_matrix()};
    const int n = static_cast<int>(w.x.size());
    const int steps = flow_steps(t, opt.max_step);
    const double h = t / steps;
    Eigen::VectorXd x = w.x, xi = w.xi;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    auto dF = [&](const Eigen::VectorXd& xx) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        A.topRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
        A.bottomLeftCorner(n, n) = F.smat(xx);
        return A;
    };
    Eigen::VectorXd k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
    for (int s = 0; s < steps; ++s) {
        F(x, xi, k1x, k1v);
        Eigen::MatrixXd K1 = dF(x) * J;
        F(x + 0.5 * h * k1x, xi + 0.5 * h * k1v, k2x, k2v);
        Eigen::MatrixXd K2 = dF(x + 0.5 * h * k1x) * (J + 0.5 * h * K1);
        F(x + 0.5 * h * k2x, xi + 0.5 * h * k2v, k3x, k3v);
        Eigen::MatrixXd K3 = dF(x + 0.5 * h * k2x) * (J + 0.5 * h * K2);
        F(x + h * k3x, xi + h * k3v, k4x, k4v);
        Eigen::MatrixXd K4 = dF(x + h * k3x) * (J + h * K3);
        J += h / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        xi += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return J;
}

// ---------------------------------------------------------------- exp / theta

SpacetimePoint exp_coords(const SpacetimePoint& w, const GroupElement& y,
                          const PotentialSpec& pot, const JumpSpec& jump, double gamma) {
    const int n = y.n();
    Eigen::MatrixXd B = jump.bmatrix();
    Eigen::VectorXd yp = Eigen::Map<const Eigen::VectorXd>(y.yp.data(), n);
    Eigen::VectorXd ypp = Eigen::Map<const Eigen::VectorXd>(y.ypp.data(), n);
    PhasePoint start{w.w.x + B * ypp + 0.5 * y.y0 * (B * yp), w.w.xi + B * yp};
    PhasePoint out = flow_map(start, y.y0, pot, jump, gamma);
    return {w.t + y.y0, out};
}

GroupElement theta_coords(const SpacetimePoint& w, const SpacetimePoint& v,
                          const PotentialSpec& pot, const JumpSpec& jump, double gamma) {
    const int n = static_cast<int>(w.w.x.size());
    const double y0 = v.t - w.t;
    Eigen::MatrixXd B = jump.bmatrix();
    PhasePoint back = flow_map(v.w, -y0, pot, jump, gamma);  // Phi_{t-s}(z, zeta)
    Eigen::VectorXd byp = back.xi - w.w.xi;
    Eigen::VectorXd bypp = back.x - w.w.x - 0.5 * y0 * byp;
    Eigen::VectorXd yp = B.lu().solve(byp);
    Eigen::VectorXd ypp = B.lu().solve(bypp);
    GroupElement y = GroupElement::identity(n);
    y.y0 = y0;
    for (int i = 0; i < n; ++i) {
        y.yp[i] = yp(i);
        y.ypp[i] = ypp(i);
    }
    return y;
}

double cutoff_chi(const GroupElement& y) {
    double r2 = y.y0 * y.y0;
    for (int i = 0; i < y.n(); ++i) r2 += y.yp[i] * y.yp[i] + y.ypp[i] * y.ypp[i];
    const double r = std::sqrt(r2);
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    const double u = 2.0 * r - 1.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

// ------------------------------------------------- variational path storage

namespace {

// Dense flow + inverse-Jacobian blocks along [0, T] with Hermite evaluation.
class VariationalPath {
  public:
    VariationalPath(const PhasePoint& p0, double T, const PotentialSpec& pot,
                    const JumpSpec& jump, double gamma)
        : pot_(&pot), gamma_(gamma), drift_(jump.drift_matrix()), T_(T) {
        n_ = static_cast<int>(p0.x.size());
        steps_ = std::max(1024, static_cast<int>(2048 * std::max(1.0, T)));
        h_ = T / steps_;
        xs_.reserve(steps_ + 1);
        Ns_.reserve(steps_ + 1);
        FlowField F{&pot, gamma, drift_};
        Eigen::VectorXd x = p0.x, xi = p0.xi;
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(2 * n_, 2 * n_);
        auto dF = [&](const Eigen::VectorXd& xx) {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n_, 2 * n_);
            A.topRightCorner(n_, n_) = -Eigen::MatrixXd::Identity(n_, n_);
            A.bottomLeftCorner(n_, n_) = F.smat(xx);
            return A;
        };
        Eigen::VectorXd k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
        xs_.push_back(x);
        Ns_.push_back(J.inverse());
        for (int s = 0; s < steps_; ++s) {
            F(x, xi, k1x, k1v);
            Eigen::MatrixXd K1 = dF(x) * J;
            F(x + 0.5 * h_ * k1x, xi + 0.5 * h_ * k1v, k2x, k2v);
            Eigen::MatrixXd K2 = dF(x + 0.5 * h_ * k1x) * (J + 0.5 * h_ * K1);
            F(x + 0.5 * h_ * k2x, xi + 0.5 * h_ * k2v, k3x, k3v);
            Eigen::MatrixXd K3 = dF(x + 0.5 * h_ * k2x) * (J + 0.5 * h_ * K2);
            F(x + h_ * k3x, xi + h_ * k3v, k4x, k4v);
            Eigen::MatrixXd K4 = dF(x + h_ * k3x) * (J + h_ * K3);
            J += h_ / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
            x += h_ / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            xi += h_ / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            xs_.push_back(x);
            Ns_.push_back(J.inverse());
        }
    }

    // S(tau) = hess V(x(tau)) - gamma D
    Eigen::MatrixXd smat(double tau) const { return pot_->hess(xat(tau)) - gamma_ * drift_; }

    Eigen::MatrixXd nblocks(double tau) const {  // 2n x 2n inverse Jacobian
        return interp(Ns_, tau);
    }

    Eigen::MatrixXd n11(double tau) const { return nblocks(tau).topLeftCorner(n_, n_); }
    Eigen::MatrixXd n12(double tau) const { return nblocks(tau).topRightCorner(n_, n_); }
    Eigen::MatrixXd n21(double tau) const { return nblocks(tau).bottomLeftCorner(n_, n_); }
    Eigen::MatrixXd n22(double tau) const { return nblocks(tau).bottomRightCorner(n_, n_); }

    int dim() const { return n_; }

  private:
    const PotentialSpec* pot_;
    double gamma_;
    Eigen::MatrixXd drift_;
    double T_, h_;
    int n_, steps_;
    std::vector<Eigen::VectorXd> xs_;
    std::vector<Eigen::MatrixXd> Ns_;

    Eigen::VectorXd xat(double tau) const { return interp(xs_, tau); }

    template <class V>
    V interp(const std::vector<V>& arr, double tau) const {
        // piecewise-cubic via 4-point Lagrange on the step grid
        const double u = std::clamp(tau, 0.0, T_) / h_;
        const int i0 = std::clamp(static_cast<int>(u) - 1, 0, steps_ - 3);
        const double s = u - i0;
        auto l = [&](int k) {
            double w = 1.0;
            for (int m = 0; m < 4; ++m)
                if (m != k) w *= (s - m) / (k - m);
            return w;
        };
        return l(0) * arr[i0] + l(1) * arr[i0 + 1] + l(2) * arr[i0 + 2] + l(3) * arr[i0 + 3];
    }
};

// Matrix of coefficient functions (n x n), row-major.
struct CoeffMat {
    int n = 0;
    std::vector<CoefficientFn> e;
    CoefficientFn& at(int r, int c) { return e[r * n + c]; }
    const CoefficientFn& at(int r, int c) const { return e[r * n + c]; }

    static CoeffMat fit_entries(int n, double T, double tol,
                                const std::function<double(int, int, double)>& f) {
        CoeffMat m;
        m.n = n;
        m.e.reserve(n * n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                m.e.push_back(CoefficientFn::fit([&, r, c](double y0) { return f(r, c, y0); }, T,
                                                 tol));
        return m;
    }

    double eval(int r, int c, double y0) const { return at(r, c)(y0); }

    // numeric conjugation A * this * B with constant matrices
    CoeffMat conjugated(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
        CoeffMat out;
        out.n = n;
        out.e.assign(n * n, CoefficientFn());
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                CoefficientFn acc = CoefficientFn::constant(0.0);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        const double w = A(r, a) * B(b, c);
                        if (w != 0.0) acc = acc + at(a, b).scaled(w);
                    }
                out.at(r, c) = acc;
            }
        return out;
    }

    CoeffMat lincomb(double wa, const CoeffMat& other, double wb) const {
        CoeffMat out;
        out.n = n;
        out.e.assign(n * n, CoefficientFn());
        for (int i = 0; i < n * n; ++i) out.e[i] = e[i].scaled(wa) + other.e[i].scaled(wb);
        return out;
    }
};

struct DeflatedFrame {
    // X'_i corrections: d_{y'} entries = y0^2 M1, d_{y''} entries = y0^3 M2
    // X''_i corrections: d_{y'} entries = y0 M3, d_{y''} entries = y0^2 M4
    CoeffMat M1, M2, M3, M4;
};

DeflatedFrame build_deflated(const PhasePoint& p0, double T, const PotentialSpec& pot,
                             const JumpSpec& jump, double gamma, double tol) {
    VariationalPath path(p0, T, pot, jump, gamma);
    const int n = path.dim();
    const QuadRule& gl = gauss_legendre(48);
    Eigen::MatrixXd B = jump.bmatrix();
    Eigen::MatrixXd Binv = B.inverse();

    auto glsum = [&](const std::function<Eigen::MatrixXd(double)>& f, double y0) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        for (size_t q = 0; q < gl.nodes.size(); ++q) acc += gl.weights[q] * f(gl.nodes[q] * y0);
        return acc;
    };

    // U21 = N21 / y0 = -int_0^1 (N22 S)(y0 u) du
    CoeffMat U21 = CoeffMat::fit_entries(n, T, tol, [&](int r, int c, double y0) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        for (size_t q = 0; q < gl.nodes.size(); ++q) {
            const double tau = gl.nodes[q] * y0;
            acc += gl.weights[q] * (path.n22(tau) * path.smat(tau));
        }
        return -acc(r, c);
    });
    // U22 = (N22 - I)/y0^2 = int_0^1 u U21(y0 u) du
    CoeffMat U22 = CoeffMat::fit_entries(n, T, tol, [&](int r, int c, double y0) {
        double acc = 0.0;
        for (size_t q = 0; q < gl.nodes.size(); ++q)
            acc += gl.weights[q] * gl.nodes[q] * U21.eval(r, c, gl.nodes[q] * y0);
        return acc;
    });
    // W12 = N12 / y0 = int_0^1 N11(y0 u) du
    CoeffMat W12 = CoeffMat::fit_entries(n, T, tol, [&](int r, int c, double y0) {
        return glsum([&](double tau) { return path.n11(tau); }, y0)(r, c);
    });
    // U11 = (N11 - I)/y0^2 = -int_0^1 u W12(y0 u) S(y0 u) du
    CoeffMat U11 = CoeffMat::fit_entries(n, T, tol, [&](int r, int c, double y0) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        for (size_t q = 0; q < gl.nodes.size(); ++q) {
            const double tau = gl.nodes[q] * y0;
            Eigen::MatrixXd W(n, n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) W(a, b) = W12.eval(a, b, tau);
            acc += gl.weights[q] * gl.nodes[q] * (W * path.smat(tau));
        }
        return -acc(r, c);
    });
    // U12 = (N12 - y0 I)/y0^3 = int_0^1 u^2 U11(y0 u) du
    CoeffMat U12 = CoeffMat::fit_entries(n, T, tol, [&](int r, int c, double y0) {
        double acc = 0.0;
        for (size_t q = 0; q < gl.nodes.size(); ++q)
            acc += gl.weights[q] * gl.nodes[q] * gl.nodes[q] * U11.eval(r, c, gl.nodes[q] * y0);
        return acc;
    });

    DeflatedFrame fr;
    fr.M1 = U22.conjugated(Binv, B);
    fr.M2 = U12.lincomb(1.0, U22, -0.5).conjugated(Binv, B);
    fr.M3 = U21.conjugated(Binv, B);
    fr.M4 = U11.lincomb(1.0, U21, -0.5).conjugated(Binv, B);
    return fr;
}

}  // namespace

FrameCorrection frame_correction_direct(const SpacetimePoint& w, const GroupElement& y,
                                        const PotentialSpec& pot, const JumpSpec& jump,
                                        double gamma) {
    const int n = y.n();
    Eigen::MatrixXd B = jump.bmatrix();
    Eigen::MatrixXd Binv = B.inverse();
    Eigen::VectorXd yp = Eigen::Map<const Eigen::VectorXd>(y.yp.data(), n);
    Eigen::VectorXd ypp = Eigen::Map<const Eigen::VectorXd>(y.ypp.data(), n);
    PhasePoint p{w.w.x + B * ypp + 0.5 * y.y0 * (B * yp), w.w.xi + B * yp};
    Eigen::MatrixXd J = flow_jacobian(p, y.y0, pot, jump, gamma);
    Eigen::MatrixXd N = J.inverse();
    Eigen::MatrixXd N11 = N.topLeftCorner(n, n), N12 = N.topRightCorner(n, n);
    Eigen::MatrixXd N21 = N.bottomLeftCorner(n, n), N22 = N.bottomRightCorner(n, n);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    FrameCorrection out;
    out.dyp.resize(n, 2 * n);
    out.dypp.resize(n, 2 * n);
    out.dyp.leftCols(n) = Binv * (N22 - I) * B;
    out.dypp.leftCols(n) = Binv * (N12 - 0.5 * y.y0 * (N22 + I)) * B;
    out.dyp.rightCols(n) = Binv * N21 * B;
    out.dypp.rightCols(n) = Binv * (N11 - I - 0.5 * y.y0 * N21) * B;
    return out;
}

namespace {

// First-order correction operator term: c(y0) y^mono d_k, k in 1..2n.
struct EiTerm {
    CoefficientFn c;
    MultiIndex mono;
    int k;
};

void mono_inc(MultiIndex& m, int k, int v) {
    const int n = m.n();
    if (k <= n)
        m.ap[k - 1] += v;
    else
        m.app[k - 1 - n] += v;
}

int mono_comp(const MultiIndex& m, int k) {
    const int n = m.n();
    return (k <= n) ? m.ap[k - 1] : m.app[k - 1 - n];
}

struct OpTermKey {
    std::vector<int> v;
    bool operator<(const OpTermKey& o) const { return v < o.v; }
};

OpTermKey make_key(const MultiIndex& mono, const MultiIndex& deriv) {
    OpTermKey k;
    k.v.push_back(mono.a0);
    k.v.insert(k.v.end(), mono.ap.begin(), mono.ap.end());
    k.v.insert(k.v.end(), mono.app.begin(), mono.app.end());
    k.v.push_back(deriv.a0);
    k.v.insert(k.v.end(), deriv.ap.begin(), deriv.ap.end());
    k.v.insert(k.v.end(), deriv.app.begin(), deriv.app.end());
    return k;
}

}  // namespace

FrameExpansion frame_expansion(const SpacetimePoint& w, int N, const PotentialSpec& pot,
                               const JumpSpec& jump, double gamma,
                               const FrameExpansionOptions& opt) {
    const int n = static_cast<int>(w.w.x.size());
    const double T = opt.t_domain;
    const int jmax = std::max(N, opt.jmax);

    // Deflated corrections at the base point, plus spatial Taylor data.
    std::map<std::pair<int, int>, DeflatedFrame> derivs;  // (ax, axi) -> D^nu of frame
    derivs[{0, 0}] = build_deflated(w.w, T, pot, jump, gamma, opt.fit_tol);

    const int tmax = pot.constant_hessian() ? 0 : opt.taylor_max;
    if (tmax > 0 && n != 1)
        throw std::invalid_argument("frame_expansion: spatial Taylor implemented for n = 1");
    if (tmax > 0) {
        auto combine = [](const DeflatedFrame& a, double wa, const DeflatedFrame& b, double wb) {
            DeflatedFrame out;
            out.M1 = a.M1.lincomb(wa, b.M1, wb);
            out.M2 = a.M2.lincomb(wa, b.M2, wb);
            out.M3 = a.M3.lincomb(wa, b.M3, wb);
            out.M4 = a.M4.lincomb(wa, b.M4, wb);
            return out;
        };
        // nested central differences; one Richardson pass over the spacing
        std::function<DeflatedFrame(int, int, PhasePoint, double)> rec =
            [&](int a, int b, PhasePoint base, double st) -> DeflatedFrame {
            if (a + b == 0) return build_deflated(base, T, pot, jump, gamma, opt.fit_tol);
            PhasePoint bp = base, bm = base;
            if (a > 0) {
                bp.x(0) += st;
                bm.x(0) -= st;
                return combine(rec(a - 1, b, bp, st), 0.5 / st, rec(a - 1, b, bm, st),
                               -0.5 / st);
            }
            bp.xi(0) += st;
            bm.xi(0) -= st;
            return combine(rec(a, b - 1, bp, st), 0.5 / st, rec(a, b - 1, bm, st), -0.5 / st);
        };
        const double hd = 0.08;
        for (int total = 1; total <= tmax; ++total)
            for (int ax = 0; ax <= total; ++ax) {
                const int axi = total - ax;
                DeflatedFrame fh = rec(ax, axi, w.w, hd);
                DeflatedFrame fh2 = rec(ax, axi, w.w, hd / 2.0);
                derivs[{ax, axi}] = combine(fh2, 4.0 / 3.0, fh, -1.0 / 3.0);
            }
    }

    const Eigen::MatrixXd B = jump.bmatrix();

    // Assemble E_i (corrections of X'_i only; those are what enter the operator).
    auto factorial = [](int a) {
        double f = 1;
        for (int i = 2; i <= a; ++i) f *= i;
        return f;
    };
    std::vector<std::vector<EiTerm>> E(n);
    for (const auto& [nu, fr] : derivs) {
        const auto [ax, axi] = nu;
        const double invfact = 1.0 / (factorial(ax) * factorial(axi));
        // monomial expansions of (b(y'' + y0 y'/2))^ax (b y')^axi  (n = 1 forms)
        struct MonoW {
            double w;
            int a0, apw, appw;
        };
        std::vector<MonoW> forms;
        if (ax + axi == 0) {
            forms.push_back({1.0, 0, 0, 0});
        } else {
            const double b = B(0, 0);
            for (int m = 0; m <= ax; ++m) {
                double cb = 1.0;
                for (int i = 0; i < m; ++i) cb = cb * (ax - i) / (i + 1);
                const double wgt = std::pow(b, ax + axi) * cb * std::pow(0.5, m);
                forms.push_back({wgt, m, m + axi, ax - m});
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                for (const auto& fw : forms) {
                    // d_{y'_k} correction
                    if (!fr.M1.at(k, i).is_zero(1e-13)) {
                        MultiIndex mono = MultiIndex::zero(n);
                        mono.a0 = 2 + fw.a0;
                        if (n == 1) {
                            mono.ap[0] += fw.apw;
                            mono.app[0] += fw.appw;
                        }
                        E[i].push_back(
                            {fr.M1.at(k, i).scaled(invfact * fw.w), mono, k + 1});
                    }
                    // d_{y''_k} correction
                    if (!fr.M2.at(k, i).is_zero(1e-13)) {
                        MultiIndex mono = MultiIndex::zero(n);
                        mono.a0 = 3 + fw.a0;
                        if (n == 1) {
                            mono.ap[0] += fw.apw;
                            mono.app[0] += fw.appw;
                        }
                        E[i].push_back(
                            {fr.M2.at(k, i).scaled(invfact * fw.w), mono, k + 1 + n});
                    }
                }
            }
        }
    }

    // Compose -(Y_i E_i + E_i Y_i + E_i E_i) and bucket by order.
    std::map<OpTermKey, CoefficientFn> acc;
    auto add = [&](const CoefficientFn& c, const MultiIndex& mono, const MultiIndex& deriv) {
        if (c.is_zero()) return;
        OpTermKey key = make_key(mono, deriv);
        auto it = acc.find(key);
        if (it == acc.end())
            acc.emplace(key, c);
        else
            it->second = it->second + c;
    };
    for (int i0 = 0; i0 < n; ++i0) {
        const int i = i0 + 1;  // frame index of Y'_i
        for (const auto& t : E[i0]) {
            // Y_i E_i
            {
                MultiIndex d = MultiIndex::zero(n);
                mono_inc(d, i, 1);
                mono_inc(d, t.k, 1);
                add(t.c.scaled(-1.0), t.mono, d);
            }
            if (mono_comp(t.mono, i) > 0) {
                MultiIndex m = t.mono;
                mono_inc(m, i, -1);
                MultiIndex d = MultiIndex::zero(n);
                mono_inc(d, t.k, 1);
                add(t.c.scaled(-1.0 * mono_comp(t.mono, i)), m, d);
            }
            {
                MultiIndex m = t.mono;
                m.a0 += 1;
                MultiIndex d = MultiIndex::zero(n);
                mono_inc(d, i + n, 1);
                mono_inc(d, t.k, 1);
                add(t.c.scaled(-0.5), m, d);
            }
            if (mono_comp(t.mono, i + n) > 0) {
                MultiIndex m = t.mono;
                mono_inc(m, i + n, -1);
                m.a0 += 1;
                MultiIndex d = MultiIndex::zero(n);
                mono_inc(d, t.k, 1);
                add(t.c.scaled(-0.5 * mono_comp(t.mono, i + n)), m, d);
            }
            // E_i Y_i
            {
                MultiIndex d = MultiIndex::zero(n);
                mono_inc(d, t.k, 1);
                mono_inc(d, i, 1);
                add(t.c.scaled(-1.0), t.mono, d);
            }
            {
                MultiIndex m = t.mono;
                m.a0 += 1;
                MultiIndex d = MultiIndex::zero(n);
                mono_inc(d, t.k, 1);
                mono_inc(d, i + n, 1);
                add(t.c.scaled(-0.5), m, d);
            }
            // E_i E_i
            for (const auto& s : E[i0]) {
                MultiIndex m = t.mono;
                m.a0 += s.mono.a0;
                for (int q = 0; q < n; ++q) {
                    m.ap[q] += s.mono.ap[q];
                    m.app[q] += s.mono.app[q];
                }
                MultiIndex d = MultiIndex::zero(n);
                mono_inc(d, t.k, 1);
                mono_inc(d, s.k, 1);
                add((t.c * s.c).scaled(-1.0), m, d);
                if (mono_comp(s.mono, t.k) > 0) {
                    MultiIndex m2 = m;
                    mono_inc(m2, t.k, -1);
                    MultiIndex d2 = MultiIndex::zero(n);
                    mono_inc(d2, s.k, 1);
                    add((t.c * s.c).scaled(-1.0 * mono_comp(s.mono, t.k)), m2, d2);
                }
            }
        }
    }

    FrameExpansion out;
    out.P.reserve(jmax);
    for (int j = 1; j <= jmax; ++j) out.P.emplace_back(n, 2 - j);
    for (const auto& [key, c] : acc) {
        if (c.is_zero(1e-15)) continue;
        MultiIndex mono = MultiIndex::zero(n), deriv = MultiIndex::zero(n);
        size_t p = 0;
        mono.a0 = key.v[p++];
        for (int q = 0; q < n; ++q) mono.ap[q] = key.v[p++];
        for (int q = 0; q < n; ++q) mono.app[q] = key.v[p++];
        deriv.a0 = key.v[p++];
        for (int q = 0; q < n; ++q) deriv.ap[q] = key.v[p++];
        for (int q = 0; q < n; ++q) deriv.app[q] = key.v[p++];
        const int ord = order_of(deriv) - order_of(mono);
        const int j = 2 - ord;
        if (j < 1) throw std::runtime_error("frame_expansion: term of nonnegative order");
        if (j > jmax) {
            out.remainder_sup += c.sup_norm();
            continue;
        }
        PolyDiffTerm t;
        t.eps_power = 2 - deriv.abs_spatial();
        t.coeff = c;
        t.monomial = mono;
        t.derivative = deriv;
        out.P[j - 1].add_term(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------- fp_evolve

namespace {

struct StepTables {
    std::vector<cplx> a_half;  // applied after fft_cols: index [kx][xi]
    std::vector<cplx> b_full;  // applied after fft_rows: index [x][kxi]
};

StepTables make_tables(const GridSymbol& g, const PotentialSpec& pot, const JumpSpec& jump,
                       const FPConfig& cfg, double dt) {
    StepTables tb;
    const int nx = g.nx, nxi = g.nxi;
    auto kx = gridk::fft_wavenumbers(nx, g.dx());
    auto kxi = gridk::fft_wavenumbers(nxi, g.dxi());
    const double b2 = jump.bbt()(0, 0);
    const Eigen::MatrixXd D = jump.drift_matrix();
    tb.a_half.resize(static_cast<size_t>(nx) * nxi);
    tb.b_full.resize(static_cast<size_t>(nx) * nxi);
    for (int ix = 0; ix < nx; ++ix)
        for (int ixi = 0; ixi < nxi; ++ixi) {
            // x-advection at speed xi for dt/2 (exact row shift)
            const double phase = kx[ix] * g.xi(ixi) * 0.5 * dt;
            tb.a_half[static_cast<size_t>(ix) * nxi + ixi] =
                std::polar(1.0 / nx, phase);
        }
    for (int ix = 0; ix < nx; ++ix) {
        Eigen::VectorXd xv(1);
        xv(0) = g.x(ix);
        const double s = -pot.grad(xv)(0) + cfg.gamma * (D * xv)(0);
        for (int ixi = 0; ixi < nxi; ++ixi) {
            const double k = kxi[ixi];
            const double damp = -cfg.eps * cfg.eps * b2 * k * k * dt;
            tb.b_full[static_cast<size_t>(ix) * nxi + ixi] =
                std::polar(std::exp(damp) / nxi, k * s * dt);
        }
    }
    return tb;
}

}  // namespace

std::vector<GridSymbol> fp_evolve_trajectory(const GridSymbol& a0, double t,
                                             const PotentialSpec& pot, const JumpSpec& jump,
                                             const FPConfig& cfg, int snap_stride) {
    if (t < 0.0) throw std::invalid_argument("fp_evolve: t must be >= 0");
    if (a0.boundary_max() > 1e-12 * std::max(a0.norm_sup(), 1e-300))
        throw std::invalid_argument("fp_evolve: initial data does not decay at the boundary");
    std::vector<GridSymbol> snaps;
    snaps.push_back(a0);
    if (t == 0.0) return snaps;
    const int steps = std::max(1, static_cast<int>(std::ceil(t / cfg.dt)));
    const double dt = t / steps;
    double smax = a0.L;  // |xi| <= L drives the x-advection
    const Eigen::MatrixXd D = jump.drift_matrix();
    for (int ix = 0; ix < a0.nx; ++ix) {
        Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, a0.x(ix));
        smax = std::max(smax, std::abs(-pot.grad(xv)(0) + cfg.gamma * (D * xv)(0)));
    }
    if (smax * dt > 0.5 * a0.L)
        throw std::invalid_argument("fp_evolve: advection displacement exceeds half the box");

    StepTables tb = make_tables(a0, pot, jump, cfg, dt);
    SpectralGrid sg(a0.nx, a0.nxi);
    sg.load(a0.values);
    GridSymbol cur = a0;
    for (int s = 0; s < steps; ++s) {
        sg.fft_cols(true);
        gridk::multiply_table_omp(sg.data(), tb.a_half.data(), tb.a_half.size());
        sg.fft_cols(false);
        sg.fft_rows(true);
        gridk::multiply_table_omp(sg.data(), tb.b_full.data(), tb.b_full.size());
        sg.fft_rows(false);
        sg.fft_cols(true);
        gridk::multiply_table_omp(sg.data(), tb.a_half.data(), tb.a_half.size());
        sg.fft_cols(false);
        if ((snap_stride > 0 && (s + 1) % snap_stride == 0) || s == steps - 1) {
            sg.store_real(cur.values);
            cur.t = a0.t + dt * (s + 1);
            snaps.push_back(cur);
        }
    }
    return snaps;
}

GridSymbol fp_evolve(const GridSymbol& a0, double t, const PotentialSpec& pot,
                     const JumpSpec& jump, const FPConfig& cfg) {
    auto snaps = fp_evolve_trajectory(a0, t, pot, jump, cfg, 0);
    return snaps.back();
}

// ---------------------------------------------------------- parametrix_evolve

GridSymbol parametrix_evolve(const std::function<double(double, double)>& a0, double t,
                             const KernelSum& K, const PotentialSpec& pot, const JumpSpec& jump,
                             const FPConfig& cfg) {
    if (!(t > 0.0) || t >= 1.0 || t > cfg.T)
        throw std::invalid_argument("parametrix_evolve: t outside cutoff support");
    const double eps = K.eps();
    GridSymbol out;
    out.nx = cfg.grid.nx;
    out.nxi = cfg.grid.nxi;
    out.L = cfg.grid.L;
    out.h = cfg.h;
    out.gamma = cfg.gamma;
    out.eps = cfg.eps;
    out.t = t;
    out.values.assign(static_cast<size_t>(out.nx) * out.nxi, 0.0);

    int maxdeg = 0;
    for (const auto& tm : K.terms()) maxdeg = std::max(maxdeg, tm.gamma.abs_spatial());
    const double sp = eps * std::sqrt(2.0 * t);
    const double spp = eps * std::sqrt(t * t * t / 6.0);
    const double wfac = 10.0 + 2.0 * maxdeg;
    const QuadRule& gl = gauss_legendre(40);
    const double b = jump.bmatrix()(0, 0);

    const int nx = out.nx, nxi = out.nxi;
#pragma omp parallel for schedule(dynamic, 4)
    for (int ix = 0; ix < nx; ++ix) {
        for (int ixi = 0; ixi < nxi; ++ixi) {
            PhasePoint wpt{Eigen::VectorXd::Constant(1, out.x(ix)),
                           Eigen::VectorXd::Constant(1, out.xi(ixi))};
            PhasePoint hat = flow_map(wpt, -t, pot, jump, cfg.gamma);
            double acc = 0.0;
            for (size_t qa = 0; qa < gl.nodes.size(); ++qa) {
                const double yp = (2.0 * gl.nodes[qa] - 1.0) * wfac * sp;
                const double wa = gl.weights[qa] * 2.0 * wfac * sp;
                for (size_t qb = 0; qb < gl.nodes.size(); ++qb) {
                    const double ypp = (2.0 * gl.nodes[qb] - 1.0) * wfac * spp;
                    const double wb = gl.weights[qb] * 2.0 * wfac * spp;
                    GroupElement y(t, {yp}, {ypp});
                    const double kv = K.eval(y);
                    if (kv == 0.0) continue;
                    const double chi = cutoff_chi(y);
                    if (chi == 0.0) continue;
                    const double z = hat.x(0) - b * ypp - 0.5 * t * b * yp;
                    const double zeta = hat.xi(0) - b * yp;
                    acc += wa * wb * kv * chi * a0(z, zeta);
                }
            }
            out.at(ix, ixi) = acc;
        }
    }
    return out;
}

GridSymbol parametrix_evolve(const GridSymbol& a0, double t, const KernelSum& K,
                             const PotentialSpec& pot, const JumpSpec& jump,
                             const FPConfig& cfg) {
    // cubic-convolution interpolation on the periodic grid
    auto interp = [&a0](double x, double xi) {
        const double fx = (x + a0.L) / a0.dx();
        const double fxi = (xi + a0.L) / a0.dxi();
        const int ix = static_cast<int>(std::floor(fx));
        const int ixi = static_cast<int>(std::floor(fxi));
        const double tx = fx - ix, ti = fxi - ixi;
        auto wcube = [](double s, double* w) {
            w[0] = 0.5 * (-s * (1 - s) * (1 - s));
            w[1] = 0.5 * ((2 - 5 * s * s + 3 * s * s * s));
            w[2] = 0.5 * (s * (1 + 4 * s - 3 * s * s));
            w[3] = 0.5 * (s * s * (s - 1));
        };
        double wx[4], wi[4];
        wcube(tx, wx);
        wcube(ti, wi);
        double acc = 0.0;
        for (int a = -1; a <= 2; ++a) {
            const int jx = ((ix + a) % a0.nx + a0.nx) % a0.nx;
            double row = 0.0;
            for (int c = -1; c <= 2; ++c) {
                const int ji = ((ixi + c) % a0.nxi + a0.nxi) % a0.nxi;
                row += wi[c + 1] * a0.at(jx, ji);
            }
            acc += wx[a + 1] * row;
        }
        return acc;
    };
    return parametrix_evolve(interp, t, K, pot, jump, cfg);
}

// ---------------------------------------------------------------- diagnostics

GridSymbol apply_q(const GridSymbol& a, const PotentialSpec& pot, const JumpSpec& jump,
                   const FPConfig& cfg) {
    const int nx = a.nx, nxi = a.nxi;
    auto kx = gridk::fft_wavenumbers(nx, a.dx());
    auto kxi = gridk::fft_wavenumbers(nxi, a.dxi());
    const double b2 = jump.bbt()(0, 0);
    const Eigen::MatrixXd D = jump.drift_matrix();

    auto derivative = [&](int ax, int axi) {
        SpectralGrid sg(nx, nxi);
        sg.load(a.values);
        sg.fft_cols(true);
        sg.fft_rows(true);
        const double norm = 1.0 / (static_cast<double>(nx) * nxi);
        for (int ix = 0; ix < nx; ++ix)
            for (int ixi = 0; ixi < nxi; ++ixi) {
                cplx m = std::pow(cplx(0.0, kx[ix]), ax) * std::pow(cplx(0.0, kxi[ixi]), axi) *
                         norm;
                sg.data()[static_cast<size_t>(ix) * nxi + ixi] *= m;
            }
        sg.fft_rows(false);
        sg.fft_cols(false);
        std::vector<double> vals;
        sg.store_real(vals);
        return vals;
    };

    auto dxv = derivative(1, 0);
    auto dxiv = derivative(0, 1);
    auto dxi2v = derivative(0, 2);
    GridSymbol out = a;
    for (int ix = 0; ix < nx; ++ix) {
        Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, a.x(ix));
        const double s = pot.grad(xv)(0) - cfg.gamma * (D * xv)(0);
        for (int ixi = 0; ixi < nxi; ++ixi) {
            const size_t id = static_cast<size_t>(ix) * nxi + ixi;
            out.values[id] = a.xi(ixi) * dxv[id] - s * dxiv[id] +
                             cfg.eps * cfg.eps * b2 * dxi2v[id];
        }
    }
    return out;
}

std::vector<DerivativeNormRow> scaled_derivative_norms(const GridSymbol& a, int maxN) {
    std::vector<DerivativeNormRow> rows;
    const int nx = a.nx, nxi = a.nxi;
    auto kx = gridk::fft_wavenumbers(nx, a.dx());
    auto kxi = gridk::fft_wavenumbers(nxi, a.dxi());
    SpectralGrid sg(nx, nxi);
    sg.load(a.values);
    sg.fft_cols(true);
    sg.fft_rows(true);
    std::vector<cplx> spectrum(sg.data(), sg.data() + static_cast<size_t>(nx) * nxi);
    const double norm = 1.0 / (static_cast<double>(nx) * nxi);
    std::vector<double> vals;
    for (int axi = 0; axi <= maxN; ++axi) {
        for (int ax = 0; ax + axi <= maxN; ++ax) {
            for (int ix = 0; ix < nx; ++ix)
                for (int ixi = 0; ixi < nxi; ++ixi) {
                    cplx m = std::pow(cplx(0.0, kxi[ixi] * a.eps), axi) *
                             std::pow(cplx(0.0, kx[ix] * a.eps), ax) * norm;
                    sg.data()[static_cast<size_t>(ix) * nxi + ixi] =
                        spectrum[static_cast<size_t>(ix) * nxi + ixi] * m;
                }
            sg.fft_rows(false);
            sg.fft_cols(false);
            sg.store_real(vals);
            DerivativeNormRow r;
            r.a_xi = axi;
            r.a_x = ax;
            const double cell = a.dx() * a.dxi();
            r.l1 = gridk::sum_abs(vals.data(), vals.size()) * cell;
            r.l2 = std::sqrt(gridk::sum_sq(vals.data(), vals.size()) * cell);
            r.sup = gridk::max_abs(vals.data(), vals.size());
            rows.push_back(r);
        }
    }
    return rows;
}

ConservationReport check_conservation_and_contraction(const std::vector<GridSymbol>& traj) {
    if (traj.empty()) throw std::invalid_argument("check_conservation: empty trajectory");
    ConservationReport rep;
    const double m0 = traj[0].mass();
    const double s0 = traj[0].norm_sup();
    const double l10 = traj[0].norm_l1();
    const double l20 = traj[0].norm_l2();
    for (const auto& g : traj) {
        rep.mass_drift_rel =
            std::max(rep.mass_drift_rel, std::abs(g.mass() - m0) / std::max(std::abs(m0), 1e-300));
        rep.sup_increase = std::max(rep.sup_increase, (g.norm_sup() - s0) / s0);
        rep.lp_ratio_max[0] = std::max(rep.lp_ratio_max[0], g.norm_l1() / l10);
        rep.lp_ratio_max[1] = std::max(rep.lp_ratio_max[1], g.norm_l2() / l20);
        rep.lp_ratio_max[2] = std::max(rep.lp_ratio_max[2], g.norm_sup() / s0);
        rep.rows_t_mass.push_back({g.t, g.mass()});
    }
    return rep;
}

}  // namespace subfp
