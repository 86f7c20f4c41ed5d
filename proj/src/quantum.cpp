#include "subfp/quantum.hpp"

#include <fftw3.h>

#include <cmath>
#include <stdexcept>

#include "subfp/grid_kernels.hpp"

namespace subfp {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int m) { return m > 0 && (m & (m - 1)) == 0; }

// Batched unnormalized 1D FFTs (rows of a row-major 2M x 2M block).
void fft_rows_inplace(Eigen::MatrixXcd& rows_major, bool forward) {
    // Eigen is column-major by default; operate on a row-major copy buffer.
    const int nrows = static_cast<int>(rows_major.rows());
    const int len = static_cast<int>(rows_major.cols());
    std::vector<cplx> buf(static_cast<size_t>(nrows) * len);
    for (int r = 0; r < nrows; ++r)
        for (int c = 0; c < len; ++c) buf[static_cast<size_t>(r) * len + c] = rows_major(r, c);
    int n[1] = {len};
    fftw_plan plan = fftw_plan_many_dft(
        1, n, nrows, reinterpret_cast<fftw_complex*>(buf.data()), nullptr, 1, len,
        reinterpret_cast<fftw_complex*>(buf.data()), nullptr, 1, len,
        forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (int r = 0; r < nrows; ++r)
        for (int c = 0; c < len; ++c) rows_major(r, c) = buf[static_cast<size_t>(r) * len + c];
}

}  // namespace

void QuantGrid::validate(double xi_support_needed) const {
    if (!is_pow2(M)) throw std::invalid_argument("QuantGrid: M must be a power of two");
    if (!(h > 0.0) || h > 1.0 + 1e-12)
        throw std::invalid_argument("QuantGrid: h must lie in (0, 1]");
    if (xi_window() < xi_support_needed)
        throw std::invalid_argument("QuantGrid: momentum window too small for symbol support");
}

double ObservableMatrix::hermiticity_defect() const {
    const double na = a.norm();
    return (a - a.adjoint()).norm() / std::max(na, 1e-300);
}

namespace {

// Assemble the matrix from midpoint samples V(p, m) = a(xbar_p, xi_m),
// p = 0..2M-1, m = 0..2M-1, xi_m = (m - M) dxi.
ObservableMatrix assemble_from_samples(Eigen::MatrixXcd V, const QuantGrid& qg) {
    const int M = qg.M;
    const int twoM = 2 * M;
    // F_p(d) = sum_m V(p,m) e^{i pi d (m - M) / M}; backward FFT gives
    // Y_p(d) = sum_m V(p,m) e^{+2 pi i d m / (2M)}, so F_p(d) = (-1)^d Y_p(d mod 2M).
    fft_rows_inplace(V, false);
    ObservableMatrix out;
    out.grid = qg;
    out.a.resize(M, M);
    const double scale = qg.dx() * qg.dxi() / (2.0 * kPi * qg.h);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
            const int p = j + k;
            const int d = j - k;
            const int dm = ((d % twoM) + twoM) % twoM;
            const double sgn = (d % 2 == 0) ? 1.0 : -1.0;
            out.a(j, k) = scale * sgn * V(p, dm);
        }
    // real symbols quantize to Hermitian matrices; symmetrize roundoff away
    out.a = 0.5 * (out.a + out.a.adjoint()).eval();
    return out;
}

}  // namespace

ObservableMatrix weyl_quantize_fn(const std::function<double(double, double)>& a,
                                  const QuantGrid& qg) {
    qg.validate(0.0);
    const int M = qg.M;
    const int twoM = 2 * M;
    Eigen::MatrixXcd V(twoM, twoM);
    for (int p = 0; p < twoM; ++p) {
        const double xbar = -qg.L + p * qg.dx() / 2.0;
        for (int m = 0; m < twoM; ++m) {
            const double xi = (m - M) * qg.dxi();
            V(p, m) = a(xbar, xi);
        }
    }
    return assemble_from_samples(std::move(V), qg);
}

ObservableMatrix weyl_quantize(const GridSymbol& a, const QuantGrid& qg) {
    qg.validate(0.0);
    if (qg.L > a.L + 1e-12)
        throw std::invalid_argument("weyl_quantize: quantization box exceeds the symbol grid");
    const int M = qg.M;
    const int twoM = 2 * M;
    // trigonometric coefficients of the periodic grid data
    SpectralGrid sg(a.nx, a.nxi);
    sg.load(a.values);
    sg.fft_cols(true);
    sg.fft_rows(true);
    Eigen::MatrixXcd coef(a.nx, a.nxi);
    for (int ix = 0; ix < a.nx; ++ix)
        for (int ixi = 0; ixi < a.nxi; ++ixi)
            coef(ix, ixi) = sg.data()[static_cast<size_t>(ix) * a.nxi + ixi] /
                            (static_cast<double>(a.nx) * a.nxi);
    auto kx = gridk::fft_wavenumbers(a.nx, a.dx());
    auto kxi = gridk::fft_wavenumbers(a.nxi, a.dxi());
    // evaluation matrices; DFT phases count from the box corner -L
    Eigen::MatrixXcd Ex(twoM, a.nx), Exi(twoM, a.nxi);
    for (int p = 0; p < twoM; ++p) {
        const double xb = -qg.L + p * qg.dx() / 2.0;
        for (int ix = 0; ix < a.nx; ++ix) Ex(p, ix) = std::polar(1.0, kx[ix] * (xb + a.L));
    }
    for (int m = 0; m < twoM; ++m) {
        const double xi = (m - M) * qg.dxi();
        // the momentum window may exceed the classical box; the symbol decays
        // below 1e-12 at the box edge, so samples outside are zero, not the
        // periodic images of the trig series
        if (std::abs(xi) >= a.L) {
            Exi.row(m).setZero();
            continue;
        }
        for (int ixi = 0; ixi < a.nxi; ++ixi)
            Exi(m, ixi) = std::polar(1.0, kxi[ixi] * (xi + a.L));
    }
    Eigen::MatrixXcd V = Ex * coef * Exi.transpose();
    return assemble_from_samples(std::move(V), qg);
}

LindbladGenerator LindbladGenerator::make(const QuantGrid& qg, const PotentialSpec& pot,
                                          const JumpSpec& jump, double gamma) {
    if (pot.n() != 1 || jump.n() != 1)
        throw std::invalid_argument("LindbladGenerator: discretization is 1-dimensional");
    const int M = qg.M;
    LindbladGenerator gen;
    gen.grid = qg;
    gen.gamma = gamma;
    gen.h = qg.h;

    // P = p^w(x, hD): circulant kinetic part + diagonal potential
    auto kfreq = gridk::fft_wavenumbers(M, qg.dx());
    Eigen::VectorXcd diag(M);
    for (int m = 0; m < M; ++m) {
        const double xi = qg.h * kfreq[m];
        diag(m) = 0.5 * xi * xi;
    }
    // circulant row: c(r) = (1/M) sum_m diag(m) e^{i k_m dx r}
    Eigen::VectorXcd crow(M);
    {
        std::vector<cplx> buf(M);
        for (int m = 0; m < M; ++m) buf[m] = diag(m);
        fftw_plan plan = fftw_plan_dft_1d(M, reinterpret_cast<fftw_complex*>(buf.data()),
                                          reinterpret_cast<fftw_complex*>(buf.data()),
                                          FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
        for (int r = 0; r < M; ++r) crow(r) = buf[r] / static_cast<double>(M);
    }
    gen.p_matrix.resize(M, M);
    for (int j = 0; j < M; ++j)
        for (int l = 0; l < M; ++l) {
            const int r = ((j - l) % M + M) % M;
            gen.p_matrix(j, l) = crow(r);
        }
    for (int j = 0; j < M; ++j) {
        Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, qg.x(j));
        gen.p_matrix(j, j) += pot.value(xv);
    }
    gen.p_matrix = 0.5 * (gen.p_matrix + gen.p_matrix.adjoint()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gen.p_matrix);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("LindbladGenerator: eigendecomposition failed");
    gen.hamiltonian_eigs = es.eigenvalues();
    gen.hamiltonian_vecs = es.eigenvectors();

    // dissipator entry (a,b): sum_j (2 l_j(x_a) conj(l_j(x_b)) - |l_j(x_a)|^2 - |l_j(x_b)|^2)
    const int J = static_cast<int>(jump.coeffs.rows());
    Eigen::VectorXcd lv(M);
    gen.dissipator = Eigen::MatrixXcd::Zero(M, M);
    for (int jj = 0; jj < J; ++jj) {
        for (int a = 0; a < M; ++a) lv(a) = jump.coeffs(jj, 0) * qg.x(a);
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b)
                gen.dissipator(a, b) += 2.0 * lv(a) * std::conj(lv(b)) - std::norm(lv(a)) -
                                        std::norm(lv(b));
    }
    return gen;
}

ObservableMatrix lindblad_evolve(const ObservableMatrix& A0, double t,
                                 const LindbladGenerator& gen, double dt) {
    if (t < 0.0) throw std::invalid_argument("lindblad_evolve: t must be >= 0");
    ObservableMatrix out = A0;
    if (t == 0.0) return out;
    const int M = gen.grid.M;
    const int steps = std::max(1, static_cast<int>(std::ceil(t / dt)));
    const double step = t / steps;

    // A -> e^{isP/h} A e^{-isP/h} solves d_t A = (i/h)[P, A]
    auto make_u = [&](double s) {
        Eigen::VectorXcd ph(M);
        for (int m = 0; m < M; ++m)
            ph(m) = std::polar(1.0, s * gen.hamiltonian_eigs(m) / gen.h);
        return Eigen::MatrixXcd(gen.hamiltonian_vecs * ph.asDiagonal() *
                                gen.hamiltonian_vecs.adjoint());
    };
    Eigen::MatrixXcd Uh = make_u(0.5 * step);
    Eigen::MatrixXcd Uf = make_u(step);

    Eigen::MatrixXcd D(M, M);
    const double w = gen.gamma / (2.0 * gen.h) * step;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) D(a, b) = std::exp(w * gen.dissipator(a, b));

    Eigen::MatrixXcd A = Uh * A0.a * Uh.adjoint();
    for (int s = 0; s < steps; ++s) {
        A = A.cwiseProduct(D);
        if (s + 1 < steps) A = Uf * A * Uf.adjoint();
    }
    out.a = Uh * A * Uh.adjoint();
    return out;
}

Eigen::MatrixXcd lindblad_apply(const Eigen::MatrixXcd& A, const LindbladGenerator& gen) {
    const cplx ih(0.0, 1.0 / gen.h);
    Eigen::MatrixXcd out = ih * (gen.p_matrix * A - A * gen.p_matrix);
    out += (gen.gamma / (2.0 * gen.h)) * gen.dissipator.cwiseProduct(A);
    return out;
}

double schatten_norm(const ObservableMatrix& A, SchattenP p) {
    if (p == SchattenP::Two) return A.a.norm();
    if (A.hermiticity_defect() <= 1e-10) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.a, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        if (p == SchattenP::One) return ev.cwiseAbs().sum();
        return ev.cwiseAbs().maxCoeff();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.a.adjoint() * A.a,
                                                       Eigen::EigenvaluesOnly);
    Eigen::VectorXd sv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    if (p == SchattenP::One) return sv.sum();
    return sv.maxCoeff();
}

CorrespondenceResult correspondence_error(const GridSymbol& a0, double t,
                                          const PotentialSpec& pot, const JumpSpec& jump,
                                          const FPConfig& cfg, const QuantGrid& qg,
                                          double dt_q) {
    ObservableMatrix A0 = weyl_quantize(a0, qg);
    LindbladGenerator gen = LindbladGenerator::make(qg, pot, jump, cfg.gamma);
    ObservableMatrix At = (t > 0.0) ? lindblad_evolve(A0, t, gen, dt_q) : A0;
    GridSymbol at = (t > 0.0) ? fp_evolve(a0, t, pot, jump, cfg) : a0;
    ObservableMatrix Qt = weyl_quantize(at, qg);
    ObservableMatrix diff{At.a - Qt.a, qg};
    CorrespondenceResult res;
    res.err_trace = schatten_norm(diff, SchattenP::One);
    res.err_hs = schatten_norm(diff, SchattenP::Two);
    res.classical_hs = schatten_norm(Qt, SchattenP::Two);
    return res;
}

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& h_err,
                       const std::vector<double>& weights) {
    if (h_err.size() < 2) throw std::invalid_argument("scaling_fit: need at least 2 points");
    for (const auto& [h, e] : h_err)
        if (!(h > 0.0) || !(e > 0.0))
            throw std::invalid_argument("scaling_fit: degenerate data (nonpositive h or err)");
    const size_t m = h_err.size();
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < m; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double x = std::log(h_err[i].first), y = std::log(h_err[i].second);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    const double det = sw * sxx - sx * sx;
    if (std::abs(det) < 1e-14) throw std::invalid_argument("scaling_fit: degenerate abscissae");
    ScalingFit f;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    double rss = 0;
    for (size_t i = 0; i < m; ++i) {
        const double r =
            std::log(h_err[i].second) - f.slope * std::log(h_err[i].first) - f.intercept;
        rss += r * r;
    }
    f.residual = std::sqrt(rss / m);
    return f;
}

}  // namespace subfp
