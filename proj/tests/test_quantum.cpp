#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fftw3.h>

#include <cmath>
#include <random>

#include "subfp/grid_kernels.hpp"
#include "subfp/quantum.hpp"

using namespace subfp;
using C = std::complex<double>;

TEST_CASE("quantization of 1 and x") {
    QuantGrid qg{128, 3.0, 1.0 / 16};
    auto one = weyl_quantize_fn([](double, double) { return 1.0; }, qg);
    CHECK((one.a - Eigen::MatrixXcd::Identity(qg.M, qg.M)).norm() < 1e-12);
    auto ax = weyl_quantize_fn([](double x, double) { return x; }, qg);
    for (int j = 0; j < qg.M; j += 17)
        CHECK(ax.a(j, j).real() == doctest::Approx(qg.x(j)).epsilon(1e-12));
    CHECK((ax.a - Eigen::MatrixXcd(ax.a.diagonal().asDiagonal())).norm() < 1e-10);
}

TEST_CASE("quantization of a windowed xi acts as the FFT derivative on packets") {
    QuantGrid qg{128, 3.0, 1.0 / 16};
    const double W = qg.xi_window();
    auto xiw = [&](double, double xi) {
        const double c = 0.8 * W;
        if (std::abs(xi) >= c) return 0.0;
        const double u = xi / c;
        const double edge = std::exp(1.0 - 1.0 / (1.0 - std::pow(u, 10)));
        return xi * std::min(1.0, 3.0 * edge);
    };
    auto Axi = weyl_quantize_fn(xiw, qg);
    auto ks = gridk::fft_wavenumbers(qg.M, qg.dx());
    for (double xi0 : {0.3, 0.8, -0.5}) {
        Eigen::VectorXcd u(qg.M);
        for (int j = 0; j < qg.M; ++j) {
            const double x = qg.x(j);
            u(j) = std::exp(-x * x / (2 * 0.5 * 0.5)) * std::polar(1.0, xi0 * x / qg.h);
        }
        std::vector<cplx> buf(qg.M);
        for (int j = 0; j < qg.M; ++j) buf[j] = u(j);
        fftw_plan pf = fftw_plan_dft_1d(qg.M, reinterpret_cast<fftw_complex*>(buf.data()),
                                        reinterpret_cast<fftw_complex*>(buf.data()),
                                        FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_execute(pf);
        fftw_destroy_plan(pf);
        for (int m = 0; m < qg.M; ++m) buf[m] *= qg.h * ks[m] / static_cast<double>(qg.M);
        fftw_plan pb = fftw_plan_dft_1d(qg.M, reinterpret_cast<fftw_complex*>(buf.data()),
                                        reinterpret_cast<fftw_complex*>(buf.data()),
                                        FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_execute(pb);
        fftw_destroy_plan(pb);
        Eigen::VectorXcd hdu(qg.M);
        for (int j = 0; j < qg.M; ++j) hdu(j) = buf[j];
        CHECK((Axi.a * u - hdu).norm() / hdu.norm() < 1e-6);
    }
}

TEST_CASE("HS identity and grid/fn consistency") {
    QuantGrid qg{128, 3.0, 1.0 / 16};
    auto gauss = [](double x, double xi) {
        return std::exp(-(x * x + xi * xi) / (2 * 0.3 * 0.3));
    };
    auto Af = weyl_quantize_fn(gauss, qg);
    const double expect = 0.3 * std::sqrt(M_PI) / std::sqrt(2 * M_PI * qg.h);
    CHECK(schatten_norm(Af, SchattenP::Two) == doctest::Approx(expect).epsilon(1e-3));
    CHECK(Af.hermiticity_defect() < 1e-10);

    GridSpec gs{3.0, 256, 256};
    FPConfig cfg = FPConfig::make(0.5, qg.h, gs, 0.01, 1.0);
    auto a0 = GridSymbol::sampled(gs, cfg, gauss);
    auto Ag = weyl_quantize(a0, qg);
    CHECK((Ag.a - Af.a).norm() / Af.a.norm() < 1e-7);
}

TEST_CASE("schatten norms") {
    QuantGrid q64{64, 3.0, 0.25};
    ObservableMatrix I{Eigen::MatrixXcd::Identity(64, 64), q64};
    CHECK(schatten_norm(I, SchattenP::One) == doctest::Approx(64.0));
    CHECK(schatten_norm(I, SchattenP::Two) == doctest::Approx(8.0));
    CHECK(schatten_norm(I, SchattenP::Inf) == doctest::Approx(1.0));
    // rank one uu*
    Eigen::VectorXcd u = Eigen::VectorXcd::Random(64);
    u.normalize();
    ObservableMatrix R{u * u.adjoint(), q64};
    CHECK(schatten_norm(R, SchattenP::One) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(schatten_norm(R, SchattenP::Two) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(schatten_norm(R, SchattenP::Inf) == doctest::Approx(1.0).epsilon(1e-10));
    // non-hermitian falls back to singular values
    Eigen::MatrixXcd N = Eigen::MatrixXcd::Zero(64, 64);
    N(0, 1) = 3.0;
    ObservableMatrix NN{N, q64};
    CHECK(schatten_norm(NN, SchattenP::One) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(schatten_norm(NN, SchattenP::Inf) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("lindblad evolution: unitality, hermiticity, contraction") {
    QuantGrid qg{64, 3.0, 1.0 / 8};
    auto gen = LindbladGenerator::make(qg, PotentialSpec::harmonic(1), JumpSpec::position(1),
                                       0.5);
    // dissipator multiplier has nonpositive real part
    for (int a = 0; a < qg.M; a += 7)
        for (int b = 0; b < qg.M; b += 5) CHECK(gen.dissipator(a, b).real() <= 1e-12);
    ObservableMatrix I{Eigen::MatrixXcd::Identity(qg.M, qg.M), qg};
    auto It = lindblad_evolve(I, 1.0, gen, 0.01);
    CHECK((It.a - I.a).norm() < 1e-10);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0, 1);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXcd X(qg.M, qg.M);
        for (int i = 0; i < qg.M; ++i)
            for (int j = 0; j < qg.M; ++j) X(i, j) = C(g(rng), g(rng));
        ObservableMatrix A{0.5 * (X + X.adjoint()), qg};
        const double h1 = schatten_norm(A, SchattenP::One);
        const double h2 = schatten_norm(A, SchattenP::Two);
        const double t = (rep % 3 == 0) ? 0.1 : (rep % 3 == 1 ? 1.0 : 5.0);
        auto At = lindblad_evolve(A, t, gen, 0.05);
        CHECK(At.hermiticity_defect() < 1e-10);
        CHECK(schatten_norm(At, SchattenP::Two) <= h2 * (1 + 1e-8));
        CHECK(schatten_norm(At, SchattenP::One) <= h1 * (1 + 1e-8));
    }
    // gamma = 0: pure Heisenberg conjugation preserves the HS norm
    auto gen0 = LindbladGenerator::make(qg, PotentialSpec::harmonic(1), JumpSpec::position(1),
                                        0.0);
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Random(qg.M, qg.M);
    ObservableMatrix A{0.5 * (X + X.adjoint()), qg};
    auto At = lindblad_evolve(A, 1.0, gen0, 0.01);
    CHECK(schatten_norm(At, SchattenP::Two) ==
          doctest::Approx(schatten_norm(A, SchattenP::Two)).epsilon(1e-10));
}

TEST_CASE("lindblad self-convergence: halving dt gains ~4x") {
    QuantGrid qg{64, 3.0, 1.0 / 8};
    auto pot = PotentialSpec::harmonic_sine(1, 1.0, 0.3, 2.0);
    auto gen = LindbladGenerator::make(qg, pot, JumpSpec::position(1), 0.5);
    auto a0 = weyl_quantize_fn(
        [](double x, double xi) { return std::exp(-((x - 0.3) * (x - 0.3) + xi * xi) / 0.2); },
        qg);
    auto r1 = lindblad_evolve(a0, 1.0, gen, 0.08);
    auto r2 = lindblad_evolve(a0, 1.0, gen, 0.04);
    auto r3 = lindblad_evolve(a0, 1.0, gen, 0.02);
    const double e12 = (r1.a - r2.a).norm();
    const double e23 = (r2.a - r3.a).norm();
    CHECK(e12 / e23 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("correspondence pipeline: t = 0 and linearity") {
    const double h = 1.0 / 16;
    QuantGrid qg{128, 3.0, h};
    GridSpec gs{3.0, 256, 256};
    FPConfig cfg = FPConfig::make(0.5, h, gs, 0.01, 1.0);
    auto pot = PotentialSpec::harmonic(1);
    auto jump = JumpSpec::position(1);
    auto a0 = GridSymbol::sampled(gs, cfg, [](double x, double xi) {
        return std::exp(-((x - 0.2) * (x - 0.2) + xi * xi) / 0.18);
    });
    auto r0 = correspondence_error(a0, 0.0, pot, jump, cfg, qg, 0.01);
    CHECK(r0.err_trace == 0.0);
    CHECK(r0.err_hs == 0.0);

    auto b0 = GridSymbol::sampled(gs, cfg, [](double x, double xi) {
        return std::exp(-(x * x + (xi - 0.3) * (xi - 0.3)) / 0.22);
    });
    GridSymbol s0 = a0;
    for (size_t i = 0; i < s0.values.size(); ++i) s0.values[i] += b0.values[i];
    // linearity of quantization + both evolutions
    auto qa = weyl_quantize(fp_evolve(a0, 0.5, pot, jump, cfg), qg);
    auto qb = weyl_quantize(fp_evolve(b0, 0.5, pot, jump, cfg), qg);
    auto qs = weyl_quantize(fp_evolve(s0, 0.5, pot, jump, cfg), qg);
    CHECK((qs.a - qa.a - qb.a).norm() <= 1e-9 * (qa.a.norm() + qb.a.norm()));
    auto gen = LindbladGenerator::make(qg, pot, jump, 0.5);
    auto Aa = lindblad_evolve(weyl_quantize(a0, qg), 0.5, gen, 0.01);
    auto Ab = lindblad_evolve(weyl_quantize(b0, qg), 0.5, gen, 0.01);
    auto As = lindblad_evolve(weyl_quantize(s0, qg), 0.5, gen, 0.01);
    CHECK((As.a - Aa.a - Ab.a).norm() <= 1e-9 * (Aa.a.norm() + Ab.a.norm()));
}

TEST_CASE("scaling_fit") {
    std::vector<std::pair<double, double>> pts;
    for (int e = 2; e <= 6; ++e) pts.push_back({std::pow(2.0, -e), std::pow(2.0, -0.5 * e)});
    CHECK(scaling_fit(pts).slope == doctest::Approx(0.5).epsilon(1e-12));
    // err = 3h + h^2: slope tends to 1 as the window shrinks toward h -> 0
    std::vector<std::pair<double, double>> p2, p2small;
    for (int e = 1; e <= 4; ++e) {
        const double h = std::pow(2.0, -e);
        p2.push_back({h, 3 * h + h * h});
    }
    for (int e = 6; e <= 9; ++e) {
        const double h = std::pow(2.0, -e);
        p2small.push_back({h, 3 * h + h * h});
    }
    const double s_wide = scaling_fit(p2).slope;
    const double s_small = scaling_fit(p2small).slope;
    CHECK(std::abs(s_small - 1.0) < std::abs(s_wide - 1.0));
    CHECK(s_small == doctest::Approx(1.0).epsilon(1e-2));
    CHECK_THROWS(scaling_fit({{0.5, 1.0}}));
    CHECK_THROWS(scaling_fit({{0.5, 1.0}, {0.5, 0.0}}));
}
