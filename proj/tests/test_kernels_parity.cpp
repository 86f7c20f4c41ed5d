#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "subfp/grid_kernels.hpp"

using namespace subfp;

// the OpenMP kernels must match the serial references to within one rounding
// (codegen may contract to FMA differently between the two loops)

TEST_CASE("multiply_table parity") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1, 1);
    const std::size_t count = 513 * 257;
    std::vector<cplx> a(count), b(count), table(count);
    for (std::size_t i = 0; i < count; ++i) {
        a[i] = cplx(u(rng), u(rng));
        table[i] = cplx(u(rng), u(rng));
    }
    b = a;
    gridk::multiply_table_serial(a.data(), table.data(), count);
    gridk::multiply_table_omp(b.data(), table.data(), count);
    double worst = 0.0;
    for (std::size_t i = 0; i < count; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    CHECK(worst <= 4e-16);
}

TEST_CASE("scale parity") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> a(100001), b;
    for (auto& v : a) v = u(rng);
    b = a;
    gridk::scale_serial(a.data(), 0.9999371, a.size());
    gridk::scale_omp(b.data(), 0.9999371, b.size());
    CHECK(a == b);
}

TEST_CASE("spectral grid load/store parity and FFT roundtrip") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-1, 1);
    const int nx = 64, nxi = 96;
    std::vector<double> vals(static_cast<std::size_t>(nx) * nxi);
    for (auto& v : vals) v = u(rng);
    SpectralGrid g1(nx, nxi), g2(nx, nxi);
    g1.load(vals, false);
    g2.load(vals, true);
    for (std::size_t i = 0; i < vals.size(); ++i) CHECK(g1.data()[i] == g2.data()[i]);
    g1.fft_rows(true);
    g1.fft_rows(false);
    g1.fft_cols(true);
    g1.fft_cols(false);
    std::vector<double> out;
    g1.store_real(out);
    const double norm = static_cast<double>(nx) * nxi;
    for (std::size_t i = 0; i < vals.size(); ++i)
        CHECK(out[i] / norm == doctest::Approx(vals[i]).epsilon(1e-12));
}

TEST_CASE("wavenumbers") {
    auto k = gridk::fft_wavenumbers(8, 0.5);
    CHECK(k[0] == 0.0);
    CHECK(k[1] == doctest::Approx(2 * 3.14159265358979323846 / 4.0));
    CHECK(k[7] == doctest::Approx(-2 * 3.14159265358979323846 / 4.0));
}
