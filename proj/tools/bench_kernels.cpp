// Timing comparison of the serial reference kernels against the OpenMP
// variants, plus the batched FFT passes they bracket.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "subfp/grid_kernels.hpp"

using namespace subfp;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now();
        f();
        best = std::min(best, now() - t0);
    }
    return best;
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial", "omp", "speedup");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    for (int n : {256, 512, 1024}) {
        const std::size_t count = static_cast<std::size_t>(n) * n;
        std::vector<cplx> buf(count), table(count);
        for (auto& v : buf) v = cplx(u(rng), u(rng));
        for (auto& v : table) v = cplx(u(rng), u(rng));
        std::vector<cplx> work = buf;

        double ts = time_best_of(5, [&] {
            work = buf;
            gridk::multiply_table_serial(work.data(), table.data(), count);
        });
        double tp = time_best_of(5, [&] {
            work = buf;
            gridk::multiply_table_omp(work.data(), table.data(), count);
        });
        std::printf("%-22s %dx%d %8.3f ms %7.3f ms %7.2fx\n", "multiply_table", n, n, ts * 1e3,
                    tp * 1e3, ts / tp);

        std::vector<double> rbuf(count);
        for (auto& v : rbuf) v = u(rng);
        ts = time_best_of(5, [&] { gridk::scale_serial(rbuf.data(), 1.0000001, count); });
        tp = time_best_of(5, [&] { gridk::scale_omp(rbuf.data(), 1.0000001, count); });
        std::printf("%-22s %dx%d %8.3f ms %7.3f ms %7.2fx\n", "scale", n, n, ts * 1e3, tp * 1e3,
                    ts / tp);

        SpectralGrid sg(n, n);
        std::vector<double> real(count);
        for (auto& v : real) v = u(rng);
        sg.load(real);
        double tf = time_best_of(3, [&] {
            sg.fft_rows(true);
            sg.fft_rows(false);
            sg.fft_cols(true);
            sg.fft_cols(false);
        });
        std::printf("%-22s %dx%d %8.3f ms (4 batched FFT passes)\n", "fft_roundtrip", n, n,
                    tf * 1e3);
    }
    return 0;
}
