#include "subfp/grid_kernels.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace subfp {

namespace {
std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}
}  // namespace

SpectralGrid::SpectralGrid(int nx, int nxi) : nx_(nx), nxi_(nxi) {
    if (nx < 2 || nxi < 2) throw std::invalid_argument("SpectralGrid: grid too small");
    buf_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(cplx) * nx * nxi));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_complex* b = reinterpret_cast<fftw_complex*>(buf_);
    int n_row[1] = {nxi};
    plan_rows_fwd_ = fftw_plan_many_dft(1, n_row, nx, b, nullptr, 1, nxi, b, nullptr, 1, nxi,
                                        FFTW_FORWARD, FFTW_ESTIMATE);
    plan_rows_bwd_ = fftw_plan_many_dft(1, n_row, nx, b, nullptr, 1, nxi, b, nullptr, 1, nxi,
                                        FFTW_BACKWARD, FFTW_ESTIMATE);
    int n_col[1] = {nx};
    plan_cols_fwd_ = fftw_plan_many_dft(1, n_col, nxi, b, nullptr, nxi, 1, b, nullptr, nxi, 1,
                                        FFTW_FORWARD, FFTW_ESTIMATE);
    plan_cols_bwd_ = fftw_plan_many_dft(1, n_col, nxi, b, nullptr, nxi, 1, b, nullptr, nxi, 1,
                                        FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_rows_fwd_ || !plan_rows_bwd_ || !plan_cols_fwd_ || !plan_cols_bwd_)
        throw std::runtime_error("SpectralGrid: FFTW planning failed");
}

SpectralGrid::~SpectralGrid() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_rows_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_rows_bwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_cols_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_cols_bwd_));
    fftw_free(buf_);
}

void SpectralGrid::load(const std::vector<double>& values, bool parallel) {
    if (values.size() != static_cast<std::size_t>(nx_) * nxi_)
        throw std::invalid_argument("SpectralGrid::load: size mismatch");
    const long count = static_cast<long>(values.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (long i = 0; i < count; ++i) buf_[i] = cplx(values[i], 0.0);
}

void SpectralGrid::store_real(std::vector<double>& out, bool parallel) const {
    out.resize(static_cast<std::size_t>(nx_) * nxi_);
    const long count = static_cast<long>(out.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (long i = 0; i < count; ++i) out[i] = buf_[i].real();
}

void SpectralGrid::fft_rows(bool forward) {
    fftw_execute(static_cast<fftw_plan>(forward ? plan_rows_fwd_ : plan_rows_bwd_));
}

void SpectralGrid::fft_cols(bool forward) {
    fftw_execute(static_cast<fftw_plan>(forward ? plan_cols_fwd_ : plan_cols_bwd_));
}

namespace gridk {

void multiply_table_serial(cplx* buf, const cplx* table, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) buf[i] *= table[i];
}

void multiply_table_omp(cplx* buf, const cplx* table, std::size_t count) {
    const long n = static_cast<long>(count);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) buf[i] *= table[i];
}

void scale_serial(double* buf, double c, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) buf[i] *= c;
}

void scale_omp(double* buf, double c, std::size_t count) {
    const long n = static_cast<long>(count);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) buf[i] *= c;
}

double max_abs(const double* buf, std::size_t count) {
    double m = 0.0;
    for (std::size_t i = 0; i < count; ++i) m = std::max(m, std::abs(buf[i]));
    return m;
}

double sum_abs(const double* buf, std::size_t count) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += std::abs(buf[i]);
    return s;
}

double sum(const double* buf, std::size_t count) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += buf[i];
    return s;
}

double sum_sq(const double* buf, std::size_t count) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += buf[i] * buf[i];
    return s;
}

std::vector<double> fft_wavenumbers(int N, double d) {
    std::vector<double> k(N);
    const double base = 2.0 * 3.14159265358979323846 / (N * d);
    for (int j = 0; j < N; ++j) {
        const int f = (j <= N / 2) ? j : j - N;
        k[j] = base * f;
    }
    return k;
}

}  // namespace gridk

}  // namespace subfp
