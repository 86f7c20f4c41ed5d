#pragma once

// Hot loops for the 2D phase-space grid: batched FFTs along either axis and
// elementwise complex multiplier passes. Each multiplier/transform kernel has
// a serial reference and an OpenMP variant; fp_evolve and the norm routines
// run the parallel ones, the parity tests and the benchmark compare both.

#include <complex>
#include <vector>

namespace subfp {

using cplx = std::complex<double>;

// Row-major layout: value(ix, ixi) = v[ix * nxi + ixi]; rows are xi-lines.
class SpectralGrid {
  public:
    SpectralGrid(int nx, int nxi);
    ~SpectralGrid();
    SpectralGrid(const SpectralGrid&) = delete;
    SpectralGrid& operator=(const SpectralGrid&) = delete;

    int nx() const { return nx_; }
    int nxi() const { return nxi_; }
    cplx* data() { return buf_; }
    const cplx* data() const { return buf_; }

    void load(const std::vector<double>& values, bool parallel = true);
    void store_real(std::vector<double>& out, bool parallel = true) const;

    // Unnormalized FFTs; inverse normalization is folded into multiplier tables.
    void fft_rows(bool forward);  // along xi (contiguous lines)
    void fft_cols(bool forward);  // along x (strided lines)

  private:
    int nx_, nxi_;
    cplx* buf_;
    void* plan_rows_fwd_;
    void* plan_rows_bwd_;
    void* plan_cols_fwd_;
    void* plan_cols_bwd_;
};

namespace gridk {

void multiply_table_serial(cplx* buf, const cplx* table, std::size_t count);
void multiply_table_omp(cplx* buf, const cplx* table, std::size_t count);

void scale_serial(double* buf, double c, std::size_t count);
void scale_omp(double* buf, double c, std::size_t count);

// Deterministic reductions (serial accumulation order).
double max_abs(const double* buf, std::size_t count);
double sum_abs(const double* buf, std::size_t count);
double sum(const double* buf, std::size_t count);
double sum_sq(const double* buf, std::size_t count);

// Fourier wavenumbers for length N, spacing d: k[j] = 2 pi f_j / (N d).
std::vector<double> fft_wavenumbers(int N, double d);

}  // namespace gridk

}  // namespace subfp
