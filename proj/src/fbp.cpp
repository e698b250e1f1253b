#include <cmath>
#include <complex>
#include <sstream>

#include <fftw3.h>

#include "newtonscat/errors.hpp"
#include "newtonscat/xray.hpp"

namespace newtonscat {

namespace {

// RAII holder for one forward/backward real FFT pair of length n.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n)));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1)));
    fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* real() { return real_; }
  fftw_complex* spectrum() { return spec_; }
  int bins() const { return n_ / 2 + 1; }
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }

 private:
  int n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan fwd_, bwd_;
};

int padded_length(int m) {
  int n = 1;
  while (n < 2 * m) n *= 2;
  return n;
}

}  // namespace

FbpResult invert_fbp_2d(const Sinogram& sino, const ReconGrid& grid) {
  const int K = static_cast<int>(sino.angles.size()), M = static_cast<int>(sino.offsets.size());
  if (K < 1 || M < 2) throw DomainError("FBP needs at least one angle and two offsets");
  for (const auto& v : sino.values)
    if (v.rows() != K || v.cols() != M || !v.allFinite()) throw DomainError("sinogram values are malformed");

  FbpResult res;
  res.xs = grid.coordinates();
  const double d = sino.offset_spacing(), p0 = sino.offsets.front();
  const double reach = grid.half_width * std::sqrt(2.0);
  if (d > grid.spacing()) {
    std::ostringstream os;
    os << "offset spacing " << d << " exceeds pixel spacing " << grid.spacing();
    res.warnings.push_back(os.str());
  }
  if (4 * K < M) res.warnings.push_back("angular sampling is coarse for the offset resolution");
  if (reach > sino.offsets.back() + 1e-12) res.warnings.push_back("grid corners lie outside the sampled offsets");

  // Ram-Lak kernel sampled at spacing d, wrapped for circular convolution,
  // and a Hann window over the frequency axis.
  const int L = padded_length(M);
  RealFft fft(L);
  std::vector<std::complex<double>> filter(static_cast<std::size_t>(fft.bins()));
  for (int k = 0; k < L; ++k) {
    const int lag = k <= L / 2 ? k : k - L;
    double h = 0.0;
    if (lag == 0) h = 1.0 / (4.0 * d * d);
    else if (lag % 2 != 0) h = -1.0 / (M_PI * M_PI * lag * lag * d * d);
    fft.real()[k] = h;
  }
  fft.forward();
  for (int k = 0; k < fft.bins(); ++k) {
    const double window = 0.5 * (1.0 + std::cos(M_PI * k / (fft.bins() - 1)));
    filter[static_cast<std::size_t>(k)] =
        std::complex<double>(fft.spectrum()[k][0], fft.spectrum()[k][1]) * window;
  }

  const int N = grid.size;
  for (const auto& values : sino.values) {
    Eigen::MatrixXd image = Eigen::MatrixXd::Zero(N, N);
    std::vector<double> q(static_cast<std::size_t>(M));
    for (int a = 0; a < K; ++a) {
      for (int k = 0; k < L; ++k) fft.real()[k] = k < M ? values(a, k) : 0.0;
      fft.forward();
      for (int k = 0; k < fft.bins(); ++k) {
        const std::complex<double> z =
            std::complex<double>(fft.spectrum()[k][0], fft.spectrum()[k][1]) * filter[static_cast<std::size_t>(k)];
        fft.spectrum()[k][0] = z.real();
        fft.spectrum()[k][1] = z.imag();
      }
      fft.backward();
      for (int k = 0; k < M; ++k) q[static_cast<std::size_t>(k)] = fft.real()[k] * d / L;

      // Lines at angle phi have normal (-sin phi, cos phi).
      const double s = std::sin(sino.angles[static_cast<std::size_t>(a)]);
      const double c = std::cos(sino.angles[static_cast<std::size_t>(a)]);
      for (int i = 0; i < N; ++i) {
        const double y = res.xs[static_cast<std::size_t>(i)];
        for (int j = 0; j < N; ++j) {
          const double p = -res.xs[static_cast<std::size_t>(j)] * s + y * c;
          const double u = (p - p0) / d;
          const int k = static_cast<int>(std::floor(u));
          if (k < 0 || k >= M - 1) continue;
          const double w = u - k;
          image(i, j) += (1.0 - w) * q[static_cast<std::size_t>(k)] + w * q[static_cast<std::size_t>(k + 1)];
        }
      }
    }
    res.values.push_back(image * (M_PI / K));
  }
  return res;
}

}  // namespace newtonscat
