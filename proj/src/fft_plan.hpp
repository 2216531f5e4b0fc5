#pragma once

#include <complex>
#include <memory>

// Thin RAII layer over FFTW. Plans are created once per shape under a global
// lock and executed through the new-array interface, which is thread safe.

typedef struct fftw_plan_s* fftw_plan;

namespace sslr::detail {

class FftPlan {
 public:
  explicit FftPlan(fftw_plan plan) : plan_(plan) {}
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void execute(const std::complex<double>* in, std::complex<double>* out) const;
  void execute(const double* in, std::complex<double>* out) const;
  // Overwrites `in`.
  void execute(std::complex<double>* in, double* out) const;

 private:
  fftw_plan plan_;
};

/// Unnormalized DFT of `frames` contiguous frames of `length` samples. The
/// output is written column-major: bin f of frame q lands at q + frames * f.
/// The inverse plan reads that layout and writes contiguous frames.
std::shared_ptr<const FftPlan> frame_dft_plan(int length, int frames,
                                              bool inverse);

/// Real-to-half-complex (forward) or half-complex-to-real (inverse) plan.
std::shared_ptr<const FftPlan> real_dft_plan(int length, bool inverse);

}  // namespace sslr::detail
