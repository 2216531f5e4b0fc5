#include "fft_plan.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace sslr::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

using PlanKey = std::tuple<int, int, int>;  // kind, length, frames

std::map<PlanKey, std::shared_ptr<const FftPlan>>& plan_cache() {
  static std::map<PlanKey, std::shared_ptr<const FftPlan>> cache;
  return cache;
}

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_plan make_frame_plan(int length, int frames, bool inverse) {
  std::vector<std::complex<double>> in(std::size_t(length) * frames);
  std::vector<std::complex<double>> out(in.size());
  auto* pin = reinterpret_cast<fftw_complex*>(in.data());
  auto* pout = reinterpret_cast<fftw_complex*>(out.data());
  const int n[] = {length};
  if (!inverse) {
    return fftw_plan_many_dft(1, n, frames, pin, nullptr, 1, length, pout,
                              nullptr, frames, 1, FFTW_FORWARD, kPlanFlags);
  }
  return fftw_plan_many_dft(1, n, frames, pin, nullptr, frames, 1, pout,
                            nullptr, 1, length, FFTW_BACKWARD, kPlanFlags);
}

fftw_plan make_real_plan(int length, bool inverse) {
  std::vector<double> real(length);
  std::vector<std::complex<double>> half(length / 2 + 1);
  auto* phalf = reinterpret_cast<fftw_complex*>(half.data());
  if (!inverse)
    return fftw_plan_dft_r2c_1d(length, real.data(), phalf, kPlanFlags);
  return fftw_plan_dft_c2r_1d(length, phalf, real.data(), kPlanFlags);
}

std::shared_ptr<const FftPlan> cached(PlanKey key, auto&& make) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto& cache = plan_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  fftw_plan raw = make();
  if (raw == nullptr) throw std::runtime_error("FFTW plan creation failed");
  auto plan = std::make_shared<const FftPlan>(raw);
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

FftPlan::~FftPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan_);
}

void FftPlan::execute(const std::complex<double>* in,
                      std::complex<double>* out) const {
  // FFTW does not modify the input of an out-of-place complex DFT.
  fftw_execute_dft(plan_,
                   reinterpret_cast<fftw_complex*>(
                       const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void FftPlan::execute(const double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(plan_, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void FftPlan::execute(std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(plan_, reinterpret_cast<fftw_complex*>(in), out);
}

std::shared_ptr<const FftPlan> frame_dft_plan(int length, int frames,
                                              bool inverse) {
  return cached({inverse ? 1 : 0, length, frames},
                [&] { return make_frame_plan(length, frames, inverse); });
}

std::shared_ptr<const FftPlan> real_dft_plan(int length, bool inverse) {
  return cached({inverse ? 3 : 2, length, 0},
                [&] { return make_real_plan(length, inverse); });
}

}  // namespace sslr::detail
