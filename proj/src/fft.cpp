#include "uhe/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace uhe {
namespace {

// One forward/backward plan pair per transform size, with its own aligned
// buffer.  FFTW planning is not thread-safe and FFTW_ESTIMATE plans are
// deterministic, so a single mutex around lookup + execute keeps results
// reproducible regardless of call order.
struct PlanPair {
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

std::mutex g_mutex;
std::map<int, PlanPair>& plan_cache() {
  static std::map<int, PlanPair> cache;
  return cache;
}

PlanPair& plans_for(int n) {
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  PlanPair p;
  p.buf = fftw_alloc_complex(static_cast<size_t>(n));
  if (!p.buf) throw std::bad_alloc();
  p.fwd = fftw_plan_dft_1d(n, p.buf, p.buf, FFTW_FORWARD, FFTW_ESTIMATE);
  p.bwd = fftw_plan_dft_1d(n, p.buf, p.buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  return cache.emplace(n, p).first->second;
}

}  // namespace

void apply_momentum_phases(Eigen::VectorXcd& psi, const Eigen::VectorXcd& phases) {
  const int n = static_cast<int>(psi.size());
  if (phases.size() != psi.size())
    throw std::invalid_argument("apply_momentum_phases: phase/state size mismatch");

  std::lock_guard<std::mutex> lock(g_mutex);
  PlanPair& p = plans_for(n);
  auto* buf = reinterpret_cast<std::complex<double>*>(p.buf);
  for (int i = 0; i < n; ++i) buf[i] = psi[i];
  fftw_execute(p.fwd);
  for (int i = 0; i < n; ++i) buf[i] *= phases[i];
  fftw_execute(p.bwd);
  const double scale = 1.0 / static_cast<double>(n);
  for (int i = 0; i < n; ++i) psi[i] = buf[i] * scale;
}

}  // namespace uhe
