#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace bohmchsh::detail {
namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, Axis, FftDirection>;

// Plans are built with FFTW_ESTIMATE | FFTW_UNALIGNED so the chosen codelets
// never depend on timing or on the alignment of the array being transformed;
// repeated transforms are bit-identical. Planning is not thread-safe in FFTW,
// execution through fftw_execute_dft is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const PlanKey& key) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const auto [nx, ny, axis, direction] = key;
    std::vector<complex> scratch(nx * ny);
    auto* buffer = reinterpret_cast<fftw_complex*>(scratch.data());
    const int sign = direction == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    if (axis == Axis::b) {
      const int n = static_cast<int>(ny);
      plan = fftw_plan_many_dft(1, &n, static_cast<int>(nx), buffer, nullptr, 1, n, buffer, nullptr, 1, n,
                                sign, flags);
    } else {
      const int n = static_cast<int>(nx);
      const int stride = static_cast<int>(ny);
      plan = fftw_plan_many_dft(1, &n, stride, buffer, nullptr, stride, 1, buffer, nullptr, stride, 1, sign,
                                flags);
    }
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void fft_axis(std::span<complex> data, std::size_t nx, std::size_t ny, Axis axis, FftDirection direction) {
  fftw_plan plan = plan_cache().get({nx, ny, axis, direction});
  auto* buffer = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buffer, buffer);
}

}  // namespace bohmchsh::detail
