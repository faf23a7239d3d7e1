#include "fracmhd/transform.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace fracmhd {

namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

SpectralTransform::SpectralTransform(int n) : n_(n) {
    if (n < 2) throw std::invalid_argument("transform size must be at least 2");
    points_ = static_cast<std::size_t>(n) * n * n;
    std::lock_guard lock(planner_mutex());
    auto* raw = fftw_alloc_complex(points_);
    if (!raw) throw std::bad_alloc();
    buffer_ = reinterpret_cast<std::complex<double>*>(raw);
    forward_ = fftw_plan_dft_3d(n, n, n, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_3d(n, n, n, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!forward_ || !backward_) {
        fftw_free(raw);
        throw std::runtime_error("FFTW planning failed");
    }
}

SpectralTransform::~SpectralTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(backward_));
    fftw_free(reinterpret_cast<fftw_complex*>(buffer_));
}

void SpectralTransform::execute_to_physical() {
    fftw_execute(static_cast<fftw_plan>(backward_));
}

void SpectralTransform::execute_to_spectral() {
    fftw_execute(static_cast<fftw_plan>(forward_));
    const double scale = 1.0 / static_cast<double>(points_);
    for (std::size_t i = 0; i < points_; ++i) buffer_[i] *= scale;
}

SpectralTransform& transform_for(int n) {
    thread_local std::map<int, std::unique_ptr<SpectralTransform>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<SpectralTransform>(n);
    return *slot;
}

}  // namespace fracmhd
