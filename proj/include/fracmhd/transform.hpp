#pragma once

#include <complex>
#include <span>

namespace fracmhd {

/// Dense N^3 complex-to-complex FFT pair on a private FFTW buffer.
///
/// Convention: f(x) = sum_k f_hat(k) e^{i k.x}; `to_physical` evaluates that sum on the
/// uniform grid, `to_spectral` inverts it (includes the 1/N^3 factor). Not shareable
/// across threads; use `transform_for`, which hands out one instance per thread and size.
class SpectralTransform {
public:
    explicit SpectralTransform(int n);
    ~SpectralTransform();

    SpectralTransform(const SpectralTransform&) = delete;
    SpectralTransform& operator=(const SpectralTransform&) = delete;

    int size() const noexcept { return n_; }
    std::size_t points() const noexcept { return points_; }

    /// Writable input buffer for `execute_to_physical` / `execute_to_spectral`.
    std::span<std::complex<double>> buffer() noexcept { return {buffer_, points_}; }

    /// In place on `buffer()`: spectral coefficients -> complex grid values.
    void execute_to_physical();
    /// In place on `buffer()`: grid values -> spectral coefficients (normalized).
    void execute_to_spectral();

private:
    int n_;
    std::size_t points_;
    std::complex<double>* buffer_ = nullptr;
    void* forward_ = nullptr;
    void* backward_ = nullptr;
};

SpectralTransform& transform_for(int n);

}  // namespace fracmhd
