#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "fracmhd/spectral_core.hpp"

namespace fracmhd {

/// Periodic box [0, L)^3 resolved by N Fourier modes per axis. Integer wavenumbers
/// lie in [-N/2, N/2); physical wavevectors are (2 pi / L) times those.
class WaveGrid {
public:
    WaveGrid(int n, double length, double dealias_fraction = 2.0 / 3.0);

    int n() const noexcept { return n_; }
    double length() const noexcept { return length_; }
    double dealias_fraction() const noexcept { return dealias_fraction_; }

    std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_ * n_; }
    double volume() const noexcept { return length_ * length_ * length_; }
    double fundamental() const noexcept;
    /// Largest |wavenumber index| kept after a quadratic product.
    int dealias_cutoff() const noexcept;

    int wavenumber(int array_index) const noexcept {
        return array_index < n_ / 2 ? array_index : array_index - n_;
    }
    std::size_t linear(int i, int j, int l) const noexcept {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + l;
    }
    std::array<int, 3> wavenumbers(std::size_t idx) const noexcept;
    /// Index of the mode -k.
    std::size_t partner(std::size_t idx) const noexcept;
    int index_sq(std::size_t idx) const noexcept;
    /// Any component equals -N/2; such modes have no real solenoidal counterpart.
    bool is_nyquist(std::size_t idx) const noexcept;
    /// Every |component| <= dealias_cutoff().
    bool in_dealias_band(std::size_t idx) const noexcept;
    /// |k|^2 in physical units for every mode (0 at k = 0).
    const std::vector<double>& eigenvalues() const;

    friend bool operator==(const WaveGrid& a, const WaveGrid& b) noexcept {
        return a.n_ == b.n_ && a.length_ == b.length_ &&
               a.dealias_fraction_ == b.dealias_fraction_;
    }

private:
    struct Tables {
        std::vector<double> eigenvalues;
        std::vector<std::array<std::int16_t, 3>> waves;
        std::vector<std::uint32_t> partner;
        std::vector<std::uint8_t> flags;  // bit 0: Nyquist, bit 1: in dealias band
    };

    int n_;
    double length_;
    double dealias_fraction_;
    std::shared_ptr<const Tables> tables_;
};

using Vec3c = std::array<std::complex<double>, 3>;

/// Unconstrained coefficients on a grid, dense in the array index order of WaveGrid.
class CoefficientMap {
public:
    explicit CoefficientMap(WaveGrid grid);

    const WaveGrid& grid() const noexcept { return grid_; }
    Vec3c& operator[](std::size_t idx) { return data_[idx]; }
    const Vec3c& operator[](std::size_t idx) const { return data_[idx]; }
    std::span<Vec3c> data() noexcept { return data_; }
    std::span<const Vec3c> data() const noexcept { return data_; }

private:
    WaveGrid grid_;
    std::vector<Vec3c> data_;
};

/// Real, mean-free, divergence-free periodic vector field in Fourier coefficients.
/// Instances are only produced by leray_project, arithmetic that preserves the
/// invariants, and the validating loader.
class SolenoidalField {
public:
    static SolenoidalField zero(const WaveGrid& grid);

    const WaveGrid& grid() const noexcept { return grid_; }
    const Vec3c& operator[](std::size_t idx) const { return data_[idx]; }
    std::span<const Vec3c> coefficients() const noexcept { return data_; }

    /// Per-mode real multiplier indexed like the grid.
    SolenoidalField multiplied(std::span<const double> per_mode) const;
    /// Multiplier given as a function of |k|^2; the k = 0 mode stays zero.
    SolenoidalField apply_multiplier(const Multiplier& of_eigenvalue) const;
    SolenoidalField scaled(double factor) const;

    SolenoidalField& operator+=(const SolenoidalField& other);
    SolenoidalField& operator-=(const SolenoidalField& other);
    friend SolenoidalField operator+(SolenoidalField a, const SolenoidalField& b) { return a += b; }
    friend SolenoidalField operator-(SolenoidalField a, const SolenoidalField& b) { return a -= b; }

    /// max_k |k . u(k)| / (|k| |u(k)|) over nonzero modes.
    double max_divergence_ratio() const;
    /// max_k |u(-k) - conj(u(k))|, absolute.
    double max_reality_defect() const;
    bool is_zero() const;

    friend bool operator==(const SolenoidalField& a, const SolenoidalField& b) {
        return a.grid_ == b.grid_ && a.data_ == b.data_;
    }

private:
    SolenoidalField(WaveGrid grid, std::vector<Vec3c> data);

    friend SolenoidalField leray_project(const CoefficientMap& raw);
    friend SolenoidalField read_field(std::istream& is);

    WaveGrid grid_;
    std::vector<Vec3c> data_;
};

/// u - k (k.u) / |k|^2 per mode; zeroes k = 0 and Nyquist modes. Rejects input whose
/// Hermitian defect exceeds 1e-12 of its largest coefficient, and returns an exactly
/// Hermitian result.
SolenoidalField leray_project(const CoefficientMap& raw);

/// Physical grid values of each component, index order as WaveGrid::linear.
using PhysicalVector = std::array<std::vector<double>, 3>;
/// d_j v_i stored at [3 * i + j].
using PhysicalTensor = std::array<std::vector<double>, 9>;

PhysicalVector to_physical(const SolenoidalField& f);
PhysicalTensor gradient_physical(const SolenoidalField& f);

/// Forward transform of a real vector field, exact Hermitian symmetrization, 2/3-rule
/// truncation and Leray projection.
SolenoidalField project_physical(const WaveGrid& grid, const PhysicalVector& values);

/// sum_j u_j d_j v pointwise.
PhysicalVector advect(const PhysicalVector& u, const PhysicalTensor& grad_v);

/// P(u . grad v) computed pseudo-spectrally with 2/3-rule dealiasing.
SolenoidalField convective_term(const SolenoidalField& u, const SolenoidalField& v);

/// L^2 inner product over the box (Parseval: volume * sum Re(u . conj v)).
double inner(const SolenoidalField& a, const SolenoidalField& b);
double l2_norm(const SolenoidalField& f);

/// (integral |f|^p)^(1/p) by grid quadrature; p = infinity gives the grid maximum.
double lp_norm(const SolenoidalField& f, double p);

/// (volume * sum |k|^{2 kappa} |u(k)|^2)^(1/2) = ||A^{kappa/2} f||.
double fractional_sobolev_norm(const SolenoidalField& f, FractionalExponent kappa);

struct InterpolationAudit {
    bool skipped = false;
    double ratio = 0.0;  ///< ||f||_4 / (||f||^{1-3/(4k)} ||A^{k/2} f||^{3/(4k)})
    double l4 = 0.0;
    double l2 = 0.0;
    double sobolev = 0.0;
};

/// Requires kappa in (3/4, 1]; zero fields are reported as skipped.
InterpolationAudit audit_interpolation(const SolenoidalField& f, double kappa);

/// Portable Gaussian stream: mt19937_64 words mapped to 53-bit uniforms, Box-Muller.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed);
    double next();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Random orientation and phase per mode, |u(k)| = amplitude(index_sq) for modes in
/// the dealiasing band with amplitude > 0. Deterministic in the seed.
SolenoidalField random_solenoidal_profile(const WaveGrid& grid, std::uint64_t seed,
                                          const std::function<double(int)>& amplitude);

/// |u(k)| = |k|^spectral_slope for 0 < |k| <= k_cutoff (physical units), inside the
/// dealiasing band.
SolenoidalField random_solenoidal(const WaveGrid& grid, std::uint64_t seed, double spectral_slope,
                                  double k_cutoff);

/// Discrete spectral measure of f for the periodic Stokes operator: atoms at
/// lambda = |k|^2 with the L^2 mass of each shell.
SpectralMeasure spectral_measure_of(const SolenoidalField& f);

/// Rows "kx,ky,kz,re_ux,im_ux,re_uy,im_uy,re_uz,im_uz" for nonzero modes, preceded by a
/// "# grid N=.. L=.. dealias=.." line.
void write_field(std::ostream& os, const SolenoidalField& f);
SolenoidalField read_field(std::istream& is);

}  // namespace fracmhd
