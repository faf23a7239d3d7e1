#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracmhd/mild_solver.hpp"
#include "fracmhd/solenoidal.hpp"
#include "fracmhd/spectral_core.hpp"

namespace fracmhd {

class DecayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InsufficientSamples : public DecayError {
public:
    using DecayError::DecayError;
};
class NonpositiveValue : public DecayError {
public:
    using DecayError::DecayError;
};
class WindowTooNarrow : public DecayError {
public:
    using DecayError::DecayError;
};
class HypothesisViolation : public DecayError {
public:
    using DecayError::DecayError;
};

struct DecaySample {
    double t;
    double value;
};

/// Samples with strictly increasing t > 0 and value >= 0.
class DecayCurve {
public:
    DecayCurve() = default;
    DecayCurve(std::vector<DecaySample> samples, std::string grid_descriptor);

    const std::vector<DecaySample>& samples() const noexcept { return samples_; }
    const std::string& grid_descriptor() const noexcept { return grid_; }
    std::size_t size() const noexcept { return samples_.size(); }

private:
    std::vector<DecaySample> samples_;
    std::string grid_;
};

/// `count` points log-uniform on [t_lo, t_hi], both ends included.
std::vector<double> log_grid(double t_lo, double t_hi, int count);

/// value(t) = ||e^{-t A^kappa} w|| from the spectral measure of w. All t share one
/// quadrature node set, so the curve is exactly non-increasing.
DecayCurve linear_decay_curve(const SpectralMeasure& measure, FractionalExponent kappa,
                              std::span<const double> t_grid);

/// sqrt(||e^{-tA^a} u0||^2 + ||e^{-tA^b} B0||^2) evaluated mode by mode.
DecayCurve linear_pair_curve(const SolenoidalField& u0, const SolenoidalField& B0,
                             FractionalExponent alpha, FractionalExponent beta,
                             std::span<const double> t_grid);

struct SlopeFit {
    double t_lo;
    double t_hi;
    double gamma_hat;  ///< minus the least-squares slope of ln value against ln t
    double intercept;
    double residual;   ///< max |ln value - fitted line|
    std::size_t samples;

    bool power_law(double residual_threshold = 0.05) const noexcept {
        return residual <= residual_threshold;
    }
};

/// Least squares on samples with t in [t_lo, t_hi]. Needs >= 5 such samples, all > 0.
SlopeFit fit_loglog_slope(const DecayCurve& curve, double t_lo, double t_hi);

struct DecayPrediction {
    double gamma;
    double alpha;
    double expected() const noexcept;  ///< min(gamma, 1/(4 alpha))
};

struct Window {
    double lo;
    double hi;
};

/// [t_lo, 0.1 / lambda_min^alpha] with lambda_min the smallest nonzero |k|^2 of the grid.
/// WindowTooNarrow when the upper end is below 10 t_lo.
Window algebraic_window(const WaveGrid& grid, FractionalExponent alpha, double t_lo = 1.0);

struct Con1Report {
    double constant = 0.0;    ///< sup_t t^gamma ||(e^{-tA^a}u0, e^{-tA^b}B0)||
    double argmax_t = 0.0;
    double tail_slope = 0.0;  ///< log-log slope of t^gamma value over the last samples
    bool bounded = false;
};

/// HypothesisViolation when gamma is outside the admissible range for (alpha, beta).
/// Bounded means the tail slope over the last max(5, 10%) samples is <= 0.01.
Con1Report audit_con1(const SolenoidalField& u0, const SolenoidalField& B0, double alpha,
                      double beta, double gamma, std::span<const double> t_grid);

struct DecayExperimentOptions {
    double t_lo = 1.0;
    /// Upper window end; defaults to the algebraic cutoff.
    std::optional<double> t_hi;
    int fit_samples = 24;
    double slope_tolerance = 0.05;
    double residual_threshold = 0.05;
    double control_tolerance = 0.01;
    bool run_control = true;
    double c_led = 1.0;
};

struct DecayReport {
    DecayPrediction prediction;
    double expected = 0.0;
    Window window{};
    SlopeFit fit{};             ///< Euclidean pair norm, from the ledger
    SlopeFit fit_max_norm{};    ///< max(||u||, ||B||)
    SlopeFit fit_snapshots{};   ///< Euclidean pair norm, from physical-grid snapshots
    std::optional<SlopeFit> control_fit;
    SlopeFit linear_prediction_fit{};  ///< mode-by-mode linear curve of the mollified data
    Con1Report con1;
    DecayCurve curve;
    std::optional<DecayCurve> control_curve;
    EnergyLedger ledger;
    std::optional<EnergyLedger> control_ledger;
    bool slope_pass = false;
    bool control_pass = true;
    bool pass = false;
    std::string caveat;
};

/// Runs the mollified system over the algebraic window (T = window end), fits the decay of
/// ||(u, B)(t)|| and compares it with prediction.expected().
DecayReport nonlinear_decay_experiment(const SolenoidalField& u0, const SolenoidalField& B0,
                                       const SolverParams& params, const DecayPrediction& prediction,
                                       const DecayExperimentOptions& options = {});

struct CalibratedData {
    SolenoidalField field;
    double head_scale;    ///< mass multiplier applied to the lowest shell
    double linear_slope;  ///< fitted slope of the discrete linear curve over the window
};

/// Shell masses follow the density lambda^{2 kappa gamma - 1} integrated over Voronoi cells
/// of the |k|^2 values in the dealiasing band; the lowest shell is rescaled by bisection so
/// the discrete linear curve sampled like the experiment has slope exactly gamma over the
/// window. Total energy ||f||^2 = energy. Random orientations from `seed`.
CalibratedData calibrated_field(const WaveGrid& grid, double gamma, FractionalExponent kappa,
                                Window window, int fit_samples, double energy, std::uint64_t seed);

void write_curve(std::ostream& os, const DecayCurve& curve);
/// Header and one row: alpha,beta,gamma,expected,fitted,residual,window_lo,window_hi,pass.
void write_decay_summary(std::ostream& os, double alpha, double beta, const DecayReport& report);

}  // namespace fracmhd
