#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fracmhd {

/// Exponent of a fractional power A^kappa, restricted to (0, 1].
class FractionalExponent {
public:
    explicit FractionalExponent(double value);

    double value() const noexcept { return value_; }

    friend bool operator==(FractionalExponent, FractionalExponent) = default;

private:
    double value_;
};

/// lambda^kappa. Throws std::domain_error for lambda <= 0.
double fractional_power_multiplier(FractionalExponent kappa, double lambda);

/// exp(-t lambda^kappa). Throws std::domain_error for t < 0 or lambda <= 0.
double semigroup_multiplier(FractionalExponent kappa, double t, double lambda);

/// n / (n + lambda), the symbol of the mollifier n (n + A)^{-1}.
double mollifier_multiplier(long n, double lambda);

/// Scalar function of the spectral parameter.
using Multiplier = std::function<double(double)>;

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    int panels_per_decade = 4;
    /// Relative change allowed when the panel count doubles.
    double tolerance = 1e-10;
    int max_doublings = 6;
    /// Omitted head mass below lambda_min, relative to the evaluated integral.
    double head_tolerance = 1e-12;
    int max_decades = 320;
};

struct SpectralAtom {
    double lambda;
    double weight;
};

/// Spectral measure d||E_lambda w||^2 of an element w for a positive self-adjoint
/// operator. Either a finite list of atoms or a density on (0, lambda_max].
/// Immutable after construction.
class SpectralMeasure {
public:
    enum class Kind { Discrete, Continuous };

    static SpectralMeasure discrete(std::vector<SpectralAtom> atoms);

    /// Density rho(lambda) >= 0 on (0, lambda_max]. `rule` is a free-form descriptor
    /// kept for reports.
    static SpectralMeasure continuous(Multiplier density, double lambda_max,
                                      QuadratureOptions options = {},
                                      std::string rule = "gauss-legendre-8/log-panels");

    /// rho(lambda) = scale * lambda^exponent on (0, lambda_max]; exponent > -1.
    static SpectralMeasure power_law(double exponent, double lambda_max, double scale = 1.0,
                                     QuadratureOptions options = {});

    /// Density interpolated log-log linearly between rows (lambda, rho), power-law
    /// extrapolated below the first row, zero above the last.
    static SpectralMeasure tabulated(std::vector<std::pair<double, double>> rows,
                                     QuadratureOptions options = {});

    Kind kind() const noexcept { return kind_; }
    std::span<const SpectralAtom> atoms() const;
    double density(double lambda) const;
    double lambda_max() const noexcept { return lambda_max_; }
    const QuadratureOptions& options() const noexcept { return options_; }
    const std::string& rule() const noexcept { return rule_; }

    /// Rows of a tabulated density, empty for closed-form densities.
    std::span<const std::pair<double, double>> table() const { return table_; }

    double total_mass() const;

    /// Quadrature nodes as atoms. The head cut-off and panel density are the ones
    /// that resolve `reference` (typically the most decayed multiplier evaluated),
    /// so every multiplier bounded by 1 shares one consistent node set.
    SpectralMeasure discretize(const Multiplier& reference) const;

private:
    SpectralMeasure() = default;

    Kind kind_ = Kind::Discrete;
    std::vector<SpectralAtom> atoms_;
    std::shared_ptr<const Multiplier> density_;
    std::vector<std::pair<double, double>> table_;
    double lambda_max_ = 0.0;
    QuadratureOptions options_;
    std::string rule_;
};

/// Integral of multiplier(lambda)^2 against the measure. Exact sum for discrete
/// measures; adaptive log-panel Gauss-Legendre otherwise (QuadratureError when
/// panel doubling does not settle).
double weighted_norm_sq(const SpectralMeasure& measure, const Multiplier& multiplier);

/// sup_{s>0} s^{1/(2 kappa)} e^{-s}: sharp constant in
/// ||A^{1/2} e^{-t A^kappa} w|| <= C t^{-1/(2 kappa)} ||w||. Found by golden-section search.
double gradient_smoothing_constant(FractionalExponent kappa);

struct SmoothingAuditRow {
    double t;
    double contraction_ratio;  ///< ||e^{-tA^k} w|| / ||w||
    double smoothing_ratio;    ///< t ||A^k e^{-tA^k} w|| / ||w||
    double gradient_ratio;     ///< t^{1/(2k)} ||A^{1/2} e^{-tA^k} w|| / (C ||w||)
};

struct SmoothingViolation {
    std::string bound;
    double t;
    double ratio;
};

struct SmoothingAudit {
    double gradient_constant = 0.0;
    std::vector<SmoothingAuditRow> rows;
    double max_contraction_ratio = 0.0;
    double max_smoothing_ratio = 0.0;
    double max_gradient_ratio = 0.0;
    std::vector<SmoothingViolation> violations;

    bool passed() const noexcept { return violations.empty(); }
};

/// Checks the three semigroup bounds at every t of the grid. The contraction and
/// smoothing bounds are checked with zero tolerance; the gradient bound allows
/// `gradient_rounding` relative slack because its constant is found numerically.
SmoothingAudit audit_smoothing_bounds(const SpectralMeasure& measure, FractionalExponent kappa,
                                      std::span<const double> t_grid,
                                      double gradient_rounding = 1e-12);

/// Text table: a kind line ("discrete" / "continuous"), a column header, rows.
void write_measure(std::ostream& os, const SpectralMeasure& measure, int samples_per_decade = 16);
SpectralMeasure read_measure(std::istream& is, QuadratureOptions options = {});

}  // namespace fracmhd
