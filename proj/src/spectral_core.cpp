#include "fracmhd/spectral_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

namespace fracmhd {

FractionalExponent::FractionalExponent(double value) : value_(value) {
    if (!(value > 0.0 && value <= 1.0)) {
        throw std::domain_error("fractional exponent must lie in (0, 1], got " +
                                std::to_string(value));
    }
}

double fractional_power_multiplier(FractionalExponent kappa, double lambda) {
    if (!(lambda > 0.0)) throw std::domain_error("spectral parameter must be positive");
    if (kappa.value() == 1.0) return lambda;
    return std::pow(lambda, kappa.value());
}

double semigroup_multiplier(FractionalExponent kappa, double t, double lambda) {
    if (!(t >= 0.0)) throw std::domain_error("semigroup time must be nonnegative");
    return std::exp(-t * fractional_power_multiplier(kappa, lambda));
}

double mollifier_multiplier(long n, double lambda) {
    if (n < 1) throw std::domain_error("mollifier index must be a positive integer");
    if (!(lambda > 0.0)) throw std::domain_error("spectral parameter must be positive");
    const double nn = static_cast<double>(n);
    return nn / (nn + lambda);
}

namespace {

struct PanelRule {
    std::array<double, 8> x;
    std::array<double, 8> w;
};

const PanelRule& gauss_legendre_8() {
    static const PanelRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 8>;
        PanelRule r{};
        const auto& a = G::abscissa();
        const auto& wt = G::weights();
        for (std::size_t i = 0; i < a.size(); ++i) {
            r.x[2 * i] = -a[i];
            r.w[2 * i] = wt[i];
            r.x[2 * i + 1] = a[i];
            r.w[2 * i + 1] = wt[i];
        }
        return r;
    }();
    return rule;
}

template <class Visit>
void for_each_node(double lo, double hi, int panels, Visit&& visit) {
    const auto& rule = gauss_legendre_8();
    const double ratio = std::pow(hi / lo, 1.0 / panels);
    double a = lo;
    for (int p = 0; p < panels; ++p) {
        const double b = (p + 1 == panels) ? hi : a * ratio;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (b + a);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            visit(mid + half * rule.x[i], half * rule.w[i]);
        }
        a = b;
    }
}

struct HeadScan {
    double value = 0.0;
    double lambda_min = 0.0;
};

// Integrates f over (0, lambda_max] decade by decade from the top, stopping once
// the geometric extrapolation of the omitted head is below head_tolerance * value.
HeadScan scan_decades(const Multiplier& f, double lambda_max, int panels_per_decade,
                      const QuadratureOptions& options) {
    const int decade_cap = std::min(
        options.max_decades, static_cast<int>(std::floor(std::log10(lambda_max / 1e-300))));
    HeadScan scan;
    double hi = lambda_max;
    double previous = 0.0;
    for (int decade = 0; decade < decade_cap; ++decade) {
        const double lo = hi / 10.0;
        double d = 0.0;
        for_each_node(lo, hi, panels_per_decade, [&](double x, double w) { d += w * f(x); });
        scan.value += d;
        scan.lambda_min = lo;
        if (decade >= 1) {
            double head;
            if (d == 0.0) {
                head = 0.0;
            } else if (previous > 0.0 && d < previous) {
                const double r = d / previous;
                head = d * r / (1.0 - r);
            } else {
                head = std::numeric_limits<double>::infinity();
            }
            if (scan.value > 0.0 && head <= options.head_tolerance * scan.value) return scan;
        }
        previous = d;
        hi = lo;
    }
    if (scan.value == 0.0) return scan;
    throw QuadratureError("spectral head mass does not converge towards lambda = 0");
}

struct AdaptiveResult {
    double value = 0.0;
    double lambda_min = 0.0;
    int panels_per_decade = 0;
};

AdaptiveResult integrate_adaptive(const Multiplier& f, double lambda_max,
                                  const QuadratureOptions& options) {
    int panels = std::max(1, options.panels_per_decade);
    HeadScan coarse = scan_decades(f, lambda_max, panels, options);
    for (int k = 0; k < options.max_doublings; ++k) {
        HeadScan fine = scan_decades(f, lambda_max, 2 * panels, options);
        const double scale = std::max(std::abs(fine.value), std::numeric_limits<double>::min());
        if (std::abs(fine.value - coarse.value) <= options.tolerance * scale) {
            return {fine.value, std::min(fine.lambda_min, coarse.lambda_min), 2 * panels};
        }
        coarse = fine;
        panels *= 2;
    }
    throw QuadratureError("spectral quadrature did not converge under panel doubling");
}

double interpolate_loglog(const std::vector<std::pair<double, double>>& rows, double lambda) {
    if (lambda > rows.back().first) return 0.0;
    auto segment = [](const std::pair<double, double>& a, const std::pair<double, double>& b,
                      double x) {
        if (a.second > 0.0 && b.second > 0.0) {
            const double slope = std::log(b.second / a.second) / std::log(b.first / a.first);
            return a.second * std::pow(x / a.first, slope);
        }
        const double s = (x - a.first) / (b.first - a.first);
        return a.second + s * (b.second - a.second);
    };
    if (rows.size() == 1) return lambda == rows.front().first ? rows.front().second : 0.0;
    if (lambda <= rows.front().first) {
        const double v = segment(rows[0], rows[1], lambda);
        return std::max(v, 0.0);
    }
    auto it = std::lower_bound(rows.begin(), rows.end(), lambda,
                               [](const auto& row, double x) { return row.first < x; });
    if (it->first == lambda) return it->second;
    return segment(*(it - 1), *it, lambda);
}

}  // namespace

SpectralMeasure SpectralMeasure::discrete(std::vector<SpectralAtom> atoms) {
    for (const auto& a : atoms) {
        if (!(a.lambda > 0.0)) throw std::invalid_argument("spectral atom with lambda <= 0");
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
            throw std::invalid_argument("spectral atom with negative or non-finite weight");
        }
    }
    SpectralMeasure m;
    m.kind_ = Kind::Discrete;
    m.atoms_ = std::move(atoms);
    m.lambda_max_ = 0.0;
    for (const auto& a : m.atoms_) m.lambda_max_ = std::max(m.lambda_max_, a.lambda);
    m.rule_ = "exact-sum";
    return m;
}

SpectralMeasure SpectralMeasure::continuous(Multiplier density, double lambda_max,
                                            QuadratureOptions options, std::string rule) {
    if (!density) throw std::invalid_argument("continuous measure needs a density");
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw std::invalid_argument("continuous measure needs a finite positive lambda_max");
    }
    SpectralMeasure m;
    m.kind_ = Kind::Continuous;
    m.density_ = std::make_shared<const Multiplier>(std::move(density));
    m.lambda_max_ = lambda_max;
    m.options_ = options;
    m.rule_ = std::move(rule);
    return m;
}

SpectralMeasure SpectralMeasure::power_law(double exponent, double lambda_max, double scale,
                                           QuadratureOptions options) {
    if (!(exponent > -1.0)) throw std::invalid_argument("power-law density needs exponent > -1");
    if (!(scale >= 0.0)) throw std::invalid_argument("power-law density needs scale >= 0");
    return continuous([exponent, scale](double l) { return scale * std::pow(l, exponent); },
                      lambda_max, options, "gauss-legendre-8/log-panels");
}

SpectralMeasure SpectralMeasure::tabulated(std::vector<std::pair<double, double>> rows,
                                           QuadratureOptions options) {
    if (rows.empty()) throw std::invalid_argument("tabulated density needs at least one row");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!(rows[i].first > 0.0)) throw std::invalid_argument("density row with lambda <= 0");
        if (!(rows[i].second >= 0.0)) throw std::invalid_argument("negative density value");
        if (i > 0 && !(rows[i].first > rows[i - 1].first)) {
            throw std::invalid_argument("density rows must have increasing lambda");
        }
    }
    const double lambda_max = rows.back().first;
    auto shared = std::make_shared<const std::vector<std::pair<double, double>>>(rows);
    SpectralMeasure m = continuous(
        [shared](double l) { return interpolate_loglog(*shared, l); }, lambda_max, options,
        "gauss-legendre-8/log-panels");
    m.table_ = std::move(rows);
    return m;
}

std::span<const SpectralAtom> SpectralMeasure::atoms() const {
    if (kind_ != Kind::Discrete) throw std::logic_error("atoms() on a continuous measure");
    return atoms_;
}

double SpectralMeasure::density(double lambda) const {
    if (kind_ != Kind::Continuous) throw std::logic_error("density() on a discrete measure");
    if (!(lambda > 0.0) || lambda > lambda_max_) return 0.0;
    return (*density_)(lambda);
}

double SpectralMeasure::total_mass() const {
    return weighted_norm_sq(*this, [](double) { return 1.0; });
}

SpectralMeasure SpectralMeasure::discretize(const Multiplier& reference) const {
    if (kind_ == Kind::Discrete) return *this;
    const Multiplier& rho = *density_;
    auto with_ref = [&](double l) {
        const double m = reference(l);
        return rho(l) * m * m;
    };
    const AdaptiveResult ref = integrate_adaptive(with_ref, lambda_max_, options_);
    const AdaptiveResult mass = integrate_adaptive(rho, lambda_max_, options_);
    const double lambda_min = std::min(ref.lambda_min, mass.lambda_min);
    const int panels_per_decade = std::max(ref.panels_per_decade, mass.panels_per_decade);

    std::vector<SpectralAtom> atoms;
    const int decades = static_cast<int>(std::ceil(std::log10(lambda_max_ / lambda_min) - 1e-9));
    double hi = lambda_max_;
    for (int d = 0; d < decades; ++d) {
        const double lo = hi / 10.0;
        for_each_node(lo, hi, panels_per_decade, [&](double x, double w) {
            const double weight = w * rho(x);
            if (weight > 0.0) atoms.push_back({x, weight});
        });
        hi = lo;
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const SpectralAtom& a, const SpectralAtom& b) { return a.lambda < b.lambda; });
    return discrete(std::move(atoms));
}

double weighted_norm_sq(const SpectralMeasure& measure, const Multiplier& multiplier) {
    if (measure.kind() == SpectralMeasure::Kind::Discrete) {
        double sum = 0.0;
        for (const auto& a : measure.atoms()) {
            if (a.weight == 0.0) continue;
            const double m = multiplier(a.lambda);
            sum += m * m * a.weight;
        }
        return sum;
    }
    auto integrand = [&](double l) {
        const double m = multiplier(l);
        return measure.density(l) * m * m;
    };
    return integrate_adaptive(integrand, measure.lambda_max(), measure.options()).value;
}

double gradient_smoothing_constant(FractionalExponent kappa) {
    const double p = 1.0 / (2.0 * kappa.value());
    auto log_objective = [p](double s) { return p * std::log(s) - s; };
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 1e-8;
    double b = 64.0;
    double c = b - golden * (b - a);
    double d = a + golden * (b - a);
    double fc = log_objective(c);
    double fd = log_objective(d);
    for (int i = 0; i < 200 && (b - a) > 1e-15 * (1.0 + std::abs(c)); ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = log_objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = log_objective(d);
        }
    }
    return std::exp(std::max(fc, fd));
}

SmoothingAudit audit_smoothing_bounds(const SpectralMeasure& measure, FractionalExponent kappa,
                                      std::span<const double> t_grid, double gradient_rounding) {
    if (t_grid.empty()) throw std::invalid_argument("audit needs a nonempty t grid");
    for (double t : t_grid) {
        if (!(t > 0.0)) throw std::invalid_argument("audit times must be positive");
    }
    const double k = kappa.value();
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
    const SpectralMeasure nodes = measure.discretize(
        [&](double l) { return semigroup_multiplier(kappa, t_max, l); });

    SmoothingAudit audit;
    audit.gradient_constant = gradient_smoothing_constant(kappa);

    double mass = 0.0;
    for (const auto& a : nodes.atoms()) mass += a.weight;
    const double norm = std::sqrt(mass);

    for (double t : t_grid) {
        double decayed = 0.0;
        double smoothed = 0.0;
        double gradient = 0.0;
        for (const auto& a : nodes.atoms()) {
            if (a.weight == 0.0) continue;
            const double log_l = std::log(a.lambda);
            const double power = fractional_power_multiplier(kappa, a.lambda);
            const double damp = -2.0 * t * power;
            decayed += a.weight * std::exp(damp);
            smoothed += a.weight * std::exp(2.0 * k * log_l + damp);
            gradient += a.weight * std::exp(log_l + damp);
        }
        SmoothingAuditRow row{t, 0.0, 0.0, 0.0};
        if (norm > 0.0) {
            row.contraction_ratio = std::sqrt(decayed) / norm;
            row.smoothing_ratio = t * std::sqrt(smoothed) / norm;
            row.gradient_ratio =
                std::pow(t, 1.0 / (2.0 * k)) * std::sqrt(gradient) / (audit.gradient_constant * norm);
        }
        audit.max_contraction_ratio = std::max(audit.max_contraction_ratio, row.contraction_ratio);
        audit.max_smoothing_ratio = std::max(audit.max_smoothing_ratio, row.smoothing_ratio);
        audit.max_gradient_ratio = std::max(audit.max_gradient_ratio, row.gradient_ratio);
        if (row.contraction_ratio > 1.0) {
            audit.violations.push_back({"contraction", t, row.contraction_ratio});
        }
        if (row.smoothing_ratio > 1.0) {
            audit.violations.push_back({"smoothing", t, row.smoothing_ratio});
        }
        if (row.gradient_ratio > 1.0 + gradient_rounding) {
            audit.violations.push_back({"gradient", t, row.gradient_ratio});
        }
        audit.rows.push_back(row);
    }
    return audit;
}

}  // namespace fracmhd
