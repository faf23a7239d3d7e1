#include "fracmhd/solenoidal.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fracmhd/tabular.hpp"
#include "fracmhd/transform.hpp"

namespace fracmhd {

WaveGrid::WaveGrid(int n, double length, double dealias_fraction)
    : n_(n), length_(length), dealias_fraction_(dealias_fraction) {
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("grid size N must be even and >= 4");
    if (n > 1024) throw std::invalid_argument("grid size N must be <= 1024");
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw std::invalid_argument("box length must be positive and finite");
    }
    if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0)) {
        throw std::invalid_argument("dealias fraction must lie in (0, 1]");
    }
    auto tables = std::make_shared<Tables>();
    const std::size_t total = size();
    tables->eigenvalues.resize(total);
    tables->waves.resize(total);
    tables->partner.resize(total);
    tables->flags.resize(total);
    const double k0sq = fundamental() * fundamental();
    const int cut = dealias_cutoff();
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l, ++idx) {
                const std::array<int, 3> k = {wavenumber(i), wavenumber(j), wavenumber(l)};
                tables->waves[idx] = {static_cast<std::int16_t>(k[0]), static_cast<std::int16_t>(k[1]),
                                      static_cast<std::int16_t>(k[2])};
                tables->eigenvalues[idx] = k0sq * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
                tables->partner[idx] = static_cast<std::uint32_t>(linear((n - i) % n, (n - j) % n, (n - l) % n));
                const bool nyq = k[0] == -n / 2 || k[1] == -n / 2 || k[2] == -n / 2;
                const bool band = std::abs(k[0]) <= cut && std::abs(k[1]) <= cut && std::abs(k[2]) <= cut;
                tables->flags[idx] = static_cast<std::uint8_t>((nyq ? 1 : 0) | (band ? 2 : 0));
            }
        }
    }
    tables_ = std::move(tables);
}

double WaveGrid::fundamental() const noexcept { return 2.0 * std::numbers::pi / length_; }

int WaveGrid::dealias_cutoff() const noexcept {
    // Strictly below fraction * N / 2, so the 2/3 rule leaves no aliased mode in band.
    return static_cast<int>(std::ceil(dealias_fraction_ * n_ / 2.0 - 1e-9)) - 1;
}

std::array<int, 3> WaveGrid::wavenumbers(std::size_t idx) const noexcept {
    const auto& w = tables_->waves[idx];
    return {w[0], w[1], w[2]};
}

std::size_t WaveGrid::partner(std::size_t idx) const noexcept { return tables_->partner[idx]; }

int WaveGrid::index_sq(std::size_t idx) const noexcept {
    const auto& w = tables_->waves[idx];
    return w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
}

bool WaveGrid::is_nyquist(std::size_t idx) const noexcept { return (tables_->flags[idx] & 1) != 0; }

bool WaveGrid::in_dealias_band(std::size_t idx) const noexcept { return (tables_->flags[idx] & 2) != 0; }

const std::vector<double>& WaveGrid::eigenvalues() const { return tables_->eigenvalues; }

CoefficientMap::CoefficientMap(WaveGrid grid) : grid_(std::move(grid)), data_(grid_.size()) {}

SolenoidalField::SolenoidalField(WaveGrid grid, std::vector<Vec3c> data)
    : grid_(std::move(grid)), data_(std::move(data)) {}

SolenoidalField SolenoidalField::zero(const WaveGrid& grid) {
    return SolenoidalField(grid, std::vector<Vec3c>(grid.size()));
}

SolenoidalField SolenoidalField::multiplied(std::span<const double> per_mode) const {
    if (per_mode.size() != data_.size()) throw std::invalid_argument("multiplier size mismatch");
    SolenoidalField out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        for (auto& c : out.data_[i]) c *= per_mode[i];
    }
    return out;
}

SolenoidalField SolenoidalField::apply_multiplier(const Multiplier& of_eigenvalue) const {
    const auto& eig = grid_.eigenvalues();
    std::vector<double> m(eig.size(), 0.0);
    for (std::size_t i = 0; i < eig.size(); ++i) {
        if (eig[i] > 0.0) m[i] = of_eigenvalue(eig[i]);
    }
    return multiplied(m);
}

SolenoidalField SolenoidalField::scaled(double factor) const {
    SolenoidalField out = *this;
    for (auto& v : out.data_) {
        for (auto& c : v) c *= factor;
    }
    return out;
}

SolenoidalField& SolenoidalField::operator+=(const SolenoidalField& other) {
    if (!(grid_ == other.grid_)) throw std::invalid_argument("grid mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        for (int c = 0; c < 3; ++c) data_[i][c] += other.data_[i][c];
    }
    return *this;
}

SolenoidalField& SolenoidalField::operator-=(const SolenoidalField& other) {
    if (!(grid_ == other.grid_)) throw std::invalid_argument("grid mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        for (int c = 0; c < 3; ++c) data_[i][c] -= other.data_[i][c];
    }
    return *this;
}

double SolenoidalField::max_divergence_ratio() const {
    double worst = 0.0;
    for (std::size_t idx = 0; idx < data_.size(); ++idx) {
        const auto& v = data_[idx];
        const double mag = std::sqrt(std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]));
        if (mag == 0.0) continue;
        const auto k = grid_.wavenumbers(idx);
        const double kk = std::sqrt(static_cast<double>(grid_.index_sq(idx)));
        if (kk == 0.0) return std::numeric_limits<double>::infinity();
        const std::complex<double> dot = double(k[0]) * v[0] + double(k[1]) * v[1] + double(k[2]) * v[2];
        worst = std::max(worst, std::abs(dot) / (kk * mag));
    }
    return worst;
}

double SolenoidalField::max_reality_defect() const {
    double worst = 0.0;
    for (std::size_t idx = 0; idx < data_.size(); ++idx) {
        const auto& a = data_[idx];
        const auto& b = data_[grid_.partner(idx)];
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(b[c] - std::conj(a[c])));
    }
    return worst;
}

bool SolenoidalField::is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](const Vec3c& v) {
        return v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0;
    });
}

SolenoidalField leray_project(const CoefficientMap& raw) {
    const WaveGrid& g = raw.grid();
    double max_abs = 0.0;
    for (const auto& v : raw.data()) {
        for (const auto& c : v) max_abs = std::max(max_abs, std::abs(c));
    }
    const double tol = 1e-12 * max_abs;
    std::vector<Vec3c> out(g.size());
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const std::size_t p = g.partner(idx);
        if (p <= idx || g.is_nyquist(idx)) continue;
        const Vec3c& a = raw[idx];
        const Vec3c& b = raw[p];
        Vec3c s;
        for (int c = 0; c < 3; ++c) {
            if (std::abs(b[c] - std::conj(a[c])) > tol) {
                throw std::invalid_argument("coefficient map is not Hermitian-symmetric");
            }
            s[c] = 0.5 * (a[c] + std::conj(b[c]));
        }
        const auto k = g.wavenumbers(idx);
        const double kk = static_cast<double>(g.index_sq(idx));
        const std::complex<double> dot = double(k[0]) * s[0] + double(k[1]) * s[1] + double(k[2]) * s[2];
        Vec3c proj;
        for (int c = 0; c < 3; ++c) proj[c] = s[c] - double(k[c]) * dot / kk;
        out[idx] = proj;
        for (int c = 0; c < 3; ++c) out[p][c] = std::conj(proj[c]);
    }
    return SolenoidalField(g, std::move(out));
}

PhysicalVector to_physical(const SolenoidalField& f) {
    const WaveGrid& g = f.grid();
    SpectralTransform& tr = transform_for(g.n());
    auto buf = tr.buffer();
    PhysicalVector out;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] = f[i][c];
        tr.execute_to_physical();
        out[c].resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[c][i] = buf[i].real();
    }
    return out;
}

PhysicalTensor gradient_physical(const SolenoidalField& f) {
    const WaveGrid& g = f.grid();
    SpectralTransform& tr = transform_for(g.n());
    auto buf = tr.buffer();
    const double k0 = g.fundamental();
    PhysicalTensor out;
    for (int comp = 0; comp < 3; ++comp) {
        for (int dir = 0; dir < 3; ++dir) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto& v = f[i][comp];
                const double kj = k0 * g.wavenumbers(i)[dir];
                buf[i] = {-kj * v.imag(), kj * v.real()};
            }
            tr.execute_to_physical();
            auto& dst = out[3 * comp + dir];
            dst.resize(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] = buf[i].real();
        }
    }
    return out;
}

SolenoidalField project_physical(const WaveGrid& grid, const PhysicalVector& values) {
    SpectralTransform& tr = transform_for(grid.n());
    auto buf = tr.buffer();
    CoefficientMap raw(grid);
    for (int c = 0; c < 3; ++c) {
        if (values[c].size() != grid.size()) throw std::invalid_argument("physical field size mismatch");
        for (std::size_t i = 0; i < grid.size(); ++i) buf[i] = values[c][i];
        tr.execute_to_spectral();
        for (std::size_t i = 0; i < grid.size(); ++i) raw[i][c] = buf[i];
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid.in_dealias_band(i)) raw[i] = Vec3c{};
    }
    return leray_project(raw);
}

PhysicalVector advect(const PhysicalVector& u, const PhysicalTensor& grad_v) {
    const std::size_t n = u[0].size();
    PhysicalVector out;
    for (int i = 0; i < 3; ++i) {
        out[i].resize(n);
        const auto& g0 = grad_v[3 * i];
        const auto& g1 = grad_v[3 * i + 1];
        const auto& g2 = grad_v[3 * i + 2];
        for (std::size_t p = 0; p < n; ++p) {
            out[i][p] = u[0][p] * g0[p] + u[1][p] * g1[p] + u[2][p] * g2[p];
        }
    }
    return out;
}

SolenoidalField convective_term(const SolenoidalField& u, const SolenoidalField& v) {
    if (!(u.grid() == v.grid())) throw std::invalid_argument("convective term: grid mismatch");
    return project_physical(u.grid(), advect(to_physical(u), gradient_physical(v)));
}

double inner(const SolenoidalField& a, const SolenoidalField& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("inner product: grid mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.grid().size(); ++i) {
        for (int c = 0; c < 3; ++c) sum += (a[i][c] * std::conj(b[i][c])).real();
    }
    return a.grid().volume() * sum;
}

double l2_norm(const SolenoidalField& f) { return std::sqrt(std::max(inner(f, f), 0.0)); }

double lp_norm(const SolenoidalField& f, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("L^p norm needs p >= 1");
    const PhysicalVector phys = to_physical(f);
    const std::size_t n = phys[0].size();
    const double cell = f.grid().volume() / static_cast<double>(n);
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = phys[0][i] * phys[0][i] + phys[1][i] * phys[1][i] + phys[2][i] * phys[2][i];
            m = std::max(m, s);
        }
        return std::sqrt(m);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = phys[0][i] * phys[0][i] + phys[1][i] * phys[1][i] + phys[2][i] * phys[2][i];
        sum += (p == 2.0) ? s : std::pow(s, 0.5 * p);
    }
    return std::pow(sum * cell, 1.0 / p);
}

double fractional_sobolev_norm(const SolenoidalField& f, FractionalExponent kappa) {
    const auto& eig = f.grid().eigenvalues();
    double sum = 0.0;
    for (std::size_t i = 0; i < eig.size(); ++i) {
        if (eig[i] == 0.0) continue;
        const double mass = std::norm(f[i][0]) + std::norm(f[i][1]) + std::norm(f[i][2]);
        if (mass == 0.0) continue;
        sum += fractional_power_multiplier(kappa, eig[i]) * mass;
    }
    return std::sqrt(f.grid().volume() * sum);
}

InterpolationAudit audit_interpolation(const SolenoidalField& f, double kappa) {
    if (!(kappa > 0.75 && kappa <= 1.0)) {
        throw std::invalid_argument("interpolation audit needs kappa in (3/4, 1]");
    }
    InterpolationAudit audit;
    audit.l2 = l2_norm(f);
    if (audit.l2 == 0.0) {
        audit.skipped = true;
        return audit;
    }
    audit.l4 = lp_norm(f, 4.0);
    audit.sobolev = fractional_sobolev_norm(f, FractionalExponent(kappa));
    const double theta = 3.0 / (4.0 * kappa);
    audit.ratio = audit.l4 / (std::pow(audit.l2, 1.0 - theta) * std::pow(audit.sobolev, theta));
    return audit;
}

GaussianStream::GaussianStream(std::uint64_t seed) : engine_(seed) {}

double GaussianStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    constexpr double unit = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * unit;
    const double u2 = (static_cast<double>(engine_() >> 11) + 0.5) * unit;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

SolenoidalField random_solenoidal_profile(const WaveGrid& grid, std::uint64_t seed,
                                          const std::function<double(int)>& amplitude) {
    GaussianStream gauss(seed);
    CoefficientMap raw(grid);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const std::size_t p = grid.partner(idx);
        if (p <= idx || grid.is_nyquist(idx) || !grid.in_dealias_band(idx)) continue;
        const double amp = amplitude(grid.index_sq(idx));
        if (!(amp > 0.0)) continue;
        Vec3c v;
        for (auto& c : v) {
            const double re = gauss.next();
            const double im = gauss.next();
            c = {re, im};
        }
        const auto k = grid.wavenumbers(idx);
        const double kk = static_cast<double>(grid.index_sq(idx));
        const std::complex<double> dot = double(k[0]) * v[0] + double(k[1]) * v[1] + double(k[2]) * v[2];
        for (int c = 0; c < 3; ++c) v[c] -= double(k[c]) * dot / kk;
        const double mag = std::sqrt(std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]));
        if (mag == 0.0) continue;
        for (int c = 0; c < 3; ++c) {
            raw[idx][c] = v[c] * (amp / mag);
            raw[p][c] = std::conj(raw[idx][c]);
        }
    }
    return leray_project(raw);
}

SolenoidalField random_solenoidal(const WaveGrid& grid, std::uint64_t seed, double spectral_slope,
                                  double k_cutoff) {
    const double k0 = grid.fundamental();
    return random_solenoidal_profile(grid, seed, [=](int index_sq) {
        const double k = k0 * std::sqrt(static_cast<double>(index_sq));
        return k <= k_cutoff ? std::pow(k, spectral_slope) : 0.0;
    });
}

SpectralMeasure spectral_measure_of(const SolenoidalField& f) {
    const WaveGrid& g = f.grid();
    std::map<int, double> shells;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double mass = std::norm(f[i][0]) + std::norm(f[i][1]) + std::norm(f[i][2]);
        if (mass > 0.0) shells[g.index_sq(i)] += mass;
    }
    const double k0sq = g.fundamental() * g.fundamental();
    std::vector<SpectralAtom> atoms;
    atoms.reserve(shells.size());
    for (const auto& [m, mass] : shells) {
        atoms.push_back({k0sq * m, g.volume() * mass});
    }
    return SpectralMeasure::discrete(std::move(atoms));
}

void write_field(std::ostream& os, const SolenoidalField& f) {
    const WaveGrid& g = f.grid();
    os << "# grid N=" << g.n() << " L=" << format_double(g.length())
       << " dealias=" << format_double(g.dealias_fraction()) << '\n';
    os << "kx,ky,kz,re_ux,im_ux,re_uy,im_uy,re_uz,im_uz\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& v = f[i];
        if (v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0) continue;
        const auto k = g.wavenumbers(i);
        os << k[0] << ',' << k[1] << ',' << k[2];
        for (int c = 0; c < 3; ++c) {
            os << ',' << format_double(v[c].real()) << ',' << format_double(v[c].imag());
        }
        os << '\n';
    }
}

SolenoidalField read_field(std::istream& is) {
    std::string line;
    int line_no = 0;
    std::optional<WaveGrid> grid;
    while (!grid && std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line.rfind("# grid", 0) != 0) {
            throw std::runtime_error("field table line " + std::to_string(line_no) +
                                     ": expected '# grid N=.. L=.. dealias=..'");
        }
        std::istringstream ss(line.substr(6));
        std::string tok;
        int n = 0;
        double length = 0.0;
        double dealias = 2.0 / 3.0;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            if (key == "N") n = static_cast<int>(parse_long(val, line_no));
            else if (key == "L") length = parse_double(val, line_no);
            else if (key == "dealias") dealias = parse_double(val, line_no);
        }
        grid.emplace(n, length, dealias);
    }
    if (!grid) throw std::runtime_error("field table: missing grid line");

    std::vector<Vec3c> data(grid->size());
    const int n = grid->n();
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#' || line.rfind("kx", 0) == 0) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 9) {
            throw std::runtime_error("field table line " + std::to_string(line_no) +
                                     ": expected 9 columns");
        }
        int idx[3];
        for (int c = 0; c < 3; ++c) {
            const long k = parse_long(fields[c], line_no);
            if (k < -n / 2 || k >= n / 2) {
                throw std::runtime_error("field table line " + std::to_string(line_no) +
                                         ": wavenumber outside grid");
            }
            idx[c] = static_cast<int>((k + n) % n);
        }
        Vec3c v;
        for (int c = 0; c < 3; ++c) {
            v[c] = {parse_double(fields[3 + 2 * c], line_no), parse_double(fields[4 + 2 * c], line_no)};
        }
        data[grid->linear(idx[0], idx[1], idx[2])] = v;
    }

    SolenoidalField f(*grid, std::move(data));
    double max_abs = 0.0;
    for (const auto& v : f.coefficients()) {
        for (const auto& c : v) max_abs = std::max(max_abs, std::abs(c));
    }
    const auto& zero_mode = f[0];
    if (zero_mode[0] != 0.0 || zero_mode[1] != 0.0 || zero_mode[2] != 0.0) {
        throw std::runtime_error("field table: nonzero mean mode");
    }
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (grid->is_nyquist(i) && (f[i][0] != 0.0 || f[i][1] != 0.0 || f[i][2] != 0.0)) {
            throw std::runtime_error("field table: nonzero Nyquist mode");
        }
    }
    if (f.max_reality_defect() > 1e-12 * max_abs) {
        throw std::runtime_error("field table: coefficients are not Hermitian-symmetric");
    }
    if (f.max_divergence_ratio() > 1e-12) {
        throw std::runtime_error("field table: field is not divergence-free");
    }
    return f;
}

}  // namespace fracmhd
