#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "fracmhd/solenoidal.hpp"

using namespace fracmhd;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// mpmath: ||f||_4 / ||f||_2 for a single real mode |k| = 1 on the 2 pi box.
constexpr double kSingleModeRatio = 0.27886108544661862436;

CoefficientMap random_raw(const WaveGrid& g, std::uint64_t seed) {
    CoefficientMap raw(g);
    GaussianStream gs(seed);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t p = g.partner(i);
        if (p < i) continue;
        for (int c = 0; c < 3; ++c) {
            const std::complex<double> z(gs.next(), p == i ? 0.0 : gs.next());
            raw[i][c] = z;
            raw[p][c] = std::conj(z);
        }
    }
    return raw;
}

CoefficientMap copy_of(const SolenoidalField& f) {
    CoefficientMap raw(f.grid());
    for (std::size_t i = 0; i < f.grid().size(); ++i) raw[i] = f[i];
    return raw;
}

double max_abs_diff(const SolenoidalField& a, const SolenoidalField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.grid().size(); ++i) {
        for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(a[i][c] - b[i][c]));
    }
    return m;
}

}  // namespace

TEST_SUITE("solenoidal_fields") {

TEST_CASE("grid indexing") {
    const WaveGrid g(8, kTwoPi);
    CHECK(g.wavenumber(0) == 0);
    CHECK(g.wavenumber(3) == 3);
    CHECK(g.wavenumber(4) == -4);
    CHECK(g.wavenumber(7) == -1);
    const std::size_t idx = g.linear(1, 2, 7);
    const auto k = g.wavenumbers(idx);
    CHECK(k == std::array<int, 3>{1, 2, -1});
    CHECK(g.wavenumbers(g.partner(idx)) == std::array<int, 3>{-1, -2, 1});
    CHECK(g.index_sq(idx) == 6);
    CHECK(g.is_nyquist(g.linear(4, 0, 0)));
    CHECK_FALSE(g.is_nyquist(idx));
    CHECK(g.eigenvalues()[idx] == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(g.eigenvalues()[0] == 0.0);
}

TEST_CASE("dealias cutoff stays strictly below N/3") {
    CHECK(WaveGrid(16, kTwoPi).dealias_cutoff() == 5);
    CHECK(WaveGrid(12, kTwoPi).dealias_cutoff() == 3);
    CHECK(WaveGrid(32, kTwoPi).dealias_cutoff() == 10);
    CHECK(WaveGrid(8, kTwoPi).dealias_cutoff() == 2);
}

TEST_CASE("grid rejects bad sizes") {
    CHECK_THROWS(WaveGrid(7, kTwoPi));
    CHECK_THROWS(WaveGrid(8, 0.0));
    CHECK_THROWS(WaveGrid(0, 1.0));
}

TEST_CASE("projection yields divergence-free Hermitian fields") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const WaveGrid g(8, 3.0);
        const auto f = leray_project(random_raw(g, seed));
        CHECK(f.max_divergence_ratio() < 1e-14);
        CHECK(f.max_reality_defect() == 0.0);
        CHECK(f[0] == Vec3c{});
        CHECK(f[g.linear(4, 1, 1)] == Vec3c{});
    }
}

TEST_CASE("projection is idempotent") {
    const WaveGrid g(8, kTwoPi);
    const auto f = leray_project(random_raw(g, 9));
    const auto again = leray_project(copy_of(f));
    CHECK(max_abs_diff(f, again) < 1e-15);
}

TEST_CASE("gradient fields project to zero") {
    const WaveGrid g(8, kTwoPi);
    CoefficientMap raw(g);
    GaussianStream gs(4);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t p = g.partner(i);
        if (p < i || g.is_nyquist(i)) continue;
        const std::complex<double> phi(gs.next(), p == i ? 0.0 : gs.next());
        const auto k = g.wavenumbers(i);
        for (int c = 0; c < 3; ++c) {
            raw[i][c] = std::complex<double>(0.0, k[c]) * phi;
            raw[p][c] = std::conj(raw[i][c]);
        }
    }
    const auto f = leray_project(raw);
    double m = 0.0;
    for (const auto& v : f.coefficients()) {
        for (const auto& z : v) m = std::max(m, std::abs(z));
    }
    CHECK(m < 1e-14);
}

TEST_CASE("projection rejects non-Hermitian input") {
    const WaveGrid g(8, kTwoPi);
    auto raw = random_raw(g, 2);
    raw[g.linear(1, 0, 0)][1] += std::complex<double>(0.0, 0.5);
    CHECK_THROWS(leray_project(raw));
}

TEST_CASE("Parseval identity") {
    const WaveGrid g(8, 2.5);
    const auto f = leray_project(random_raw(g, 12));
    const auto phys = to_physical(f);
    double grid_sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (double v : phys[c]) grid_sum += v * v;
    }
    grid_sum *= g.volume() / static_cast<double>(g.size());
    CHECK(inner(f, f) == doctest::Approx(grid_sum).epsilon(1e-12));
    CHECK(lp_norm(f, 2.0) == doctest::Approx(l2_norm(f)).epsilon(1e-12));
}

TEST_CASE("first-order Sobolev norm equals the gradient norm") {
    const WaveGrid g(8, kTwoPi);
    const auto f = random_solenoidal(g, 5, -1.0, 2.0);
    const auto grad = gradient_physical(f);
    double sum = 0.0;
    for (const auto& comp : grad) {
        for (double v : comp) sum += v * v;
    }
    sum *= g.volume() / static_cast<double>(g.size());
    CHECK(fractional_sobolev_norm(f, FractionalExponent(1.0)) ==
          doctest::Approx(std::sqrt(sum)).epsilon(1e-12));
}

TEST_CASE("interpolation ratio of a single mode") {
    const WaveGrid g(8, kTwoPi);
    CoefficientMap raw(g);
    raw[g.linear(1, 0, 0)][1] = 0.5;
    raw[g.linear(7, 0, 0)][1] = 0.5;
    const auto f = leray_project(raw);
    const auto audit = audit_interpolation(f, 1.0);
    CHECK_FALSE(audit.skipped);
    CHECK(audit.ratio == doctest::Approx(kSingleModeRatio).epsilon(1e-13));
    CHECK(audit_interpolation(SolenoidalField::zero(g), 0.9).skipped);
    CHECK_THROWS(audit_interpolation(f, 0.7));
}

TEST_CASE("convective term is orthogonal to the transported field") {
    const WaveGrid g(16, kTwoPi);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto u = random_solenoidal(g, seed, -1.0, 5.0);
        const auto w = convective_term(u, u);
        CHECK(std::abs(inner(w, u)) <= 1e-12 * inner(u, u) * l2_norm(u));
        CHECK(w.max_divergence_ratio() < 1e-13);
    }
}

TEST_CASE("random fields are deterministic and band limited") {
    const WaveGrid g(16, kTwoPi);
    const auto a = random_solenoidal(g, 42, -1.0, 4.0);
    const auto b = random_solenoidal(g, 42, -1.0, 4.0);
    const auto c = random_solenoidal(g, 43, -1.0, 4.0);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const bool nonzero = std::abs(a[i][0]) + std::abs(a[i][1]) + std::abs(a[i][2]) > 0.0;
        if (!nonzero) continue;
        CHECK(g.in_dealias_band(i));
        CHECK(g.eigenvalues()[i] <= 16.0 + 1e-12);
    }
    CHECK(a.max_divergence_ratio() < 1e-14);
}

TEST_CASE("profile amplitudes are honoured") {
    const WaveGrid g(8, kTwoPi);
    const auto f = random_solenoidal_profile(g, 3, [](int q) { return q == 1 ? 2.0 : 0.0; });
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double mag = std::sqrt(std::norm(f[i][0]) + std::norm(f[i][1]) + std::norm(f[i][2]));
        CHECK(mag == doctest::Approx(g.index_sq(i) == 1 ? 2.0 : 0.0).epsilon(1e-14));
    }
}

TEST_CASE("Gaussian stream moments") {
    GaussianStream gs(2024);
    const int count = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < count; ++i) {
        const double x = gs.next();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / count) < 0.01);
    CHECK(std::abs(sq / count - 1.0) < 0.01);
    GaussianStream a(7);
    GaussianStream b(7);
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("spectral measure carries the energy") {
    const WaveGrid g(8, 4.0);
    const auto f = random_solenoidal(g, 8, -0.5, 4.0);
    const auto m = spectral_measure_of(f);
    CHECK(m.total_mass() == doctest::Approx(inner(f, f)).epsilon(1e-13));
    for (const auto& a : m.atoms()) CHECK(a.lambda > 0.0);
}

TEST_CASE("arithmetic keeps the invariants") {
    const WaveGrid g(8, kTwoPi);
    const auto a = random_solenoidal(g, 1, -1.0, 2.0);
    const auto b = random_solenoidal(g, 2, -1.0, 2.0);
    const auto s = (a + b).scaled(0.5) - a.scaled(0.5);
    CHECK(max_abs_diff(s, b.scaled(0.5)) < 1e-15);
    CHECK(s.max_reality_defect() < 1e-15);
    CHECK((a - a).is_zero());
}

TEST_CASE("field text round trip") {
    const WaveGrid g(8, 3.5);
    const auto f = random_solenoidal(g, 31, -1.0, 3.0);
    std::stringstream ss;
    write_field(ss, f);
    const auto back = read_field(ss);
    CHECK(back == f);
}

TEST_CASE("loader rejects corrupted fields") {
    const WaveGrid g(8, kTwoPi);
    const auto f = random_solenoidal(g, 31, -1.0, 2.0);
    std::stringstream ss;
    write_field(ss, f);
    std::string text = ss.str();
    const auto row = text.find('\n', text.find('\n') + 1) + 1;
    const auto comma = text.find(',', text.find(',', text.find(',', row) + 1) + 1);
    text.insert(comma + 1, "9");
    std::stringstream corrupted(text);
    CHECK_THROWS(read_field(corrupted));
    std::stringstream headless("kx,ky,kz\n");
    CHECK_THROWS(read_field(headless));
}

}  // TEST_SUITE
