#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fracmhd/mild_solver.hpp"

using namespace fracmhd;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Pair {
    SolenoidalField u;
    SolenoidalField B;
};

Pair random_pair(const WaveGrid& g, std::uint64_t seed, double amp, double cutoff) {
    return {random_solenoidal(g, seed, -1.0, cutoff).scaled(amp),
            random_solenoidal(g, seed + 1000, -1.0, cutoff).scaled(amp)};
}

double max_abs_diff(const SolenoidalField& a, const SolenoidalField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.grid().size(); ++i) {
        for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(a[i][c] - b[i][c]));
    }
    return m;
}

}  // namespace

TEST_SUITE("mild_solver") {

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(SolverParams(0.9, 1.0, 10, 0.01, 1.0));
    CHECK_THROWS_AS(SolverParams(0.7, 1.0, 10, 0.01, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SolverParams(1.0, 1.2, 10, 0.01, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SolverParams(1.0, 1.0, 0, 0.01, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SolverParams(1.0, 1.0, 10, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SolverParams(1.0, 1.0, 10, -0.1, 1.0), std::invalid_argument);
    const SolverParams p(0.9, 0.8, 4, 0.01, 1.0);
    CHECK(p.with_n(7).n() == 7);
    CHECK(p.with_dt(0.02).dt() == 0.02);
    CHECK_FALSE(p.with_nonlinear(false).options().nonlinear);
}

TEST_CASE("equal velocity and field give a vanishing nonlinearity") {
    const WaveGrid g(16, kTwoPi);
    const auto u = random_solenoidal(g, 3, -1.0, 5.0);
    const auto terms = rhs_nonlinear(MhdState(0.0, u, u), 50);
    CHECK(terms.du.is_zero());
    CHECK(terms.dB.is_zero());
}

TEST_CASE("mollified nonlinearity conserves energy") {
    const WaveGrid g(16, kTwoPi);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto [u, B] = random_pair(g, seed, 1.0, 5.0);
        const MhdState s(0.0, u, B);
        const auto terms = rhs_nonlinear(s, 3);
        const double work = inner(terms.du, u) + inner(terms.dB, B);
        const double scale = s.energy() * std::sqrt(s.energy()) * g.dealias_cutoff();
        CHECK(std::abs(work) <= 1e-12 * scale);
    }
}

TEST_CASE("mollification contracts the energy") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 5, 1.0, 2.0);
    const MhdState s(0.0, u, B);
    double prev = 0.0;
    for (long n : {1L, 4L, 16L, 64L, 1000000L}) {
        const double e = mollify(s, n).energy();
        CHECK(e < s.energy());
        CHECK(e > prev);
        prev = e;
    }
}

TEST_CASE("linear step is the exact semigroup") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 7, 1.0, 2.0);
    const SolverParams p = SolverParams(0.9, 0.8, 10, 0.05, 1.0).with_nonlinear(false);
    const auto next = Integrator(g, p).step(MhdState(0.0, u, B));
    const auto eu = u.apply_multiplier([](double l) { return semigroup_multiplier(FractionalExponent(0.9), 0.05, l); });
    const auto eb = B.apply_multiplier([](double l) { return semigroup_multiplier(FractionalExponent(0.8), 0.05, l); });
    CHECK(max_abs_diff(next.u, eu) < 1e-15);
    CHECK(max_abs_diff(next.B, eb) < 1e-15);
    CHECK(next.t == doctest::Approx(0.05));
}

TEST_CASE("zero data stay zero") {
    const WaveGrid g(8, kTwoPi);
    const auto z = SolenoidalField::zero(g);
    const auto next = step_integrate(MhdState(0.0, z, z), SolverParams(1.0, 1.0, 5, 0.01, 1.0));
    CHECK(next.u.is_zero());
    CHECK(next.B.is_zero());
}

TEST_CASE("step_integrate agrees with the cached integrator") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 9, 0.5, 2.0);
    const SolverParams p(0.95, 0.9, 20, 0.01, 1.0);
    const MhdState s(0.0, u, B);
    const auto a = step_integrate(s, p);
    const auto b = Integrator(g, p).step(s);
    CHECK(a.u == b.u);
    CHECK(a.B == b.B);
}

TEST_CASE("suggested step for zero data") {
    const WaveGrid g(8, kTwoPi);
    const auto z = SolenoidalField::zero(g);
    CHECK(suggest_dt(MhdState(0.0, z, z), FractionalExponent(1.0)) == doctest::Approx(0.5 / 4.0));
    const auto [u, B] = random_pair(g, 1, 10.0, 2.0);
    CHECK(suggest_dt(MhdState(0.0, u, B), FractionalExponent(1.0)) < 0.125);
}

TEST_CASE("ledger run satisfies the energy inequality") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 11, 1.0, 2.0);
    const SolverParams p(0.9, 0.85, 8, 0.005, 0.2);
    int sampled = 0;
    LedgerOptions opt;
    opt.sampler = [&](const MhdState&) { ++sampled; };
    const auto r = run_with_ledger(u, B, p, opt);
    CHECK(r.steps == 40);
    CHECK(r.ledger.rows().size() == 41);
    CHECK(sampled == 41);
    CHECK(r.ledger.rows().front().dissipation_cum == 0.0);
    CHECK(r.mollified_energy <= r.initial_energy);
    CHECK(r.max_energy <= r.initial_energy);
    CHECK_FALSE(r.ledger.first_violation(1.0, 0.005, r.mollified_energy).has_value());
    CHECK(r.final_state.t == doctest::Approx(0.2));
    const auto& last = r.ledger.rows().back();
    CHECK(last.total() + last.dissipation_cum <= r.mollified_energy * (1.0 + 0.005 * 0.2));
}

TEST_CASE("ledger rows can be thinned") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 12, 1.0, 2.0);
    LedgerOptions opt;
    opt.row_every = 7;
    const auto r = run_with_ledger(u, B, SolverParams(1.0, 1.0, 8, 0.01, 0.2), opt);
    CHECK(r.ledger.rows().size() == 4);  // 0, 7, 14, 20 steps
    CHECK(r.ledger.rows().back().t == doctest::Approx(0.2));
}

TEST_CASE("ledger detects an energy increase") {
    EnergyLedger ledger;
    ledger.append({0.0, 1.0, 1.0, 0.0});
    ledger.append({0.1, 0.9, 0.9, 0.19});
    ledger.append({0.2, 1.0, 1.0, 0.3});
    const auto v = ledger.first_violation(1.0, 0.01, 2.0);
    REQUIRE(v.has_value());
    CHECK(v->t() == 0.2);
    CHECK(v->s() == 0.1);
    CHECK(v->excess() > 0.0);
    CHECK_THROWS_AS(ledger.append({0.2, 1.0, 1.0, 0.3}), std::invalid_argument);
    CHECK_THROWS_AS(ledger.append({0.3, -1.0, 1.0, 0.3}), std::invalid_argument);
}

TEST_CASE("ledger serialization") {
    EnergyLedger ledger;
    ledger.append({0.0, 1.5, 0.5, 0.0});
    std::stringstream ss;
    write_ledger(ss, ledger);
    CHECK(ss.str() == "t,energy_u,energy_B,dissipation_cum\n0,1.5,0.5,0\n");
}

TEST_CASE("oversized step is flagged") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 13, 200.0, 2.0);
    const SolverParams p(1.0, 1.0, 1000, 0.2, 1.0);
    CHECK_THROWS_AS(Integrator(g, p).step(MhdState(0.0, u, B)), CflViolation);
}

TEST_CASE("Picard iteration converges for small data") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 21, 0.05, 2.0);
    SolverOptions opt;
    opt.duhamel_substeps = 16;
    const auto r = picard_solve(u, B, SolverParams(0.9, 0.95, 16, 0.01, 0.1, opt));
    CHECK(r.deltas.back() < 1e-10);
    CHECK(r.trajectory.size() == 17);
    CHECK(r.iterations == static_cast<int>(r.deltas.size()));
    for (double f : r.factors) CHECK(f < 1.0);
    CHECK(r.final_state.t == doctest::Approx(0.1));
}

TEST_CASE("linear Picard iteration reproduces the semigroup") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 22, 1.0, 2.0);
    SolverOptions opt;
    opt.nonlinear = false;
    opt.duhamel_substeps = 8;
    const SolverParams p(1.0, 0.9, 4, 0.01, 0.1, opt);
    const auto r = picard_solve(u, B, p);
    const auto start = mollify(MhdState(0.0, u, B), 4);
    const auto eu = start.u.apply_multiplier([](double l) { return semigroup_multiplier(FractionalExponent(1.0), 0.1, l); });
    CHECK(max_abs_diff(r.final_state.u, eu) < 1e-14);
}

TEST_CASE("Picard iteration fails loudly for large data") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 23, 60.0, 2.0);
    SolverOptions opt;
    opt.duhamel_substeps = 8;
    opt.picard_max_iters = 30;
    CHECK_THROWS_AS(picard_solve(u, B, SolverParams(1.0, 1.0, 1000, 0.01, 1.0, opt)), SolverError);
}

TEST_CASE("X norm and distance") {
    const WaveGrid g(8, kTwoPi);
    const auto [u, B] = random_pair(g, 24, 1.0, 2.0);
    const auto z = SolenoidalField::zero(g);
    const std::vector<MhdState> zero_path = {MhdState(0.0, z, z), MhdState(0.1, z, z)};
    const std::vector<MhdState> path = {MhdState(0.0, u, B), MhdState(0.1, z, z)};
    CHECK(x_norm(zero_path) == 0.0);
    const double expected = std::sqrt(inner(u, u) + inner(B, B)) +
                            std::sqrt(std::pow(fractional_sobolev_norm(u, FractionalExponent(1.0)), 2) +
                                      std::pow(fractional_sobolev_norm(B, FractionalExponent(1.0)), 2));
    CHECK(x_norm(path) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(x_distance(path, zero_path) == doctest::Approx(x_norm(path)).epsilon(1e-14));
    CHECK_THROWS(x_distance(path, {zero_path.front()}));
}

}  // TEST_SUITE
