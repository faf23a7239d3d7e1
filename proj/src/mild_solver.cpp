#include "fracmhd/mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "fracmhd/tabular.hpp"

namespace fracmhd {

namespace {

std::string fmt(double x) { return format_double(x); }

void check_exponent(double v, const char* name) {
    if (!(v > 0.75 && v <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must lie in (3/4, 1], got " + fmt(v));
    }
}

double dissipation_rate(const MhdState& s, FractionalExponent alpha, FractionalExponent beta) {
    const double a = fractional_sobolev_norm(s.u, alpha);
    const double b = fractional_sobolev_norm(s.B, beta);
    return 2.0 * (a * a + b * b);
}

std::vector<double> per_mode(const WaveGrid& grid, const Multiplier& f) {
    const auto& eig = grid.eigenvalues();
    std::vector<double> out(eig.size(), 0.0);
    for (std::size_t i = 0; i < eig.size(); ++i) {
        if (eig[i] > 0.0) out[i] = f(eig[i]);
    }
    return out;
}

double pair_x(const SolenoidalField& u, const SolenoidalField& B) {
    const FractionalExponent one(1.0);
    const double l2u = l2_norm(u);
    const double l2b = l2_norm(B);
    const double gu = fractional_sobolev_norm(u, one);
    const double gb = fractional_sobolev_norm(B, one);
    return std::sqrt(l2u * l2u + l2b * l2b) + std::sqrt(gu * gu + gb * gb);
}

}  // namespace

NonContraction::NonContraction(std::vector<double> factors)
    : SolverError("Picard iteration does not contract (three consecutive factors > 1); "
                  "shorten T"),
      factors_(std::move(factors)) {}

MaxIters::MaxIters(int iterations, double last_delta)
    : SolverError("Picard iteration reached " + std::to_string(iterations) +
                  " iterations, last difference " + fmt(last_delta)),
      last_delta_(last_delta) {}

CflViolation::CflViolation(double t, double energy_before, double energy_after)
    : SolverError("energy grew from " + fmt(energy_before) + " to " + fmt(energy_after) +
                  " in the step ending at t = " + fmt(t) + "; reduce dt"),
      t_(t) {}

LedgerViolation::LedgerViolation(double s, double t, double excess)
    : SolverError("energy inequality violated between s = " + fmt(s) + " and t = " + fmt(t) +
                  " by " + fmt(excess)),
      s_(s), t_(t), excess_(excess) {}

SolverParams::SolverParams(double alpha, double beta, long n, double dt, double T,
                           SolverOptions options)
    : alpha_((check_exponent(alpha, "alpha"), alpha)),
      beta_((check_exponent(beta, "beta"), beta)),
      n_(n),
      dt_(dt),
      T_(T),
      options_(options) {
    if (n < 1) throw std::invalid_argument("mollifier index n must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("T must be positive");
    if (!(dt < T)) throw std::invalid_argument("dt must be smaller than T");
    if (!(options.picard_tol > 0.0)) throw std::invalid_argument("picard_tol must be positive");
    if (options.picard_max_iters < 1) throw std::invalid_argument("picard_max_iters must be >= 1");
    if (options.duhamel_substeps < 1) throw std::invalid_argument("duhamel_substeps must be >= 1");
}

SolverParams SolverParams::with_dt(double dt) const {
    return SolverParams(alpha_.value(), beta_.value(), n_, dt, T_, options_);
}
SolverParams SolverParams::with_T(double T) const {
    return SolverParams(alpha_.value(), beta_.value(), n_, dt_, T, options_);
}
SolverParams SolverParams::with_n(long n) const {
    return SolverParams(alpha_.value(), beta_.value(), n, dt_, T_, options_);
}
SolverParams SolverParams::with_nonlinear(bool on) const {
    SolverOptions o = options_;
    o.nonlinear = on;
    return SolverParams(alpha_.value(), beta_.value(), n_, dt_, T_, o);
}

MhdState::MhdState(double t_, SolenoidalField u_, SolenoidalField B_)
    : t(t_), u(std::move(u_)), B(std::move(B_)) {
    if (!(u.grid() == B.grid())) throw std::invalid_argument("u and B live on different grids");
    if (!(t >= 0.0)) throw std::invalid_argument("state time must be nonnegative");
}

double MhdState::energy() const {
    const double a = l2_norm(u);
    const double b = l2_norm(B);
    return a * a + b * b;
}

MhdState mollify(const MhdState& state, long n) {
    const auto j = per_mode(state.grid(), [n](double lam) { return mollifier_multiplier(n, lam); });
    return MhdState(state.t, state.u.multiplied(j), state.B.multiplied(j));
}

NonlinearTerms rhs_nonlinear(const MhdState& state, long n) {
    const WaveGrid& g = state.grid();
    const MhdState m = mollify(state, n);
    const PhysicalVector ju = to_physical(m.u);
    const PhysicalVector jb = to_physical(m.B);
    const PhysicalTensor gu = gradient_physical(state.u);
    const PhysicalTensor gb = gradient_physical(state.B);

    PhysicalVector du = advect(jb, gb);
    PhysicalVector dB = advect(jb, gu);
    const PhysicalVector ju_gu = advect(ju, gu);
    const PhysicalVector ju_gb = advect(ju, gb);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < du[c].size(); ++i) {
            du[c][i] -= ju_gu[c][i];
            dB[c][i] -= ju_gb[c][i];
        }
    }
    return {project_physical(g, du), project_physical(g, dB)};
}

Integrator::Integrator(const WaveGrid& grid, const SolverParams& params)
    : grid_(grid), params_(params) {
    const double dt = params.dt();
    const FractionalExponent a = params.alpha();
    const FractionalExponent b = params.beta();
    decay_u_ = per_mode(grid, [&](double lam) { return semigroup_multiplier(a, dt, lam); });
    decay_B_ = per_mode(grid, [&](double lam) { return semigroup_multiplier(b, dt, lam); });
}

MhdState Integrator::step(const MhdState& state) const {
    if (!(state.grid() == grid_)) throw std::invalid_argument("state grid differs from integrator grid");
    const double dt = params_.dt();
    const double t_next = state.t + dt;
    if (!params_.options().nonlinear) {
        return MhdState(t_next, state.u.multiplied(decay_u_), state.B.multiplied(decay_B_));
    }
    const long n = params_.n();
    const NonlinearTerms k1 = rhs_nonlinear(state, n);
    const MhdState predictor(t_next, (state.u + k1.du.scaled(dt)).multiplied(decay_u_),
                             (state.B + k1.dB.scaled(dt)).multiplied(decay_B_));
    const NonlinearTerms k2 = rhs_nonlinear(predictor, n);
    MhdState next(t_next,
                  (state.u + k1.du.scaled(0.5 * dt)).multiplied(decay_u_) + k2.du.scaled(0.5 * dt),
                  (state.B + k1.dB.scaled(0.5 * dt)).multiplied(decay_B_) + k2.dB.scaled(0.5 * dt));
    const double before = state.energy();
    const double after = next.energy();
    if (after > before * (1.0 + 10.0 * dt * dt)) throw CflViolation(t_next, before, after);
    return next;
}

MhdState step_integrate(const MhdState& state, const SolverParams& params) {
    return Integrator(state.grid(), params).step(state);
}

double suggest_dt(const MhdState& state, FractionalExponent alpha) {
    const WaveGrid& g = state.grid();
    const double kmax = g.fundamental() * g.dealias_cutoff();
    const double amp = std::max(lp_norm(state.u, INFINITY), lp_norm(state.B, INFINITY));
    double dt = std::pow(kmax, -2.0 * alpha.value());
    if (amp > 0.0) dt = std::min(dt, 1.0 / (kmax * amp));
    return 0.5 * dt;
}

void EnergyLedger::append(const LedgerRow& row) {
    if (!rows_.empty() && !(row.t > rows_.back().t)) {
        throw std::invalid_argument("ledger times must be strictly increasing");
    }
    if (row.energy_u < 0.0 || row.energy_B < 0.0 || row.dissipation_cum < 0.0) {
        throw std::invalid_argument("ledger entries must be nonnegative");
    }
    rows_.push_back(row);
}

std::optional<LedgerViolation> EnergyLedger::first_violation(double c_led, double dt,
                                                             double e_ref) const {
    // E(t) + D(t) - slack(t) must not exceed its running minimum over earlier rows.
    const double rate = c_led * dt * e_ref;
    double best = 0.0;
    double best_t = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        const double g = r.total() + r.dissipation_cum - rate * r.t;
        if (i > 0 && g > best) return LedgerViolation(best_t, r.t, g - best);
        if (i == 0 || g < best) {
            best = g;
            best_t = r.t;
        }
    }
    return std::nullopt;
}

void write_ledger(std::ostream& os, const EnergyLedger& ledger) {
    os << "t,energy_u,energy_B,dissipation_cum\n";
    for (const auto& r : ledger.rows()) {
        os << fmt(r.t) << ',' << fmt(r.energy_u) << ',' << fmt(r.energy_B) << ','
           << fmt(r.dissipation_cum) << '\n';
    }
}

RunResult run_with_ledger(const SolenoidalField& u0, const SolenoidalField& B0,
                          const SolverParams& params, const LedgerOptions& options) {
    if (options.row_every < 1) throw std::invalid_argument("row_every must be >= 1");
    const MhdState raw(0.0, u0, B0);
    const double e0 = raw.energy();
    MhdState state = mollify(raw, params.n());
    const double em = state.energy();
    if (em > e0) throw LedgerViolation(0.0, 0.0, em - e0);

    const double ratio = params.T() / params.dt();
    const double rounded = std::round(ratio);
    const auto steps = static_cast<std::size_t>(
        std::abs(ratio - rounded) < 1e-9 * ratio ? rounded : std::ceil(ratio));
    const double dt = params.T() / static_cast<double>(steps);
    const Integrator integrator(state.grid(), params.with_dt(dt));
    const FractionalExponent a = params.alpha();
    const FractionalExponent b = params.beta();

    RunResult result{EnergyLedger{}, state, options.c_led, e0, em, em, steps};
    auto record = [&](const MhdState& s, double dcum) {
        const double eu = l2_norm(s.u);
        const double eb = l2_norm(s.B);
        result.ledger.append({s.t, eu * eu, eb * eb, dcum});
        result.max_energy = std::max(result.max_energy, eu * eu + eb * eb);
        if (options.sampler) options.sampler(s);
    };

    const double rate = options.c_led * dt * em;
    double dcum = 0.0;
    double d_prev = dissipation_rate(state, a, b);
    record(state, 0.0);
    double best = em;
    double best_t = 0.0;
    for (std::size_t s = 1; s <= steps; ++s) {
        MhdState next = integrator.step(state);
        next.t = static_cast<double>(s) * dt;
        const double d_next = dissipation_rate(next, a, b);
        dcum += 0.5 * dt * (d_prev + d_next);
        d_prev = d_next;
        state = std::move(next);
        if (s % static_cast<std::size_t>(options.row_every) == 0 || s == steps) {
            record(state, dcum);
            const double g = result.ledger.rows().back().total() + dcum - rate * state.t;
            if (g > best) throw LedgerViolation(best_t, state.t, g - best);
            if (g < best) {
                best = g;
                best_t = state.t;
            }
        }
    }
    result.final_state = state;
    return result;
}

double x_norm(const std::vector<MhdState>& trajectory) {
    double m = 0.0;
    for (const auto& s : trajectory) m = std::max(m, pair_x(s.u, s.B));
    return m;
}

double x_distance(const std::vector<MhdState>& a, const std::vector<MhdState>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("trajectories differ in node count");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, pair_x(a[i].u - b[i].u, a[i].B - b[i].B));
    }
    return m;
}

PicardResult picard_solve(const SolenoidalField& u0, const SolenoidalField& B0,
                          const SolverParams& params) {
    const MhdState start = mollify(MhdState(0.0, u0, B0), params.n());
    const WaveGrid& g = start.grid();
    const SolverOptions& opt = params.options();
    const int m_nodes = opt.duhamel_substeps;
    const double h = params.T() / m_nodes;

    auto decay = [&](FractionalExponent k) {
        return per_mode(g, [&](double lam) { return semigroup_multiplier(k, h, lam); });
    };
    auto weight = [&](FractionalExponent k) {
        return per_mode(g, [&](double lam) {
            const double mu = fractional_power_multiplier(k, lam);
            return -std::expm1(-h * mu) / mu;
        });
    };
    const auto decay_u = decay(params.alpha());
    const auto decay_b = decay(params.beta());
    const auto weight_u = weight(params.alpha());
    const auto weight_b = weight(params.beta());

    std::vector<MhdState> free_path;
    free_path.reserve(m_nodes + 1);
    free_path.push_back(start);
    for (int j = 1; j <= m_nodes; ++j) {
        const MhdState& prev = free_path.back();
        free_path.emplace_back(j * h, prev.u.multiplied(decay_u), prev.B.multiplied(decay_b));
    }

    std::vector<MhdState> iterate;
    for (int j = 0; j <= m_nodes; ++j) iterate.emplace_back(j * h, start.u, start.B);

    PicardResult result{start, {}, {}, {}, 0};
    int growing = 0;
    const SolenoidalField zero = SolenoidalField::zero(g);
    for (int it = 1; it <= opt.picard_max_iters; ++it) {
        std::vector<NonlinearTerms> sources;
        sources.reserve(iterate.size());
        for (const auto& s : iterate) {
            sources.push_back(opt.nonlinear ? rhs_nonlinear(s, params.n()) : NonlinearTerms{zero, zero});
        }
        std::vector<MhdState> next;
        next.reserve(iterate.size());
        next.push_back(free_path[0]);
        SolenoidalField iu = zero;
        SolenoidalField ib = zero;
        for (int j = 1; j <= m_nodes; ++j) {
            iu = iu.multiplied(decay_u) + (sources[j - 1].du + sources[j].du).multiplied(weight_u).scaled(0.5);
            ib = ib.multiplied(decay_b) + (sources[j - 1].dB + sources[j].dB).multiplied(weight_b).scaled(0.5);
            next.emplace_back(j * h, free_path[j].u + iu, free_path[j].B + ib);
        }
        const double delta = x_distance(next, iterate);
        if (!result.deltas.empty() && result.deltas.back() > 0.0) {
            const double f = delta / result.deltas.back();
            result.factors.push_back(f);
            growing = f > 1.0 ? growing + 1 : 0;
        }
        result.deltas.push_back(delta);
        iterate = std::move(next);
        result.iterations = it;
        if (delta < opt.picard_tol) {
            result.final_state = iterate.back();
            result.trajectory = std::move(iterate);
            return result;
        }
        if (growing >= 3) throw NonContraction(result.factors);
    }
    throw MaxIters(opt.picard_max_iters, result.deltas.back());
}

}  // namespace fracmhd
