#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracmhd/solenoidal.hpp"
#include "fracmhd/spectral_core.hpp"

namespace fracmhd {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Successive Picard differences grew for three iterations in a row.
class NonContraction : public SolverError {
public:
    NonContraction(std::vector<double> factors);
    const std::vector<double>& factors() const noexcept { return factors_; }

private:
    std::vector<double> factors_;
};

class MaxIters : public SolverError {
public:
    MaxIters(int iterations, double last_delta);
    double last_delta() const noexcept { return last_delta_; }

private:
    double last_delta_;
};

class CflViolation : public SolverError {
public:
    CflViolation(double t, double energy_before, double energy_after);
    double t() const noexcept { return t_; }

private:
    double t_;
};

class LedgerViolation : public SolverError {
public:
    LedgerViolation(double s, double t, double excess);
    double s() const noexcept { return s_; }
    double t() const noexcept { return t_; }
    double excess() const noexcept { return excess_; }

private:
    double s_;
    double t_;
    double excess_;
};

struct SolverOptions {
    double picard_tol = 1e-10;
    int picard_max_iters = 40;
    int duhamel_substeps = 64;
    /// false drops the quadratic terms (linear control runs).
    bool nonlinear = true;
};

/// Parameters of the mollified system. Exponent ranges and dt < T are checked here.
class SolverParams {
public:
    SolverParams(double alpha, double beta, long n, double dt, double T, SolverOptions options = {});

    FractionalExponent alpha() const noexcept { return alpha_; }
    FractionalExponent beta() const noexcept { return beta_; }
    long n() const noexcept { return n_; }
    double dt() const noexcept { return dt_; }
    double T() const noexcept { return T_; }
    const SolverOptions& options() const noexcept { return options_; }

    SolverParams with_dt(double dt) const;
    SolverParams with_T(double T) const;
    SolverParams with_n(long n) const;
    SolverParams with_nonlinear(bool on) const;

private:
    FractionalExponent alpha_;
    FractionalExponent beta_;
    long n_;
    double dt_;
    double T_;
    SolverOptions options_;
};

struct MhdState {
    MhdState(double t, SolenoidalField u, SolenoidalField B);

    double t;
    SolenoidalField u;
    SolenoidalField B;

    const WaveGrid& grid() const noexcept { return u.grid(); }
    double energy() const;  ///< ||u||^2 + ||B||^2
};

struct NonlinearTerms {
    SolenoidalField du;
    SolenoidalField dB;
};

/// du = P(J_n B . grad B - J_n u . grad u), dB = P(J_n B . grad u - J_n u . grad B).
NonlinearTerms rhs_nonlinear(const MhdState& state, long n);

/// J_n applied to both components.
MhdState mollify(const MhdState& state, long n);

/// Integrating-factor Heun scheme for the mollified system. Caches per-mode factors,
/// so it is cheaper than repeated step_integrate calls.
class Integrator {
public:
    Integrator(const WaveGrid& grid, const SolverParams& params);

    /// One step of params.dt(). CflViolation when energy grows past E (1 + 10 dt^2).
    MhdState step(const MhdState& state) const;

    const SolverParams& params() const noexcept { return params_; }

private:
    WaveGrid grid_;
    SolverParams params_;
    std::vector<double> decay_u_;
    std::vector<double> decay_B_;
};

MhdState step_integrate(const MhdState& state, const SolverParams& params);

/// 0.5 min(k_max^{-2 alpha}, 1 / (k_max amp)) with k_max the dealiased per-axis cutoff
/// and amp the largest grid value of |u| or |B|.
double suggest_dt(const MhdState& state, FractionalExponent alpha);

struct LedgerRow {
    double t;
    double energy_u;
    double energy_B;
    double dissipation_cum;  ///< 2 int_0^t (||A^{a/2}u||^2 + ||A^{b/2}B||^2), trapezoid

    double total() const noexcept { return energy_u + energy_B; }
};

class EnergyLedger {
public:
    void append(const LedgerRow& row);
    const std::vector<LedgerRow>& rows() const noexcept { return rows_; }
    bool empty() const noexcept { return rows_.empty(); }

    /// Checks E(t) + D(t) <= E(s) + D(s) + c_led dt (t - s) E_ref for every s < t.
    /// Returns the first violation as LedgerViolation, without throwing.
    std::optional<LedgerViolation> first_violation(double c_led, double dt, double e_ref) const;

private:
    std::vector<LedgerRow> rows_;
};

void write_ledger(std::ostream& os, const EnergyLedger& ledger);

struct LedgerOptions {
    double c_led = 1.0;
    /// Keep every k-th step as a ledger row (the dissipation integral still uses every step).
    int row_every = 1;
    /// Called with each recorded state, starting with the mollified initial state.
    std::function<void(const MhdState&)> sampler;
};

struct RunResult {
    EnergyLedger ledger;
    MhdState final_state;
    double c_led;
    double initial_energy;       ///< ||u0||^2 + ||B0||^2 before mollification
    double mollified_energy;     ///< after J_n
    double max_energy;           ///< over all ledger rows
    std::size_t steps;
};

/// Integrates J_n(u0, B0) to params.T(), recording the ledger. Throws LedgerViolation on
/// the first pair (s, t) breaking the inequality, or when J_n increases the energy.
RunResult run_with_ledger(const SolenoidalField& u0, const SolenoidalField& B0,
                          const SolverParams& params, const LedgerOptions& options = {});

struct PicardResult {
    MhdState final_state;
    std::vector<MhdState> trajectory;  ///< fixed point on the Duhamel nodes
    std::vector<double> deltas;        ///< X_T distance between successive iterates
    std::vector<double> factors;       ///< deltas[m] / deltas[m-1]
    int iterations = 0;
};

/// Joint Picard iteration on the Duhamel equations over [0, T] with duhamel_substeps
/// nodes, the kernel integrated exactly against piecewise-constant sources.
PicardResult picard_solve(const SolenoidalField& u0, const SolenoidalField& B0,
                          const SolverParams& params);

/// max over nodes of sqrt(||u||^2 + ||B||^2) + sqrt(||grad u||^2 + ||grad B||^2).
double x_norm(const std::vector<MhdState>& trajectory);
/// x_norm of the node-wise difference; trajectories must share their node count.
double x_distance(const std::vector<MhdState>& a, const std::vector<MhdState>& b);

}  // namespace fracmhd
