#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace fracmhd {

using Rational = boost::multiprecision::cpp_rational;

/// Exact value of a decimal ("0.875", "-1e-3") or fraction ("7/8") literal.
Rational parse_rational(std::string_view text);
double to_double(const Rational& r);
std::string to_string(const Rational& r);

// All templates below are instantiated for double and Rational.

template <class Scalar>
struct HolderExponents {
    Scalar p;
    Scalar q;
    Scalar r;
};

/// 1/p = 1 - 3/(4a), 1/q = 1 - 3/(4b), 1/r = 1 - 3/(8a) - 3/(8b).
/// std::domain_error unless alpha, beta > 3/4.
template <class Scalar>
HolderExponents<Scalar> holder_exponents(const Scalar& alpha, const Scalar& beta);

template <class Scalar>
struct StepValues {
    Scalar a;
    Scalar b;
    Scalar c;
};

/// a = (5/(4a) - 1) + g (2 - 3/(2a))
/// b = (2/(4a) + 3/(4b) - 1) + g (2 - 3/(2b))
/// c = (3/(8a) + 7/(8b) - 1) + g (2 - 3/(4a) - 3/(4b))
/// No range check on gamma_n.
template <class Scalar>
StepValues<Scalar> step_values(const Scalar& gamma_n, const Scalar& alpha, const Scalar& beta);

/// step_values restricted to 0 < gamma_n < 1/2 (std::domain_error otherwise).
template <class Scalar>
StepValues<Scalar> bootstrap_step(const Scalar& gamma_n, const Scalar& alpha, const Scalar& beta);

enum class Branch { A, C };
const char* branch_name(Branch b) noexcept;

/// C when 1/alpha - 1/beta > 0, A otherwise.
template <class Scalar>
Branch select_branch(const Scalar& alpha, const Scalar& beta);

template <class Scalar>
struct OrderingReport {
    StepValues<Scalar> values;
    std::array<Scalar, 3> differences;      ///< a-b, a-c, b-c
    std::array<Scalar, 3> identity_errors;  ///< |difference - closed form|
    bool descending = false;                ///< 1/alpha - 1/beta > 0
    bool ordering_holds = false;            ///< a >= b >= c if descending, else a <= b <= c
    Scalar max_identity_error() const;
};

/// Difference identities:
///   a - b = (3/4)(1/a - 1/b)(1 - 2g)
///   a - c = (3/4)(1/a - 1/b)(7/6 - g)
///   b - c = (3/4)(1/a - 1/b)(1/6 + g)
template <class Scalar>
OrderingReport<Scalar> ordering_audit(const Scalar& gamma_n, const Scalar& alpha, const Scalar& beta);

enum class LimitClass { Half, AboveHalf, BelowHalf };
const char* limit_class_name(LimitClass c) noexcept;

template <class Scalar>
struct LimitResult {
    Scalar value;
    Branch branch;
    LimitClass classification;
    Scalar constant;  ///< c0 of the affine map g -> c0 + rho g
    Scalar ratio;     ///< rho
};

/// Fixed point c0 / (1 - rho) of the selected affine branch.
template <class Scalar>
LimitResult<Scalar> closed_form_limit(const Scalar& alpha, const Scalar& beta);

/// gamma_{n+1} = c0 sum_{m<n} rho^m + gamma_1 rho^n, gamma_1 = 1/(4 alpha).
template <class Scalar>
Scalar partial_sum_gamma(const Scalar& alpha, const Scalar& beta, int n);

template <class Scalar>
struct O1Report {
    /// 1/a - 1,  1/(4a) + 3/(4b) - 1,  1/(8a) + 7/(8b) - 1
    std::array<Scalar, 3> margins;
    bool holds = false;
};

template <class Scalar>
O1Report<Scalar> inequality_audit_o1(const Scalar& alpha, const Scalar& beta);

/// alpha, beta in (3/4, 1]; 0 < gamma <= 1/2; max_steps >= 1. Boundary gamma = 1/2 with
/// max(alpha, beta) = 1 is accepted here and ends in NoTermination; use
/// decay_hypothesis_error to reject it up front.
template <class Scalar>
struct BootstrapInput {
    BootstrapInput(Scalar alpha, Scalar beta, Scalar gamma, int max_steps = 200);

    Scalar alpha;
    Scalar beta;
    Scalar gamma;
    int max_steps;
};

/// Empty when (alpha, beta, gamma) satisfies the decay hypothesis: alpha, beta in (3/4, 1],
/// 0 < gamma <= 1/2 with gamma < 1/2 when max(alpha, beta) = 1.
template <class Scalar>
std::optional<std::string> decay_hypothesis_error(const Scalar& alpha, const Scalar& beta,
                                                  const Scalar& gamma);

template <class Scalar>
struct TraceStep {
    int n;
    Scalar gamma_n;
    StepValues<Scalar> values;
    Branch branch;
    Scalar next() const { return branch == Branch::C ? values.c : values.a; }
};

enum class BootstrapOutcome { Trivial, Terminated, NoTermination };
const char* outcome_name(BootstrapOutcome o) noexcept;

template <class Scalar>
struct ExponentTrace {
    std::vector<TraceStep<Scalar>> steps;
    BootstrapOutcome outcome;
    std::optional<int> n0;  ///< first n with gamma_{n+1} >= gamma
    LimitResult<Scalar> limit;
};

template <class Scalar>
ExponentTrace<Scalar> run_bootstrap(const BootstrapInput<Scalar>& input);

/// Columns n,gamma_n,a_n,b_n,c_n,branch and a trailing "# limit=.. n0=.. outcome=.." line.
template <class Scalar>
void write_trace(std::ostream& os, const ExponentTrace<Scalar>& trace);

}  // namespace fracmhd
