#include "fracmhd/exponent_engine.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "fracmhd/tabular.hpp"

namespace fracmhd {

namespace {

template <class Scalar>
Scalar num(long p, long q = 1) {
    if constexpr (std::is_same_v<Scalar, double>) {
        return static_cast<double>(p) / static_cast<double>(q);
    } else {
        return Rational(p, q);
    }
}

template <class Scalar>
Scalar absolute(const Scalar& x) {
    return x < 0 ? Scalar(-x) : x;
}

double as_double(double x) { return x; }
double as_double(const Rational& x) { return to_double(x); }

template <class Scalar>
void require_exponent(const Scalar& x, const char* name) {
    if (!(x > num<Scalar>(3, 4) && x <= num<Scalar>(1))) {
        throw std::domain_error(std::string(name) + " must lie in (3/4, 1]");
    }
}

}  // namespace

Rational parse_rational(std::string_view text) {
    const std::string s = trim(text);
    if (s.empty()) throw std::invalid_argument("empty number");
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
        const Rational p = parse_rational(s.substr(0, slash));
        const Rational q = parse_rational(s.substr(slash + 1));
        if (q == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
        return p / q;
    }
    std::size_t pos = 0;
    bool negative = false;
    if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
    boost::multiprecision::cpp_int digits = 0;
    long scale = 0;
    bool seen_digit = false;
    bool seen_point = false;
    for (; pos < s.size(); ++pos) {
        const char ch = s[pos];
        if (ch >= '0' && ch <= '9') {
            digits = digits * 10 + (ch - '0');
            seen_digit = true;
            if (seen_point) --scale;
        } else if (ch == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!seen_digit) throw std::invalid_argument("not a number: '" + s + "'");
    if (pos < s.size()) {
        if (s[pos] != 'e' && s[pos] != 'E') throw std::invalid_argument("not a number: '" + s + "'");
        scale += parse_long(s.substr(pos + 1));
    }
    Rational value(digits);
    const Rational ten(10);
    for (long i = 0; i < std::abs(scale); ++i) {
        if (scale > 0) value *= ten;
        else value /= ten;
    }
    return negative ? Rational(-value) : value;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_string(const Rational& r) { return r.str(); }

template <class Scalar>
HolderExponents<Scalar> holder_exponents(const Scalar& alpha, const Scalar& beta) {
    if (!(alpha > num<Scalar>(3, 4)) || !(beta > num<Scalar>(3, 4))) {
        throw std::domain_error("Hoelder exponents need alpha, beta > 3/4");
    }
    const Scalar one = num<Scalar>(1);
    const Scalar ip = one - num<Scalar>(3, 4) / alpha;
    const Scalar iq = one - num<Scalar>(3, 4) / beta;
    const Scalar ir = one - num<Scalar>(3, 8) / alpha - num<Scalar>(3, 8) / beta;
    return {one / ip, one / iq, one / ir};
}

template <class Scalar>
StepValues<Scalar> step_values(const Scalar& g, const Scalar& alpha, const Scalar& beta) {
    const Scalar one = num<Scalar>(1);
    const Scalar two = num<Scalar>(2);
    // b keeps the unreduced 2/(4 alpha).
    const Scalar a = (num<Scalar>(5, 4) / alpha - one) + g * (two - num<Scalar>(3, 2) / alpha);
    const Scalar b = (num<Scalar>(2, 4) / alpha + num<Scalar>(3, 4) / beta - one) +
                     g * (two - num<Scalar>(3, 2) / beta);
    const Scalar c = (num<Scalar>(3, 8) / alpha + num<Scalar>(7, 8) / beta - one) +
                     g * (two - num<Scalar>(3, 4) / alpha - num<Scalar>(3, 4) / beta);
    return {a, b, c};
}

template <class Scalar>
StepValues<Scalar> bootstrap_step(const Scalar& g, const Scalar& alpha, const Scalar& beta) {
    if (!(g > 0 && g < num<Scalar>(1, 2))) {
        throw std::domain_error("bootstrap step needs 0 < gamma_n < 1/2");
    }
    return step_values(g, alpha, beta);
}

const char* branch_name(Branch b) noexcept { return b == Branch::C ? "c" : "a"; }

template <class Scalar>
Branch select_branch(const Scalar& alpha, const Scalar& beta) {
    const Scalar d = num<Scalar>(1) / alpha - num<Scalar>(1) / beta;
    return d > 0 ? Branch::C : Branch::A;
}

template <class Scalar>
Scalar OrderingReport<Scalar>::max_identity_error() const {
    Scalar m = identity_errors[0];
    for (const auto& e : identity_errors) {
        if (e > m) m = e;
    }
    return m;
}

template <class Scalar>
OrderingReport<Scalar> ordering_audit(const Scalar& g, const Scalar& alpha, const Scalar& beta) {
    OrderingReport<Scalar> rep{step_values(g, alpha, beta), {}, {}, false, false};
    const auto& v = rep.values;
    const Scalar d = num<Scalar>(1) / alpha - num<Scalar>(1) / beta;
    const Scalar k = num<Scalar>(3, 4) * d;
    rep.differences = {v.a - v.b, v.a - v.c, v.b - v.c};
    const std::array<Scalar, 3> closed = {k * (num<Scalar>(1) - num<Scalar>(2) * g),
                                          k * (num<Scalar>(7, 6) - g), k * (num<Scalar>(1, 6) + g)};
    for (int i = 0; i < 3; ++i) rep.identity_errors[i] = absolute<Scalar>(rep.differences[i] - closed[i]);
    rep.descending = d > 0;
    rep.ordering_holds = rep.descending ? (v.a >= v.b && v.b >= v.c) : (v.a <= v.b && v.b <= v.c);
    return rep;
}

const char* limit_class_name(LimitClass c) noexcept {
    switch (c) {
        case LimitClass::Half: return "half";
        case LimitClass::AboveHalf: return "above-half";
        case LimitClass::BelowHalf: return "below-half";
    }
    return "?";
}

template <class Scalar>
LimitResult<Scalar> closed_form_limit(const Scalar& alpha, const Scalar& beta) {
    require_exponent(alpha, "alpha");
    require_exponent(beta, "beta");
    const Branch branch = select_branch(alpha, beta);
    const Scalar one = num<Scalar>(1);
    Scalar c0;
    Scalar rho;
    if (branch == Branch::A) {
        c0 = num<Scalar>(5, 4) / alpha - one;
        rho = num<Scalar>(2) - num<Scalar>(3, 2) / alpha;
    } else {
        c0 = num<Scalar>(3, 8) / alpha + num<Scalar>(7, 8) / beta - one;
        rho = num<Scalar>(2) - num<Scalar>(3, 4) / alpha - num<Scalar>(3, 4) / beta;
    }
    const Scalar value = c0 / (one - rho);
    const Scalar half = num<Scalar>(1, 2);
    LimitClass cls;
    if constexpr (std::is_same_v<Scalar, double>) {
        const double eps = 8.0 * std::numeric_limits<double>::epsilon();
        cls = std::abs(value - 0.5) <= eps ? LimitClass::Half
              : value > 0.5                ? LimitClass::AboveHalf
                                           : LimitClass::BelowHalf;
    } else {
        cls = value == half ? LimitClass::Half : value > half ? LimitClass::AboveHalf : LimitClass::BelowHalf;
    }
    return {value, branch, cls, c0, rho};
}

template <class Scalar>
Scalar partial_sum_gamma(const Scalar& alpha, const Scalar& beta, int n) {
    if (n < 0) throw std::invalid_argument("partial sum index must be >= 0");
    const auto lim = closed_form_limit(alpha, beta);
    Scalar sum = 0;
    Scalar power = num<Scalar>(1);
    for (int m = 0; m < n; ++m) {
        sum += power;
        power *= lim.ratio;
    }
    return lim.constant * sum + num<Scalar>(1, 4) / alpha * power;
}

template <class Scalar>
O1Report<Scalar> inequality_audit_o1(const Scalar& alpha, const Scalar& beta) {
    const Scalar one = num<Scalar>(1);
    O1Report<Scalar> rep;
    rep.margins = {one / alpha - one, num<Scalar>(1, 4) / alpha + num<Scalar>(3, 4) / beta - one,
                   num<Scalar>(1, 8) / alpha + num<Scalar>(7, 8) / beta - one};
    rep.holds = rep.margins[0] >= 0 && rep.margins[1] >= 0 && rep.margins[2] >= 0;
    return rep;
}

template <class Scalar>
BootstrapInput<Scalar>::BootstrapInput(Scalar a, Scalar b, Scalar g, int steps)
    : alpha(std::move(a)), beta(std::move(b)), gamma(std::move(g)), max_steps(steps) {
    require_exponent(alpha, "alpha");
    require_exponent(beta, "beta");
    if (!(gamma > 0 && gamma <= num<Scalar>(1, 2))) {
        throw std::domain_error("gamma must lie in (0, 1/2]");
    }
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
}

template <class Scalar>
std::optional<std::string> decay_hypothesis_error(const Scalar& alpha, const Scalar& beta,
                                                  const Scalar& gamma) {
    const Scalar lo = num<Scalar>(3, 4);
    const Scalar one = num<Scalar>(1);
    if (!(alpha > lo && alpha <= one)) return "alpha must satisfy 3/4 < alpha <= 1";
    if (!(beta > lo && beta <= one)) return "beta must satisfy 3/4 < beta <= 1";
    const Scalar half = num<Scalar>(1, 2);
    const bool at_one = alpha == one || beta == one;
    if (at_one) {
        if (!(gamma > 0 && gamma < half)) return "gamma must satisfy 0 < gamma < 1/2 when max(alpha, beta) = 1";
    } else if (!(gamma > 0 && gamma <= half)) {
        return "gamma must satisfy 0 < gamma <= 1/2";
    }
    return std::nullopt;
}

const char* outcome_name(BootstrapOutcome o) noexcept {
    switch (o) {
        case BootstrapOutcome::Trivial: return "trivial";
        case BootstrapOutcome::Terminated: return "terminated";
        case BootstrapOutcome::NoTermination: return "no-termination";
    }
    return "?";
}

template <class Scalar>
ExponentTrace<Scalar> run_bootstrap(const BootstrapInput<Scalar>& in) {
    ExponentTrace<Scalar> trace{{}, BootstrapOutcome::Trivial, std::nullopt,
                                closed_form_limit(in.alpha, in.beta)};
    Scalar g = num<Scalar>(1, 4) / in.alpha;
    if (in.gamma <= g) {
        trace.n0 = 0;
        return trace;
    }
    const Branch branch = select_branch(in.alpha, in.beta);
    for (int n = 1; n <= in.max_steps; ++n) {
        TraceStep<Scalar> step{n, g, bootstrap_step(g, in.alpha, in.beta), branch};
        g = step.next();
        trace.steps.push_back(step);
        if (g >= in.gamma) {
            trace.outcome = BootstrapOutcome::Terminated;
            trace.n0 = n;
            return trace;
        }
    }
    trace.outcome = BootstrapOutcome::NoTermination;
    return trace;
}

template <class Scalar>
void write_trace(std::ostream& os, const ExponentTrace<Scalar>& trace) {
    os << "n,gamma_n,a_n,b_n,c_n,branch\n";
    for (const auto& s : trace.steps) {
        os << s.n << ',' << format_double(as_double(s.gamma_n)) << ','
           << format_double(as_double(s.values.a)) << ',' << format_double(as_double(s.values.b)) << ','
           << format_double(as_double(s.values.c)) << ',' << branch_name(s.branch) << '\n';
    }
    os << "# limit=" << format_double(as_double(trace.limit.value))
       << " branch=" << branch_name(trace.limit.branch)
       << " class=" << limit_class_name(trace.limit.classification)
       << " n0=" << (trace.n0 ? std::to_string(*trace.n0) : std::string("none"))
       << " outcome=" << outcome_name(trace.outcome) << '\n';
}

#define FRACMHD_INSTANTIATE(S)                                                              \
    template HolderExponents<S> holder_exponents<S>(const S&, const S&);                    \
    template StepValues<S> step_values<S>(const S&, const S&, const S&);                    \
    template StepValues<S> bootstrap_step<S>(const S&, const S&, const S&);                 \
    template Branch select_branch<S>(const S&, const S&);                                   \
    template struct OrderingReport<S>;                                                      \
    template OrderingReport<S> ordering_audit<S>(const S&, const S&, const S&);             \
    template LimitResult<S> closed_form_limit<S>(const S&, const S&);                       \
    template S partial_sum_gamma<S>(const S&, const S&, int);                               \
    template O1Report<S> inequality_audit_o1<S>(const S&, const S&);                        \
    template struct BootstrapInput<S>;                                                      \
    template std::optional<std::string> decay_hypothesis_error<S>(const S&, const S&, const S&); \
    template ExponentTrace<S> run_bootstrap<S>(const BootstrapInput<S>&);                   \
    template void write_trace<S>(std::ostream&, const ExponentTrace<S>&);

FRACMHD_INSTANTIATE(double)
FRACMHD_INSTANTIATE(Rational)

#undef FRACMHD_INSTANTIATE

}  // namespace fracmhd
