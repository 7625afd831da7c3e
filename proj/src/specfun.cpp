#include "pdtp/specfun.hpp"

#include <algorithm>
#include <cmath>

#include "mp_float.hpp"

namespace pdtp::specfun {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;

// Largest log-magnitude a term may reach before exp() becomes unreliable.
constexpr double kLogOverflow = 700.0;

}  // namespace

SignedLog log_gamma_signed(double x) {
  if (!std::isfinite(x))
    throw DomainError("log_gamma_signed: non-finite argument");
  if (x > 0.0) return {std::lgamma(x), +1};
  if (x == std::floor(x)) return {kInf, 0};  // pole at 0, -1, -2, ...

  // Reflection: Gamma(x) = pi / (sin(pi x) Gamma(1-x)), x < 0 non-integer.
  // |sin(pi x)| = sin(pi r) with r = x - floor(x) in (0,1); the sign of
  // sin(pi x) alternates with the unit interval containing x.
  double fl = std::floor(x);
  double r = x - fl;
  double log_abs_sin = std::log(std::sin(M_PI * r));
  int sign_sin = (static_cast<long long>(fl) % 2 == 0) ? +1 : -1;
  double log_abs = std::log(M_PI) - log_abs_sin - std::lgamma(1.0 - x);
  return {log_abs, sign_sin};
}

SignedLog pochhammer_log(double c, long m) {
  if (!std::isfinite(c))
    throw DomainError("pochhammer_log: non-finite argument");
  if (m < 0) throw DomainError("pochhammer_log: m must be >= 0");
  if (m == 0) return {0.0, +1};  // empty product
  if (c > 0.0) return {std::lgamma(c + m) - std::lgamma(c), +1};

  // c <= 0: walk the finite product so that a zero factor yields the exact
  // zero marker instead of a 0 * inf ambiguity from the gamma ratio.
  double log_abs = 0.0;
  int sign = +1;
  for (long i = 0; i < m; ++i) {
    double f = c + static_cast<double>(i);
    if (f == 0.0) return {-kInf, 0};
    if (f < 0.0) sign = -sign;
    log_abs += std::log(std::fabs(f));
  }
  return {log_abs, sign};
}

namespace {

struct DoublePass {
  double sum = 0.0;
  double sum_abs = 0.0;
  double last_abs = 0.0;
  double max_log = -kInf;
  double max_logcomp = 0.0;  // largest log-space operand, for the noise model
  long terms = 0;
  bool overflowed = false;
  bool capped = false;
  bool terminated = false;  // pochhammer hit zero: series is a polynomial
};

DoublePass sum_prabhakar_double(double a, double b, double c, double z,
                                const EvalOptions& opts) {
  DoublePass r;
  double comp = 0.0;  // Neumaier compensation
  double poch_log = 0.0;
  int poch_sign = +1;
  double log_abs_z = (z == 0.0) ? -kInf : std::log(std::fabs(z));
  int small = 0, decreasing = 0;
  double prev_abs = kInf;

  for (long m = 0;; ++m) {
    if (m >= opts.max_terms) {
      r.capped = true;
      break;
    }
    double lg_den = std::lgamma(a * m + b);
    double lg_fact = std::lgamma(static_cast<double>(m) + 1.0);
    double z_part = (m == 0) ? 0.0 : m * log_abs_z;  // z^0 = 1 even at z = 0
    double log_term = poch_log + z_part - lg_fact - lg_den;
    int sign = poch_sign;
    if (z < 0.0 && (m & 1)) sign = -sign;

    if (log_term > kLogOverflow) {
      r.overflowed = true;
      r.max_log = std::max(r.max_log, log_term);
      break;
    }
    double t = (sign == 0 || log_term == -kInf)
                   ? 0.0
                   : sign * std::exp(log_term);
    double at = std::fabs(t);
    r.max_log = std::max(r.max_log, log_term);
    r.max_logcomp = std::max(
        {r.max_logcomp, std::fabs(poch_log), std::fabs(z_part),
         std::fabs(lg_fact), std::fabs(lg_den)});

    // Neumaier update.
    double s = r.sum + t;
    comp += (std::fabs(r.sum) >= at) ? (r.sum - s) + t : (t - s) + r.sum;
    r.sum = s;
    r.sum_abs += at;
    r.last_abs = at;
    r.terms = m + 1;

    // Advance the Pochhammer weight; a zero factor terminates the series.
    double f = c + static_cast<double>(m);
    if (f == 0.0) {
      r.terminated = true;
      break;
    }
    if (f < 0.0) poch_sign = -poch_sign;
    poch_log += std::log(std::fabs(f));

    if (z == 0.0) {  // only the m = 0 term survives
      r.terminated = true;
      break;
    }

    small = (at <= opts.tol * std::fabs(r.sum + comp) && r.sum + comp != 0.0)
                ? small + 1
                : 0;
    decreasing = (at <= prev_abs * (1.0 + 1e-12)) ? decreasing + 1 : 0;
    prev_abs = at;
    if (m >= 4 && small >= 3 && decreasing >= 3) break;
  }
  r.sum += comp;
  return r;
}

// Extended-precision re-summation with a verify-and-retry loop: after each
// pass the observed cancellation is measured and the precision enlarged
// until at least 64 clean bits remain.
SeriesEval sum_prabhakar_extended(double a, double b, double c, double z,
                                  double tol, const EvalOptions& opts,
                                  double max_log_hint) {
  using detail::MpFloat;
  long prec = std::max<long>(
      128, static_cast<long>(std::max(0.0, max_log_hint) / kLn2) + 96);
  SeriesEval out;
  for (int attempt = 0; attempt < 6; ++attempt) {
    prec = std::min<long>(prec, opts.max_prec_bits);
    MpFloat sum(prec), sum_abs(prec), base(prec), term(prec), gam(prec),
        arg(prec), tmp(prec);
    base.set(1.0);  // (c)_m z^m / m! at m = 0
    long terms = 0;
    bool capped = false, terminated = false;
    int small = 0;
    long last_exp = 0;

    for (long m = 0;; ++m) {
      if (m >= opts.max_terms) {
        capped = true;
        break;
      }
      arg.set(a);
      arg.mul_si(m);
      tmp.set(b);
      arg.add(arg, tmp);
      gam.gamma_of(arg);
      term.div(base, gam);
      sum.add(sum, term);
      sum_abs.add_abs_of(term);
      terms = m + 1;
      last_exp = term.is_zero() ? -(prec + 64) : term.exp2();

      base.mul_d(c + static_cast<double>(m));
      base.mul_d(z);
      base.div_si(m + 1);
      if (base.is_zero()) {  // series terminated (polynomial case or z = 0)
        terminated = true;
        break;
      }
      bool tiny = !sum_abs.is_zero() &&
                  (term.is_zero() ||
                   term.exp2() < sum_abs.exp2() - (prec + 16));
      small = tiny ? small + 1 : 0;
      if (m >= 4 && small >= 3) break;
    }

    long cancel_bits =
        sum.is_zero() ? prec : std::max<long>(0, sum_abs.exp2() - sum.exp2());
    if (!terminated && !capped && prec - cancel_bits < 64 &&
        prec < opts.max_prec_bits) {
      prec = cancel_bits + 128;
      continue;
    }
    out.value = sum.to_double();
    double rounding = std::ldexp(std::fabs(out.value) + 1e-300,
                                 static_cast<int>(
                                     std::min<long>(cancel_bits - prec + 8, 0)));
    double trunc = terminated ? 0.0
                              : std::ldexp(1.0, static_cast<int>(std::min<long>(
                                    last_exp - sum.exp2() + 4, 0))) *
                                    std::fabs(out.value);
    out.est_abs_error = rounding + trunc;
    out.terms_used = std::max<long>(terms, 1);
    out.converged = !capped && out.est_abs_error <= tol;
    return out;
  }
  out.converged = false;
  return out;
}

}  // namespace

SeriesEval prabhakar_e(double a, double b, double c, double z, double tol,
                       const EvalOptions& opts) {
  if (!(std::isfinite(a) && a > 0.0))
    throw DomainError("prabhakar_e: a must be finite and > 0");
  if (!(std::isfinite(b) && b > 0.0))
    throw DomainError("prabhakar_e: b must be finite and > 0");
  if (!std::isfinite(c) || !std::isfinite(z))
    throw DomainError("prabhakar_e: non-finite argument");
  if (!(tol > 0.0)) throw DomainError("prabhakar_e: tol must be > 0");

  DoublePass p = sum_prabhakar_double(a, b, c, z, opts);

  double cancel_ratio =
      (p.sum == 0.0) ? (p.sum_abs == 0.0 ? 1.0 : kInf) : p.sum_abs / std::fabs(p.sum);
  double noise = p.sum_abs * 2.3e-16 * (4.0 + p.max_logcomp);
  double est = p.last_abs + noise;

  bool flagged = p.overflowed || p.capped || cancel_ratio > opts.cancellation_guard ||
                 est > tol;
  if (flagged && opts.extended_fallback)
    return sum_prabhakar_extended(a, b, c, z, tol, opts, p.max_log);

  SeriesEval out;
  out.value = p.sum;
  out.est_abs_error = est;
  out.terms_used = std::max<long>(p.terms, 1);
  out.converged = !flagged;
  return out;
}

double prabhakar_density(const CtParams& ct, double t, SeriesEval* diag,
                         const EvalOptions& opts) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("prabhakar_density: t must be finite and > 0");
  double x = ct.xi0 * std::pow(t, ct.alpha);
  SeriesEval e = prabhakar_e(ct.alpha, ct.nu * ct.alpha, ct.nu, -x,
                             opts.target_abs_error, opts);
  double pre = std::exp(ct.nu * std::log(ct.xi0) +
                        (ct.nu * ct.alpha - 1.0) * std::log(t));
  if (diag) {
    *diag = e;
    diag->value = pre * e.value;
    diag->est_abs_error = pre * e.est_abs_error;
  }
  return pre * e.value;
}

}  // namespace pdtp::specfun
