#pragma once

#include <limits>

#include "pdtp/params.hpp"

namespace pdtp::specfun {

/// Sign-tracked logarithm of a real quantity: value = sign * exp(log_abs).
/// Exact zero is encoded as {-inf, 0}; a gamma pole as {+inf, 0}, so that
/// any 1/Gamma factor built from it evaluates to exact 0.
struct SignedLog {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  bool is_zero() const { return sign == 0 && log_abs < 0; }
  bool is_pole() const { return sign == 0 && log_abs > 0; }
};

/// log|Gamma(x)| with the sign of Gamma(x). Poles at nonpositive integers
/// report {+inf, 0}. Relative accuracy of the log is a few ulp on (0, 1e6);
/// negative non-integer arguments go through the reflection identity.
SignedLog log_gamma_signed(double x);

/// Signed log of the rising factorial (c)_m = Gamma(c+m)/Gamma(c).
/// (c)_0 = 1 exactly; (0)_m = 0 for m >= 1 (zero marker).
SignedLog pochhammer_log(double c, long m);

/// Outcome of a truncated series evaluation.
struct SeriesEval {
  double value = 0.0;
  double est_abs_error = 0.0;
  long terms_used = 1;
  bool converged = false;
};

/// Three-parameter Mittag-Leffler (Prabhakar) function
///   E_{a,b}^c(z) = sum_{m>=0} (c)_m z^m / (m! Gamma(a m + b)),  a, b > 0.
/// Real arguments only. The default path sums in sign-tracked log space with
/// compensated accumulation; evaluations flagged by the cancellation guard
/// are redone in software high precision when opts.extended_fallback is set.
/// Non-convergence is reported through the converged flag, never silently.
SeriesEval prabhakar_e(double a, double b, double c, double z,
                       double tol = 1e-14, const EvalOptions& opts = {});

/// Continuous-limit inter-arrival density
///   chi(t) = xi0^nu t^{nu*alpha - 1} E_{alpha, nu*alpha}^{nu}(-xi0 t^alpha),  t > 0.
/// If diag is non-null it receives the underlying series diagnostics.
double prabhakar_density(const CtParams& ct, double t,
                         SeriesEval* diag = nullptr,
                         const EvalOptions& opts = {});

}  // namespace pdtp::specfun
