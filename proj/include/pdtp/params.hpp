#pragma once

#include <cmath>
#include <string>

#include "pdtp/errors.hpp"

namespace pdtp {

/// Closed-form evaluation branch selected by the time-scale parameter.
/// The two series branches converge geometrically in xi (resp. 1/xi) and
/// neither converges near xi = 1; inside the band [0.95, 1.05] only the
/// generating-function coefficient route is exposed.
enum class Branch { kLow, kHigh, kOracleOnly };

inline constexpr double kOracleBandLo = 0.95;
inline constexpr double kOracleBandHi = 1.05;

/// Parameter triple of the discrete-time counting process.
struct PdtpParams {
  double alpha;  ///< memory exponent, in (0, 1]
  double nu;     ///< shape exponent, > 0
  double xi;     ///< dimensionless time-scale parameter, > 0

  PdtpParams(double alpha_, double nu_, double xi_)
      : alpha(alpha_), nu(nu_), xi(xi_) {
    if (!(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0))
      throw DomainError("PdtpParams: alpha must be in (0, 1], got " +
                        std::to_string(alpha));
    if (!(std::isfinite(nu) && nu > 0.0))
      throw DomainError("PdtpParams: nu must be > 0, got " +
                        std::to_string(nu));
    if (!(std::isfinite(xi) && xi > 0.0))
      throw DomainError("PdtpParams: xi must be > 0, got " +
                        std::to_string(xi));
  }

  Branch branch() const {
    if (xi < kOracleBandLo) return Branch::kLow;
    if (xi > kOracleBandHi) return Branch::kHigh;
    return Branch::kOracleOnly;
  }
};

/// Parameter triple of the continuous-time limit process. xi0 carries
/// physical dimension sec^{-alpha}; h is an optional step length used by
/// limit probes.
struct CtParams {
  double alpha;  ///< in (0, 1]
  double nu;     ///< > 0
  double xi0;    ///< > 0, dimension sec^{-alpha}
  double h = 0.0;  ///< step length in seconds; 0 means "not set"

  CtParams(double alpha_, double nu_, double xi0_, double h_ = 0.0)
      : alpha(alpha_), nu(nu_), xi0(xi0_), h(h_) {
    if (!(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0))
      throw DomainError("CtParams: alpha must be in (0, 1], got " +
                        std::to_string(alpha));
    if (!(std::isfinite(nu) && nu > 0.0))
      throw DomainError("CtParams: nu must be > 0, got " + std::to_string(nu));
    if (!(std::isfinite(xi0) && xi0 > 0.0))
      throw DomainError("CtParams: xi0 must be > 0, got " +
                        std::to_string(xi0));
    if (!(std::isfinite(h) && h >= 0.0))
      throw DomainError("CtParams: h must be >= 0, got " + std::to_string(h));
  }

  /// Discrete time-scale parameter induced by step length h: xi(h) = xi0 h^alpha.
  double scaled_xi(double step) const {
    if (!(step > 0.0))
      throw DomainError("CtParams::scaled_xi: step must be > 0");
    double s = xi0 * std::pow(step, alpha);
    if (!(s > 0.0))
      throw DomainError("CtParams::scaled_xi: xi0*h^alpha underflowed to 0");
    return s;
  }

  /// Discrete parameters at step length h.
  PdtpParams discretized(double step) const {
    return PdtpParams(alpha, nu, scaled_xi(step));
  }
};

/// Tuning knobs shared by the series evaluators.
struct EvalOptions {
  /// Relative term-size cutoff for series truncation.
  double tol = 1e-14;
  /// Hard cap on the summation index.
  long max_terms = 10000;
  /// Flag an evaluation when sum|term| / |sum term| exceeds this ratio.
  double cancellation_guard = 1e8;
  /// Absolute accuracy the default double path must certify; evaluations
  /// whose estimated error exceeds it are also flagged.
  double target_abs_error = 1e-12;
  /// Re-evaluate flagged sums with software high-precision accumulation.
  bool extended_fallback = true;
  /// Ceiling for the extended-precision retry loop.
  long max_prec_bits = 1 << 16;
};

}  // namespace pdtp
