#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <initializer_list>

#include "pdtp/params.hpp"

namespace pdtp::powerseries {

/// Finite prefix of a formal power series: coeffs[k] multiplies u^k.
/// Arithmetic is truncation-closed: every operation on length-L inputs
/// yields a length-L result. Immutable-by-convention value type.
template <typename Scalar>
class TruncatedSeries {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  explicit TruncatedSeries(Eigen::Index length) {
    if (length < 1) throw UsageError("TruncatedSeries: length must be >= 1");
    c_ = Array::Zero(length);
  }
  explicit TruncatedSeries(Array coeffs) : c_(std::move(coeffs)) {
    if (c_.size() < 1) throw UsageError("TruncatedSeries: length must be >= 1");
  }
  TruncatedSeries(std::initializer_list<Scalar> coeffs)
      : TruncatedSeries(static_cast<Eigen::Index>(coeffs.size())) {
    Eigen::Index i = 0;
    for (Scalar v : coeffs) c_[i++] = v;
  }

  Eigen::Index length() const { return c_.size(); }
  Scalar operator[](Eigen::Index k) const { return c_[k]; }
  Scalar& operator[](Eigen::Index k) { return c_[k]; }
  const Array& coeffs() const { return c_; }

 private:
  Array c_;
};

using Series = TruncatedSeries<double>;
using SeriesX = TruncatedSeries<long double>;  // extended-precision oracle

namespace detail {

/// Neumaier running sum; robust regardless of term ordering or magnitude.
template <typename Scalar>
struct CompensatedSum {
  Scalar s = Scalar(0), comp = Scalar(0);
  void add(Scalar x) {
    Scalar t = s + x;
    if (std::fabs(static_cast<double>(s)) >= std::fabs(static_cast<double>(x)))
      comp += (s - t) + x;
    else
      comp += (x - t) + s;
    s = t;
  }
  Scalar value() const { return s + comp; }
};

}  // namespace detail

/// Coefficients of (1-u)^alpha: coeffs[k] = (-1)^k C(alpha, k).
template <typename Scalar = double>
TruncatedSeries<Scalar> binomial_series(double alpha, Eigen::Index length) {
  TruncatedSeries<Scalar> out(length);
  out[0] = Scalar(1);
  for (Eigen::Index k = 1; k < length; ++k)
    out[k] = out[k - 1] * (-(Scalar(alpha) - Scalar(k - 1)) / Scalar(k));
  return out;
}

/// Cauchy product truncated to the common length.
template <typename Scalar>
TruncatedSeries<Scalar> series_mul(const TruncatedSeries<Scalar>& a,
                                   const TruncatedSeries<Scalar>& b) {
  if (a.length() != b.length())
    throw UsageError("series_mul: length mismatch");
  const Eigen::Index n = a.length();
  TruncatedSeries<Scalar> out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    detail::CompensatedSum<Scalar> acc;
    for (Eigen::Index j = 0; j <= t; ++j) acc.add(a[j] * b[t - j]);
    out[t] = acc.value();
  }
  return out;
}

/// Coefficients of s(u)^rho via the first-order recurrence obtained from
/// s p' = rho p s' (coefficientwise), seeded with p0 = s0^rho. One pass,
/// no nested truncation error; requires s0 != 0.
template <typename Scalar>
TruncatedSeries<Scalar> series_real_power(const TruncatedSeries<Scalar>& s,
                                          double rho) {
  if (s[0] == Scalar(0))
    throw DomainError("series_real_power: constant term must be nonzero");
  const Eigen::Index n = s.length();
  TruncatedSeries<Scalar> p(n);
  p[0] = Scalar(std::pow(static_cast<long double>(s[0]),
                         static_cast<long double>(rho)));
  const Scalar r = Scalar(rho);
  for (Eigen::Index k = 1; k < n; ++k) {
    detail::CompensatedSum<Scalar> acc;
    for (Eigen::Index j = 0; j < k; ++j)
      acc.add((r * Scalar(k - j) - Scalar(j)) * p[j] * s[k - j]);
    p[k] = acc.value() / (Scalar(k) * s[0]);
  }
  return p;
}

/// Coefficients of phibar(u) = xi^nu / (xi + (1-u)^alpha)^nu, i.e. the
/// inter-arrival weights phi(k). All coefficients are nonnegative and the
/// power recurrence accumulates same-sign contributions only, which makes
/// this route the numerical trust anchor for the closed forms.
template <typename Scalar = double>
TruncatedSeries<Scalar> phi_coeffs(const PdtpParams& p, Eigen::Index length) {
  TruncatedSeries<Scalar> s = binomial_series<Scalar>(p.alpha, length);
  s[0] += Scalar(p.xi);
  TruncatedSeries<Scalar> out = series_real_power(s, -p.nu);
  const Scalar scale = Scalar(std::pow(static_cast<long double>(p.xi),
                                       static_cast<long double>(p.nu)));
  for (Eigen::Index k = 0; k < length; ++k) out[k] *= scale;
  return out;
}

/// Inter-arrival pmf coefficients theta = fbar * phibar for a general
/// arrival-at-first-step factor fbar. Requires f[0] = 0 (no zero-length
/// inter-arrival times).
template <typename Scalar = double>
TruncatedSeries<Scalar> theta_coeffs(const PdtpParams& p,
                                     const TruncatedSeries<Scalar>& f,
                                     Eigen::Index length) {
  if (f.length() != length) throw UsageError("theta_coeffs: length mismatch");
  if (f[0] != Scalar(0))
    throw UsageError("theta_coeffs: f must have zero constant term");
  return series_mul(f, phi_coeffs<Scalar>(p, length));
}

/// Default process: fbar(u) = u, i.e. theta(t) = phi(t-1).
template <typename Scalar = double>
TruncatedSeries<Scalar> theta_coeffs(const PdtpParams& p, Eigen::Index length) {
  TruncatedSeries<Scalar> ph = phi_coeffs<Scalar>(p, length);
  TruncatedSeries<Scalar> out(length);
  for (Eigen::Index k = 1; k < length; ++k) out[k] = ph[k - 1];
  return out;
}

/// Survival coefficients S[t] = P(Z > t) = 1 - sum_{k<=t} theta(k); equals
/// the n = 0 state-probability sequence.
template <typename Scalar = double>
TruncatedSeries<Scalar> survival_coeffs(const PdtpParams& p,
                                        Eigen::Index length) {
  TruncatedSeries<Scalar> th = theta_coeffs<Scalar>(p, length);
  TruncatedSeries<Scalar> out(length);
  detail::CompensatedSum<Scalar> acc;
  acc.add(Scalar(1));
  for (Eigen::Index t = 0; t < length; ++t) {
    acc.add(-th[t]);
    out[t] = acc.value();
  }
  return out;
}

/// State-probability coefficients: Phi^{(n)}(t) as [u^t] of
///   (1 - u phibar(u)) / (1 - u) * (u phibar(u))^n.
template <typename Scalar = double>
TruncatedSeries<Scalar> state_prob_coeffs(const PdtpParams& p, long n,
                                          Eigen::Index length) {
  if (n < 0) throw UsageError("state_prob_coeffs: n must be >= 0");
  TruncatedSeries<Scalar> w = survival_coeffs<Scalar>(p, length);
  if (n == 0) return w;
  TruncatedSeries<Scalar> th = theta_coeffs<Scalar>(p, length);
  for (long i = 0; i < n; ++i) w = series_mul(w, th);
  return w;
}

/// Full lower-triangular state table: row n, column t holds Phi^{(n)}(t)
/// for 0 <= n, t < length. One Cauchy product per row.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> state_table(
    const PdtpParams& p, Eigen::Index length) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat table = Mat::Zero(length, length);
  TruncatedSeries<Scalar> th = theta_coeffs<Scalar>(p, length);
  TruncatedSeries<Scalar> w = survival_coeffs<Scalar>(p, length);
  for (Eigen::Index n = 0; n < length; ++n) {
    for (Eigen::Index t = 0; t < length; ++t) table(n, t) = w[t];
    if (n + 1 < length) w = series_mul(w, th);
  }
  return table;
}

}  // namespace pdtp::powerseries
