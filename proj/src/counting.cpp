#include "pdtp/counting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mp_float.hpp"
#include "pdtp/powerseries.hpp"
#include "pdtp/specfun.hpp"

namespace pdtp::counting {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;
constexpr double kLogOverflow = 680.0;

// Deep-time cutoff past which the auto route prefers the coefficient oracle.
constexpr long kAutoOracleDepth = 128;

// ------------------------------------------------------------------
// Shared series kernel of the two-branch closed forms:
//
//   S_k = sum_{m>=0} (-1)^m (c)_m w^m / m! * R_k(m)
//
//   low branch  (w = xi):    R_k(m) = prod_{i=0}^{k-1} (alpha(m+c) + shift + i)
//   high branch (w = 1/xi):  R_k(m) = prod_{i=1}^{k}   (alpha m + shift - i)
//
// and the reported value is pre_k * S_k with
//   low:  pre_k = xi^c / k!        high: pre_k = (-1)^k / k!.
//
// The high-branch product is the finite-product reading of the gamma ratio
// Gamma(y)/Gamma(y-k); it is exact at the poles (a zero factor kills the
// term, the empty product is 1), which the formulas rely on at m = 0 and,
// for rational alpha, at small m.
// ------------------------------------------------------------------

struct KernelJob {
  double alpha;
  double c;      // Pochhammer weight parameter, > 0 here
  double xi;
  int shift;     // 1 for the state sums, 0/1 per branch for the pmf
  bool high;
  long k;
};

struct KernelOut {
  double value = 0.0;
  double est_abs = 0.0;       // absolute error estimate on value
  double cancel_ratio = 1.0;  // sum|term| / |sum|
  long terms = 0;
  bool flagged = false;       // value could not be certified at the target
  bool used_extended = false;
  bool capped = false;
};

// Smallest m past which the high-branch product can no longer contain a
// zero or negative factor (all zeros live at alpha*m + shift - i = 0,
// i = 1..k).
long high_branch_safe_m(const KernelJob& j) {
  if (!j.high || j.k == 0) return 0;
  return static_cast<long>(
             std::ceil((static_cast<double>(j.k) - j.shift) / j.alpha)) +
         1;
}

struct SignedLogTerm {
  double log_abs;
  int sign;  // 0 => exact zero term
};

// log |R_k(m)| and its sign for one m.
SignedLogTerm log_ratio_term(const KernelJob& j, long m) {
  if (j.k == 0) return {0.0, +1};
  if (!j.high) {
    double x = j.alpha * (static_cast<double>(m) + j.c) + j.shift;
    return {std::lgamma(x + static_cast<double>(j.k)) - std::lgamma(x), +1};
  }
  double y = j.alpha * static_cast<double>(m) + j.shift;
  if (y - static_cast<double>(j.k) > 0.0)
    return {std::lgamma(y) - std::lgamma(y - static_cast<double>(j.k)), +1};
  double log_abs = 0.0;
  int sign = +1;
  for (long i = 1; i <= j.k; ++i) {
    double f = y - static_cast<double>(i);
    if (f == 0.0) return {-kInf, 0};
    if (f < 0.0) sign = -sign;
    log_abs += std::log(std::fabs(f));
  }
  return {log_abs, sign};
}

struct DoubleSum {
  double sum = 0.0, sum_abs = 0.0, last_abs = 0.0;
  double max_log = -kInf, max_logcomp = 0.0;
  long terms = 0;
  bool overflow = false, capped = false;
};

DoubleSum kernel_sum_double(const KernelJob& j, const EvalOptions& opts) {
  DoubleSum r;
  double comp = 0.0;
  const double w = j.high ? 1.0 / j.xi : j.xi;
  const double log_w = std::log(w);
  const long m_min = std::max<long>(4, high_branch_safe_m(j) + 3);
  double poch_log = 0.0;  // (c)_m, c > 0: always positive
  int small = 0, decreasing = 0;
  double prev_abs = kInf;

  for (long m = 0;; ++m) {
    if (m >= opts.max_terms) {
      r.capped = true;
      break;
    }
    SignedLogTerm ratio = log_ratio_term(j, m);
    double lg_fact = std::lgamma(static_cast<double>(m) + 1.0);
    double log_term = poch_log + m * log_w - lg_fact + ratio.log_abs;
    int sign = (m & 1) ? -1 : +1;
    sign *= ratio.sign;

    if (log_term > kLogOverflow) {
      r.overflow = true;
      r.max_log = std::max(r.max_log, log_term);
      break;
    }
    double t = (sign == 0) ? 0.0 : sign * std::exp(log_term);
    double at = std::fabs(t);
    r.max_log = std::max(r.max_log, log_term);
    r.max_logcomp =
        std::max({r.max_logcomp, std::fabs(poch_log),
                  std::fabs(m * log_w), lg_fact, std::fabs(ratio.log_abs)});

    double s = r.sum + t;
    comp += (std::fabs(r.sum) >= at) ? (r.sum - s) + t : (t - s) + r.sum;
    r.sum = s;
    r.sum_abs += at;
    r.last_abs = at;
    r.terms = m + 1;

    poch_log += std::log(j.c + static_cast<double>(m));

    small = (at <= opts.tol * std::fabs(r.sum + comp) && r.sum + comp != 0.0)
                ? small + 1
                : 0;
    decreasing = (at <= prev_abs * (1.0 + 1e-12)) ? decreasing + 1 : 0;
    prev_abs = at;
    if (m >= m_min && small >= 3 && decreasing >= 3) break;
  }
  r.sum += comp;
  return r;
}

// pre_k applied in log space so that huge S against tiny 1/k! cannot
// overflow on the way to a bounded probability.
double apply_prefactor(const KernelJob& j, double s) {
  if (s == 0.0) return 0.0;
  double log_pre = -std::lgamma(static_cast<double>(j.k) + 1.0);
  int sign = +1;
  if (j.high) {
    if (j.k & 1) sign = -sign;
  } else {
    log_pre += j.c * std::log(j.xi);
  }
  double v = sign * (s < 0 ? -1.0 : 1.0) *
             std::exp(log_pre + std::log(std::fabs(s)));
  return v;
}

double prefactor_scale(const KernelJob& j) {
  double log_pre = -std::lgamma(static_cast<double>(j.k) + 1.0);
  if (!j.high) log_pre += j.c * std::log(j.xi);
  return std::exp(log_pre);
}

// ------------------------------------------------------------------
// Extended-precision column evaluation: values for every k = 0..k_max in
// one m-sweep, the running R-product updated incrementally in k. Precision
// is enlarged until the observed cancellation leaves >= 64 clean bits.
// ------------------------------------------------------------------

struct ExtendedColumn {
  std::vector<double> values;   // k = 0..k_max, prefactor applied
  std::vector<double> est_abs;
  long terms = 0;
  bool converged = true;
  long prec_bits = 0;
};

ExtendedColumn kernel_column_extended(const KernelJob& base_job, long k_max,
                                      const EvalOptions& opts,
                                      double max_log_hint) {
  using detail::MpFloat;
  long prec = std::max<long>(
      192, static_cast<long>(std::max(0.0, max_log_hint) / kLn2) + 96);

  ExtendedColumn out;
  for (int attempt = 0; attempt < 6; ++attempt) {
    prec = std::min<long>(prec, opts.max_prec_bits);
    const double w = base_job.high ? 1.0 / base_job.xi : base_job.xi;
    KernelJob jk = base_job;
    jk.k = k_max;
    const long m_min = std::max<long>(4, high_branch_safe_m(jk) + 3);

    std::vector<MpFloat> sums, abs_sums;
    sums.reserve(k_max + 1);
    abs_sums.reserve(k_max + 1);
    for (long k = 0; k <= k_max; ++k) {
      sums.emplace_back(prec);
      abs_sums.emplace_back(prec);
    }
    MpFloat basev(prec), r(prec), term(prec), factor(prec);
    basev.set(1.0);  // signed (-1)^m (c)_m w^m / m!
    long terms = 0;
    bool capped = false;
    int small = 0;

    for (long m = 0;; ++m) {
      if (m >= opts.max_terms) {
        capped = true;
        break;
      }
      r.set(1.0);
      sums[0].add(sums[0], basev);
      abs_sums[0].add_abs_of(basev);
      for (long k = 1; k <= k_max; ++k) {
        // low: factor = alpha(m+c) + shift + (k-1); high: alpha m + shift - k
        if (!base_job.high) {
          factor.set(base_job.alpha);
          factor.mul_d(static_cast<double>(m) + base_job.c);
          MpFloat add(static_cast<double>(base_job.shift + (k - 1)), prec);
          factor.add(factor, add);
        } else {
          factor.set(base_job.alpha);
          factor.mul_si(m);
          MpFloat add(static_cast<double>(base_job.shift) -
                          static_cast<double>(k),
                      prec);
          factor.add(factor, add);
        }
        r.mul(r, factor);
        term.mul(basev, r);
        sums[k].add(sums[k], term);
        abs_sums[k].add_abs_of(term);
      }
      terms = m + 1;

      // advance base: *= -(c+m) w / (m+1)
      basev.mul_d(-(base_job.c + static_cast<double>(m)) * w);
      basev.div_si(m + 1);

      bool tiny;
      if (k_max == 0) {
        tiny = !abs_sums[0].is_zero() &&
               (basev.is_zero() ||
                basev.exp2() < abs_sums[0].exp2() - (prec + 16));
      } else {
        tiny = !abs_sums[k_max].is_zero() && !term.is_zero() &&
               term.exp2() < abs_sums[k_max].exp2() - (prec + 16);
        if (term.is_zero() && m > m_min) tiny = true;
      }
      small = tiny ? small + 1 : 0;
      if (m >= m_min && small >= 3) break;
    }

    long worst_cancel = 0;
    for (long k = 0; k <= k_max; ++k) {
      long cb = sums[k].is_zero()
                    ? 0
                    : std::max<long>(0, abs_sums[k].exp2() - sums[k].exp2());
      worst_cancel = std::max(worst_cancel, cb);
    }
    if (!capped && prec - worst_cancel < 64 && prec < opts.max_prec_bits) {
      prec = worst_cancel + 128;
      continue;
    }

    out.values.assign(k_max + 1, 0.0);
    out.est_abs.assign(k_max + 1, 0.0);
    out.terms = terms;
    out.prec_bits = prec;
    out.converged = !capped;

    MpFloat pre(prec), val(prec), kfact(prec);
    kfact.set(1.0);
    if (!base_job.high) {
      MpFloat xiv(base_job.xi, prec);
      pre.pow_d(xiv, base_job.c);
    } else {
      pre.set(1.0);
    }
    for (long k = 0; k <= k_max; ++k) {
      if (k > 0) kfact.mul_si(k);
      val.mul(pre, sums[k]);
      val.div(val, kfact);
      if (base_job.high && (k & 1)) val.neg();
      out.values[k] = val.to_double();
      long cb = sums[k].is_zero()
                    ? 0
                    : std::max<long>(0, abs_sums[k].exp2() - sums[k].exp2());
      out.est_abs[k] =
          std::ldexp(std::fabs(out.values[k]) + 1e-300,
                     static_cast<int>(std::min<long>(cb - prec + 8, 0)));
    }
    return out;
  }
  out.converged = false;
  return out;
}

KernelOut kernel_eval(const KernelJob& j, const EvalOptions& opts) {
  DoubleSum d = kernel_sum_double(j, opts);
  KernelOut out;
  out.terms = d.terms;
  out.capped = d.capped;
  out.cancel_ratio = (d.sum == 0.0) ? (d.sum_abs == 0.0 ? 1.0 : kInf)
                                    : d.sum_abs / std::fabs(d.sum);
  out.value = apply_prefactor(j, d.sum);
  double noise = d.sum_abs * 2.3e-16 * (4.0 + d.max_logcomp);
  out.est_abs = prefactor_scale(j) * (d.last_abs + noise);

  out.flagged = d.overflow || d.capped ||
                out.cancel_ratio > opts.cancellation_guard ||
                !(out.est_abs <= opts.target_abs_error);
  if (out.flagged && opts.extended_fallback) {
    ExtendedColumn col = kernel_column_extended(j, j.k, opts, d.max_log);
    out.value = col.values[j.k];
    out.est_abs = col.est_abs[j.k];
    out.terms = col.terms;
    out.capped = !col.converged;
    out.flagged = !col.converged;
    out.used_extended = true;
  }
  return out;
}

void fill_diag(EvalDiag* diag, const KernelOut& k) {
  if (!diag) return;
  diag->converged = !k.flagged;
  diag->used_extended = k.used_extended;
  diag->terms = k.terms;
  diag->est_abs_error = k.est_abs;
  diag->cancel_ratio = k.cancel_ratio;
}

[[noreturn]] void throw_branch_error(const PdtpParams& p,
                                     const char* op_name) {
  throw BranchError(
      std::string(op_name) + ": xi = " + std::to_string(p.xi) +
          " lies in the oracle-only band [" + std::to_string(kOracleBandLo) +
          ", " + std::to_string(kOracleBandHi) +
          "] where neither closed-form branch converges; use the oracle "
          "route (--route oracle)",
      p.xi);
}

Route resolve_route(const PdtpParams& p, long depth, Route requested,
                    const char* op_name) {
  if (requested == Route::kOracle) return Route::kOracle;
  bool band = p.branch() == Branch::kOracleOnly;
  if (requested == Route::kClosedForm) {
    if (band) throw_branch_error(p, op_name);
    return Route::kClosedForm;
  }
  return (band || depth > kAutoOracleDepth) ? Route::kOracle
                                            : Route::kClosedForm;
}

// Survival-type sum A_n(t) = P(N(t) >= n); state probabilities are the
// telescoping differences A_n - A_{n+1}. A_0 = 1 identically in both
// branches (only the m = 0 term survives).
double eval_survival_ge(const PdtpParams& p, long n, long t,
                        const EvalOptions& opts, KernelOut* detail_out) {
  if (t < n) return 0.0;
  if (n == 0) return 1.0;
  const bool high = p.xi > 1.0;
  KernelJob j{p.alpha, static_cast<double>(n) * p.nu, p.xi,
              high ? 0 : 1, high, t - n};
  KernelOut k = kernel_eval(j, opts);
  if (detail_out) *detail_out = k;
  return k.value;
}

double oracle_theta(const PdtpParams& p, long t) {
  if (t == 0) return 0.0;
  auto th = powerseries::theta_coeffs<long double>(p, t + 1);
  return static_cast<double>(th[t]);
}

double oracle_state(const PdtpParams& p, long n, long t) {
  if (t < n) return 0.0;
  auto w = powerseries::state_prob_coeffs<long double>(p, n, t + 1);
  return static_cast<double>(w[t]);
}

}  // namespace

double interarrival_pmf(const PdtpParams& p, long t, Route route,
                        const EvalOptions& opts, EvalDiag* diag) {
  if (t < 0) throw UsageError("interarrival_pmf: t must be >= 0");
  if (diag) *diag = EvalDiag{};
  if (t == 0) return 0.0;  // inter-arrival times are almost surely nonzero

  Route r = resolve_route(p, t, route, "interarrival_pmf");
  if (r == Route::kOracle) return oracle_theta(p, t);

  const bool high = p.xi > 1.0;
  KernelJob j{p.alpha, p.nu, p.xi, high ? 1 : 0, high, t - 1};
  KernelOut k = kernel_eval(j, opts);
  fill_diag(diag, k);
  if (k.flagged && !diag)
    throw ConvergenceError("interarrival series did not converge", k.est_abs);
  return k.value;
}

double state_prob(const PdtpParams& p, long n, long t, Route route,
                  const EvalOptions& opts, EvalDiag* diag) {
  if (n < 0 || t < 0) throw UsageError("state_prob: n, t must be >= 0");
  if (diag) *diag = EvalDiag{};
  if (t < n) return 0.0;
  if (n == 0 && t == 0) return 1.0;

  Route r = resolve_route(p, t, route, "state_prob");
  if (r == Route::kOracle) return oracle_state(p, n, t);

  KernelOut ka{}, kb{};
  double a = eval_survival_ge(p, n, t, opts, &ka);
  double b = eval_survival_ge(p, n + 1, t, opts, &kb);
  if (diag) {
    diag->converged = !ka.flagged && !kb.flagged;
    diag->used_extended = ka.used_extended || kb.used_extended;
    diag->terms = ka.terms + kb.terms;
    diag->est_abs_error = ka.est_abs + kb.est_abs;
    diag->cancel_ratio = std::max(ka.cancel_ratio, kb.cancel_ratio);
  } else if (ka.flagged || kb.flagged) {
    throw ConvergenceError("state series did not converge",
                           ka.est_abs + kb.est_abs);
  }
  double v = a - b;
  if (v < 0.0 && v >= -1e-12) v = 0.0;  // roundoff clamp
  return v;
}

StateDistribution state_distribution(const PdtpParams& p, long t, Route route,
                                     const EvalOptions& opts) {
  if (t < 0) throw UsageError("state_distribution: t must be >= 0");
  Route r = resolve_route(p, t, route, "state_distribution");

  StateDistribution out;
  out.t = t;
  out.probs.resize(t + 1);
  if (r == Route::kOracle) {
    auto table = powerseries::state_table<long double>(p, t + 1);
    for (long n = 0; n <= t; ++n)
      out.probs[n] = static_cast<double>(table(n, t));
  } else {
    // A_n(t) evaluated once per n; differences telescope.
    double prev = 1.0;  // A_0
    for (long n = 0; n <= t; ++n) {
      double next = eval_survival_ge(p, n + 1, t, opts, nullptr);
      out.probs[n] = prev - next;
      prev = next;
    }
  }
  double residual = std::fabs(out.probs.sum() - 1.0);
  if (!(residual <= 1e-8))
    throw IntegrityError(
        "state_distribution: normalization residual " +
            std::to_string(residual) + " exceeds 1e-8 at t = " +
            std::to_string(t),
        residual);
  for (long n = 0; n <= t; ++n) {
    if (out.probs[n] < 0.0) {
      if (out.probs[n] < -1e-12)
        throw IntegrityError(
            "state_distribution: negative probability beyond roundoff at n "
            "= " + std::to_string(n),
            out.probs[n]);
      out.probs[n] = 0.0;
    }
  }
  return out;
}

Eigen::MatrixXd state_table(const PdtpParams& p, long t_max, Route route,
                            const EvalOptions& opts) {
  if (t_max < 0) throw UsageError("state_table: t_max must be >= 0");
  Route r = resolve_route(p, t_max, route, "state_table");
  const long n_rows = t_max + 1;

  if (r == Route::kOracle) {
    auto table = powerseries::state_table<long double>(p, n_rows);
    return table.cast<double>();
  }

  // Survival table A(n, t); row 0 is identically 1. Columns flagged by the
  // double pass are redone as one extended-precision sweep per state.
  Eigen::MatrixXd surv = Eigen::MatrixXd::Zero(t_max + 2, t_max + 1);
  surv.row(0).setOnes();
  for (long n = 1; n <= t_max; ++n) {
    const bool high = p.xi > 1.0;
    KernelJob j{p.alpha, static_cast<double>(n) * p.nu, p.xi,
                high ? 0 : 1, high, 0};
    long k_max = t_max - n;
    long worst_flagged = -1;
    double worst_log = 0.0;
    for (long k = 0; k <= k_max; ++k) {
      j.k = k;
      DoubleSum d = kernel_sum_double(j, opts);
      double cancel = (d.sum == 0.0) ? (d.sum_abs == 0.0 ? 1.0 : kInf)
                                     : d.sum_abs / std::fabs(d.sum);
      double noise = d.sum_abs * 2.3e-16 * (4.0 + d.max_logcomp);
      double est = prefactor_scale(j) * (d.last_abs + noise);
      bool flagged = d.overflow || d.capped ||
                     cancel > opts.cancellation_guard ||
                     !(est <= opts.target_abs_error);
      surv(n, n + k) = apply_prefactor(j, d.sum);
      if (flagged) {
        worst_flagged = k;
        worst_log = std::max(worst_log, d.max_log);
      }
    }
    if (worst_flagged >= 0) {
      if (!opts.extended_fallback)
        throw ConvergenceError(
            "state_table: flagged column with fallback disabled (state " +
                std::to_string(n) + ")",
            0.0);
      ExtendedColumn col =
          kernel_column_extended(j, worst_flagged, opts, worst_log);
      if (!col.converged)
        throw ConvergenceError("state_table: extended sweep hit the term cap",
                               0.0);
      for (long k = 0; k <= worst_flagged; ++k)
        surv(n, n + k) = col.values[k];
    }
  }

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(n_rows, n_rows);
  for (long n = 0; n <= t_max; ++n)
    for (long t = n; t <= t_max; ++t) {
      double v = surv(n, t) - surv(n + 1, t);
      if (v < 0.0 && v >= -1e-12) v = 0.0;
      table(n, t) = v;
    }
  return table;
}

double ct_state_prob(const CtParams& ct, long n, double t,
                     const EvalOptions& opts, EvalDiag* diag) {
  if (n < 0) throw UsageError("ct_state_prob: n must be >= 0");
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("ct_state_prob: t must be finite and > 0");

  const double x = ct.xi0 * std::pow(t, ct.alpha);
  const double cn = static_cast<double>(n) * ct.nu;
  specfun::SeriesEval e1 = specfun::prabhakar_e(
      ct.alpha, ct.alpha * cn + 1.0, cn, -x, opts.target_abs_error, opts);
  specfun::SeriesEval e2 = specfun::prabhakar_e(
      ct.alpha, ct.alpha * (cn + ct.nu) + 1.0, cn + ct.nu, -x,
      opts.target_abs_error, opts);
  double xnv = std::pow(x, cn);
  double xv = std::pow(x, ct.nu);
  double v = xnv * (e1.value - xv * e2.value);
  if (diag) {
    diag->converged = e1.converged && e2.converged;
    diag->used_extended = false;
    diag->terms = e1.terms_used + e2.terms_used;
    diag->est_abs_error = xnv * (e1.est_abs_error + xv * e2.est_abs_error);
    diag->cancel_ratio = 0.0;
  }
  if (v < 0.0 && v >= -1e-12) v = 0.0;
  return v;
}

double tail_asymptote(const PdtpParams& p, TailMode mode, double t) {
  if (!(p.alpha < 1.0))
    throw DomainError(
        "tail_asymptote: no power-law tail at alpha = 1 (memoryless case)");
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("tail_asymptote: t must be finite and > 0");
  double g = std::tgamma(1.0 - p.alpha);
  if (mode == TailMode::kState)
    return (p.nu / p.xi) * std::pow(t, -p.alpha) / g;
  return (p.alpha * p.nu / p.xi) * std::pow(t, -p.alpha - 1.0) / g;
}

std::vector<LimitProbePoint> scaled_limit_probe(const CtParams& ct, long n,
                                                double t,
                                                std::span<const double> h_list,
                                                const EvalOptions& opts) {
  if (!(t > 0.0)) throw DomainError("scaled_limit_probe: t must be > 0");
  if (n < 0) throw UsageError("scaled_limit_probe: n must be >= 0");

  std::vector<LimitProbePoint> out;
  out.reserve(h_list.size());
  const double ct_value = ct_state_prob(ct, n, t, opts);
  for (double h : h_list) {
    if (!(h > 0.0)) throw DomainError("scaled_limit_probe: h must be > 0");
    LimitProbePoint rec;
    rec.h = h;
    double ratio = t / h;
    rec.t_discrete = std::llround(ratio);
    rec.rounding_residue = ratio - static_cast<double>(rec.t_discrete);
    rec.xi_scaled = ct.scaled_xi(h);
    PdtpParams ph(ct.alpha, ct.nu, rec.xi_scaled);
    rec.oracle_route = ph.branch() == Branch::kOracleOnly;
    rec.discrete_value =
        state_prob(ph, n, rec.t_discrete,
                   rec.oracle_route ? Route::kOracle : Route::kClosedForm,
                   opts);
    rec.ct_value = ct_value;
    rec.gap = std::fabs(rec.discrete_value - ct_value);
    out.push_back(rec);
  }
  return out;
}

}  // namespace pdtp::counting
