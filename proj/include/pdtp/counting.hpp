#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pdtp/params.hpp"

namespace pdtp::counting {

/// How a state/pmf value is computed. kClosedForm evaluates the two-branch
/// series (and throws BranchError inside the oracle-only band around xi = 1);
/// kOracle extracts exact generating-function coefficients; kAuto picks the
/// oracle inside the band and for deep times, the closed form otherwise.
enum class Route { kAuto, kClosedForm, kOracle };

/// Diagnostics from a closed-form evaluation.
struct EvalDiag {
  bool converged = true;
  bool used_extended = false;
  long terms = 0;
  double est_abs_error = 0.0;
  double cancel_ratio = 1.0;
};

/// Probability vector over the number of arrivals n = 0..t at time t.
struct StateDistribution {
  long t = 0;
  Eigen::VectorXd probs;
};

/// Inter-arrival pmf theta(t) = phi(t-1); theta(0) = 0 exactly.
double interarrival_pmf(const PdtpParams& p, long t,
                        Route route = Route::kClosedForm,
                        const EvalOptions& opts = {}, EvalDiag* diag = nullptr);

/// State probability Phi^{(n)}(t): exactly 0 for t < n, exactly 1 at
/// (n, t) = (0, 0).
double state_prob(const PdtpParams& p, long n, long t,
                  Route route = Route::kClosedForm,
                  const EvalOptions& opts = {}, EvalDiag* diag = nullptr);

/// All state probabilities at time t. Verifies normalization to 1e-8
/// (IntegrityError carrying the residual otherwise) and clamps roundoff
/// negatives in [-1e-12, 0) to zero.
StateDistribution state_distribution(const PdtpParams& p, long t,
                                     Route route = Route::kClosedForm,
                                     const EvalOptions& opts = {});

/// Lower-triangular table of Phi^{(n)}(t) for n, t <= t_max (row n, col t).
/// Batched evaluator: closed-form columns share one series sweep per state,
/// which is much cheaper than (n x t) independent calls on dense grids.
Eigen::MatrixXd state_table(const PdtpParams& p, long t_max,
                            Route route = Route::kAuto,
                            const EvalOptions& opts = {});

/// Continuous-limit state probability (two Prabhakar function evaluations):
///   (xi0 t^alpha)^{n nu} { E_{a, a n nu + 1}^{n nu}(-xi0 t^a)
///       - (xi0 t^a)^{nu} E_{a, a(n+1)nu + 1}^{(n+1)nu}(-xi0 t^a) }.
double ct_state_prob(const CtParams& ct, long n, double t,
                     const EvalOptions& opts = {}, EvalDiag* diag = nullptr);

enum class TailMode { kState, kInterarrival };

/// Long-time power-law asymptote, alpha in (0,1) strictly:
///   state mode (independent of n):  (nu/xi)   t^{-alpha}   / Gamma(1-alpha)
///   inter-arrival mode:             (a nu/xi) t^{-alpha-1} / Gamma(1-alpha)
/// Both are evaluated in the discrete parameterization; the source states
/// the inter-arrival form with the continuous-limit scale parameter, which
/// is the same expression after the well-scaled substitution.
double tail_asymptote(const PdtpParams& p, TailMode mode, double t);

/// One record of a well-scaled continuous-limit probe.
struct LimitProbePoint {
  double h = 0.0;
  long t_discrete = 0;
  double rounding_residue = 0.0;  ///< t/h - round(t/h)
  double xi_scaled = 0.0;         ///< xi0 h^alpha
  bool oracle_route = false;      ///< scaled xi fell in the oracle-only band
  double discrete_value = 0.0;
  double ct_value = 0.0;
  double gap = 0.0;
};

/// Evaluates Phi^{(n)}(round(t/h), xi0 h^alpha) against the continuous-time
/// value for each step length in h_list; gaps shrink as h does.
std::vector<LimitProbePoint> scaled_limit_probe(const CtParams& ct, long n,
                                                double t,
                                                std::span<const double> h_list,
                                                const EvalOptions& opts = {});

}  // namespace pdtp::counting
