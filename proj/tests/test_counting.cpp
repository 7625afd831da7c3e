#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "pdtp/counting.hpp"
#include "pdtp/powerseries.hpp"

using namespace pdtp;
using namespace pdtp::counting;

namespace {

double binom_pmf(long n, long t, double p) {
  return std::exp(std::lgamma(t + 1.0) - std::lgamma(n + 1.0) -
                  std::lgamma(t - n + 1.0)) *
         std::pow(p, n) * std::pow(1.0 - p, t - n);
}

}  // namespace

TEST_CASE("PdtpParams: domain checks and branch tags") {
  CHECK_THROWS_AS(PdtpParams(0.0, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(PdtpParams(1.1, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(PdtpParams(0.5, 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(PdtpParams(0.5, 1.0, -1.0), DomainError);

  CHECK(PdtpParams(0.5, 1.0, 0.5).branch() == Branch::kLow);
  CHECK(PdtpParams(0.5, 1.0, 2.0).branch() == Branch::kHigh);
  CHECK(PdtpParams(0.5, 1.0, 1.0).branch() == Branch::kOracleOnly);
  CHECK(PdtpParams(0.5, 1.0, 0.96).branch() == Branch::kOracleOnly);
  CHECK(PdtpParams(0.5, 1.0, 1.04).branch() == Branch::kOracleOnly);
}

TEST_CASE("interarrival_pmf: support, first step, geometric case") {
  PdtpParams p(0.5, 0.5, 0.5);
  CHECK(interarrival_pmf(p, 0) == 0.0);  // exactly

  // theta(1) = (xi/(1+xi))^nu on both branches
  for (auto [a, n, x] : {std::array<double, 3>{0.3, 1.754, 0.25},
                         {0.5, 0.5, 0.5},
                         {0.9, 1.0, 1.5},
                         {1.0, 0.5, 4.0}}) {
    PdtpParams q(a, n, x);
    CHECK(interarrival_pmf(q, 1) ==
          doctest::Approx(std::pow(x / (1.0 + x), n)).epsilon(1e-13));
  }

  // alpha = nu = 1, xi = 0.5: geometric with p = 1/3
  PdtpParams geo(1.0, 1.0, 0.5);
  CHECK(interarrival_pmf(geo, 3) ==
        doctest::Approx((1.0 / 3.0) * (2.0 / 3.0) * (2.0 / 3.0))
            .epsilon(1e-13));

  CHECK_THROWS_AS(interarrival_pmf(p, -1), UsageError);
}

TEST_CASE("oracle-only band: closed form refuses, oracle route works") {
  PdtpParams band(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(interarrival_pmf(band, 3), BranchError);
  CHECK_THROWS_AS(state_prob(band, 1, 3), BranchError);
  CHECK_THROWS_AS(state_distribution(band, 3), BranchError);
  try {
    interarrival_pmf(band, 3);
    CHECK(false);
  } catch (const BranchError& e) {
    CHECK(e.xi() == 1.0);
  }
  // xi = 1, alpha = nu = 1: theta(t) = 2^{-t}
  for (long t = 1; t <= 10; ++t)
    CHECK(interarrival_pmf(band, t, Route::kOracle) ==
          doctest::Approx(std::pow(2.0, -t)).epsilon(1e-13));
  // auto route silently picks the oracle inside the band
  CHECK(interarrival_pmf(band, 4, Route::kAuto) ==
        doctest::Approx(0.0625).epsilon(1e-13));
}

TEST_CASE("state_prob: exact support and boundary values") {
  PdtpParams p(0.57, 1.754, 0.3);
  CHECK(state_prob(p, 0, 0) == 1.0);  // exactly
  CHECK(state_prob(p, 2, 1) == 0.0);  // exactly, t < n
  CHECK(state_prob(p, 5, 4) == 0.0);

  // t = n: (xi/(1+xi))^{n nu} on both branches
  for (auto [a, n, x] : {std::array<double, 3>{0.5, 0.5, 0.5},
                         {0.9, 1.754, 2.0}}) {
    PdtpParams q(a, n, x);
    for (long nn : {1L, 2L, 5L})
      CHECK(state_prob(q, nn, nn) ==
            doctest::Approx(std::pow(x / (1.0 + x), nn * n)).epsilon(1e-12));
  }
}

TEST_CASE("state_prob: closed form vs generating-function oracle, both branches") {
  for (auto [a, n, x] : {std::array<double, 3>{0.3, 0.5, 0.25},
                         {0.3, 1.754, 0.75},
                         {1.0, 1.754, 0.5},
                         {0.5, 0.5, 1.5},
                         {1.0, 0.5, 4.0},
                         {0.9, 1.754, 2.0}}) {
    PdtpParams p(a, n, x);
    auto table = powerseries::state_table<long double>(p, 21);
    for (long nn = 0; nn <= 5; ++nn)
      for (long t = nn; t <= 20; ++t) {
        double closed = state_prob(p, nn, t);
        double oracle = static_cast<double>(table(nn, t));
        CHECK(std::fabs(closed - oracle) <= 1e-9);
      }
  }
}

TEST_CASE("state_prob: extended fallback engages where doubles cancel") {
  PdtpParams p(1.0, 1.754, 0.5);
  EvalDiag diag;
  double v = state_prob(p, 1, 64, Route::kClosedForm, {}, &diag);
  CHECK(diag.converged);
  CHECK(diag.used_extended);
  double oracle =
      static_cast<double>(powerseries::state_prob_coeffs<long double>(p, 1, 65)[64]);
  CHECK(std::fabs(v - oracle) <= 1e-11);

  // honest failure with the fallback off: throws without a diag sink,
  // reports converged = false with one
  EvalOptions off;
  off.extended_fallback = false;
  CHECK_THROWS_AS(state_prob(p, 1, 64, Route::kClosedForm, off),
                  ConvergenceError);
  EvalDiag d2;
  (void)state_prob(p, 1, 64, Route::kClosedForm, off, &d2);
  CHECK_FALSE(d2.converged);
}

TEST_CASE("state_distribution: delta at t=0, Bernoulli rows, normalization") {
  PdtpParams p(0.57, 1.754, 0.3);
  auto d0 = state_distribution(p, 0);
  CHECK(d0.probs.size() == 1);
  CHECK(d0.probs[0] == 1.0);

  // Bernoulli reduction (oracle route at xi = 1): binomial(3, 1/2)
  PdtpParams bern(1.0, 1.0, 1.0);
  auto d3 = state_distribution(bern, 3, Route::kOracle);
  const double ref[4] = {0.125, 0.375, 0.375, 0.125};
  for (int n = 0; n <= 3; ++n)
    CHECK(d3.probs[n] == doctest::Approx(ref[n]).epsilon(1e-13));

  // Fig. 1(b) parameter set: sums to 1 and entries are clamped nonnegative
  auto d10 = state_distribution(p, 10);
  CHECK(std::fabs(d10.probs.sum() - 1.0) <= 1e-10);
  for (int n = 0; n <= 10; ++n) CHECK(d10.probs[n] >= 0.0);
}

TEST_CASE("state_table matches per-call evaluations") {
  for (auto [a, n, x] :
       {std::array<double, 3>{0.5, 1.0, 0.5}, {0.9, 0.5, 2.0}}) {
    PdtpParams p(a, n, x);
    auto table = state_table(p, 24);
    for (long t : {0L, 1L, 7L, 16L, 24L}) {
      auto dist = state_distribution(p, t);
      for (long nn = 0; nn <= t; ++nn) {
        CHECK(std::fabs(table(nn, t) - dist.probs[nn]) <= 1e-12);
        CHECK(std::fabs(table(nn, t) - state_prob(p, nn, t)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("renewal and survival identities (closed forms)") {
  for (auto [a, n, x] :
       {std::array<double, 3>{0.5, 0.5, 0.5}, {0.9, 1.754, 2.0}}) {
    PdtpParams p(a, n, x);
    const long t_max = 16;
    // Phi^(n) = theta * Phi^(n-1) (discrete convolution)
    for (long nn = 1; nn <= 3; ++nn)
      for (long t = 0; t <= t_max; ++t) {
        double conv = 0.0;
        for (long k = 1; k <= t; ++k)
          conv += interarrival_pmf(p, k) * state_prob(p, nn - 1, t - k);
        CHECK(std::fabs(state_prob(p, nn, t) - conv) <= 1e-9);
      }
    // Phi^(0)(t) = 1 - sum_{k<=t} theta(k)
    double cum = 0.0;
    for (long t = 1; t <= t_max; ++t) {
      cum += interarrival_pmf(p, t);
      CHECK(std::fabs(state_prob(p, 0, t) - (1.0 - cum)) <= 1e-10);
    }
  }
}

TEST_CASE("classical reductions: binomial and geometric at alpha = nu = 1") {
  for (double xi : {0.5, 2.0}) {
    PdtpParams p(1.0, 1.0, xi);
    const double prob = xi / (1.0 + xi);
    for (long t : {1L, 5L, 20L, 60L}) {
      for (long n = 0; n <= t; ++n)
        CHECK(std::fabs(state_prob(p, n, t) - binom_pmf(n, t, prob)) <= 1e-12);
      CHECK(std::fabs(interarrival_pmf(p, t) -
                      prob * std::pow(1.0 - prob, t - 1)) <= 1e-12);
    }
  }
}

TEST_CASE("ct_state_prob: limits, Poisson reduction, frozen values") {
  CtParams ml(0.5, 0.5, 1.0);
  CHECK(ct_state_prob(ml, 0, 1e-9) == doctest::Approx(1.0).epsilon(1e-4));

  CtParams pois(1.0, 1.0, 1.0);
  for (long n : {0L, 1L, 3L, 7L})
    for (double t : {0.5, 1.0, 5.0}) {
      double ref = std::pow(t, n) * std::exp(-t) /
                   std::exp(std::lgamma(n + 1.0));
      CHECK(std::fabs(ct_state_prob(pois, n, t) - ref) <= 1e-12);
    }

  // 60-digit series references
  CHECK(ct_state_prob(ml, 0, 1.0) ==
        doctest::Approx(0.23396100923913787).epsilon(1e-12));
  CHECK(ct_state_prob(ml, 1, 1.0) ==
        doctest::Approx(0.19362256691666913).epsilon(1e-12));
  CtParams fig1b(0.57, 1.754, 1.0);
  CHECK(ct_state_prob(fig1b, 2, 4.0) ==
        doctest::Approx(0.17777898168592218).epsilon(1e-12));

  CHECK_THROWS_AS(ct_state_prob(ml, 0, 0.0), DomainError);
  CHECK_THROWS_AS(ct_state_prob(ml, -1, 1.0), UsageError);
}

TEST_CASE("ct_state_prob: higher states are less occupied at small times") {
  for (auto [a, n] : {std::array<double, 2>{0.5, 0.5}, {0.57, 1.754}}) {
    CtParams ct(a, n, 1.0);
    for (double t : {0.25, 1.0, 4.0}) {
      double prev = ct_state_prob(ct, 1, t);
      for (long nn = 2; nn <= 7; ++nn) {
        double cur = ct_state_prob(ct, nn, t);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
      }
    }
  }
}

TEST_CASE("tail_asymptote: plug-in values, n-independence, domain") {
  PdtpParams p(0.5, 1.0, 1.0);
  // 1000^{-1/2} / sqrt(pi)
  CHECK(tail_asymptote(p, TailMode::kState, 1000.0) ==
        doctest::Approx(0.017841241161527712).epsilon(1e-12));
  // the state asymptote carries no state index at all; the inter-arrival
  // form is its alpha/t-scaled derivative counterpart
  CHECK(tail_asymptote(p, TailMode::kInterarrival, 1000.0) ==
        doctest::Approx(0.5 * tail_asymptote(p, TailMode::kState, 1000.0) /
                        1000.0)
            .epsilon(1e-13));

  PdtpParams memoryless(1.0, 1.0, 0.5);
  CHECK_THROWS_AS(tail_asymptote(memoryless, TailMode::kState, 10.0),
                  DomainError);
  CHECK_THROWS_AS(tail_asymptote(p, TailMode::kState, 0.0), DomainError);
}

TEST_CASE("tail_asymptote: oracle pmf ratio approaches 1 deep in the tail") {
  // oracle route at extended precision, t = 10^4 (xi = 1 sits in the band,
  // which is exactly where the oracle is the only route)
  PdtpParams p(0.5, 1.0, 1.0);
  const long t = 10000;
  auto th = powerseries::theta_coeffs<long double>(p, t + 1);
  double ratio = static_cast<double>(th[t]) /
                 tail_asymptote(p, TailMode::kInterarrival, t);
  CHECK(ratio >= 0.85);
  CHECK(ratio <= 1.15);
}

TEST_CASE("scaled_limit_probe: shrinking gaps and per-entry band fallback") {
  const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};

  CtParams ml(0.5, 0.5, 1.0);
  auto recs = scaled_limit_probe(ml, 2, 4.0, hs);
  REQUIRE(recs.size() == 4);
  for (std::size_t i = 0; i + 1 < recs.size(); ++i)
    CHECK(recs[i].gap > recs[i + 1].gap);
  for (const auto& r : recs) {
    CHECK(std::fabs(r.rounding_residue) <= 0.5);
    CHECK_FALSE(r.oracle_route);
    CHECK(r.xi_scaled == doctest::Approx(std::pow(r.h, 0.5)).epsilon(1e-14));
  }

  // Bernoulli -> Poisson: gap shrinks linearly in h
  CtParams pois(1.0, 1.0, 1.0);
  auto lin = scaled_limit_probe(pois, 1, 2.0, hs);
  for (std::size_t i = 0; i + 1 < lin.size(); ++i) {
    double ratio = lin[i + 1].gap / lin[i].gap;
    CHECK(ratio > 0.35);
    CHECK(ratio < 0.65);
  }

  // n = 0, t -> 0: both sides approach 1
  auto tiny = scaled_limit_probe(ml, 0, 1e-3, std::vector<double>{1e-3});
  CHECK(tiny[0].discrete_value == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(tiny[0].ct_value == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(tiny[0].gap <= 1e-2);

  // h = 1 drives xi(h) = xi0 into the band: per-entry oracle fallback noted
  std::vector<double> crossing{1.0, 0.5};
  auto x = scaled_limit_probe(ml, 1, 4.0, crossing);
  CHECK(x[0].oracle_route);
  CHECK_FALSE(x[1].oracle_route);

  CHECK_THROWS_AS(scaled_limit_probe(ml, 0, -1.0, hs), DomainError);
  CHECK_THROWS_AS(scaled_limit_probe(ml, 0, 1.0, std::vector<double>{0.0}),
                  DomainError);
}

TEST_CASE("clamping: no negative probabilities escape on a parameter sweep") {
  for (auto [a, n, x] : {std::array<double, 3>{0.3, 0.5, 0.25},
                         {1.0, 1.754, 0.5},
                         {0.9, 1.0, 4.0}}) {
    PdtpParams p(a, n, x);
    auto table = state_table(p, 40);
    for (long nn = 0; nn <= 40; ++nn)
      for (long t = 0; t <= 40; ++t) CHECK(table(nn, t) >= 0.0);
  }
}
