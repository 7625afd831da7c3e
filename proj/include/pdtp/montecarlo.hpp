#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "pdtp/graphwalk.hpp"
#include "pdtp/params.hpp"

namespace pdtp::montecarlo {

/// Counter-derived random stream: the state is a pure function of
/// (master seed, stream index), so ensembles are reproducible under any
/// parallel schedule. SplitMix64 underneath.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);
  std::uint64_t next_u64();
  /// Uniform double in [0, 1).
  double next_unit();

 private:
  std::uint64_t state_;
};

/// Tabulated inter-arrival CDF with explicit truncation bookkeeping.
/// cdf[i] = P(Z <= i+1) for i = 0..t_max-1.
///
/// alpha = 1: the table is renormalized to total mass 1 and truncation_mass
/// (the discarded survival) is required to be <= eps_tail.
/// alpha < 1: the table keeps the exact probabilities and the full survival
/// mass past t_max is routed to an attached discrete Pareto tail with pmf
/// exponent 1+alpha; tail_match_error reports the estimated total-variation
/// gap of that attachment (measured against the oracle, not assumed).
struct SamplerTable {
  PdtpParams params;
  std::vector<double> cdf;
  long t_max = 0;
  double truncation_mass = 0.0;  ///< 1 - cdf[t_max] before any renormalization
  bool tail_attached = false;
  double tail_match_error = 0.0;
};

struct SamplerConfig {
  long t_max_init = 64;
  long t_max_cap = 1 << 14;
  /// alpha < 1 only: grow the table until the raw survival past t_max is
  /// below this, so the attached tail carries a small share of the mass.
  double max_tail_mass = 0.02;
};

/// Builds the inversion table. eps_tail must lie in (0, 1e-3]. Fails with
/// ConvergenceError (carrying the achieved mass) when the hard cap cannot
/// satisfy the mode's mass requirement.
SamplerTable build_sampler(const PdtpParams& p, double eps_tail = 1e-6,
                           const SamplerConfig& cfg = {});

/// Inverse-CDF draw (binary search); draws landing in the truncation band
/// go to the attached tail sampler.
long sample_interarrival(const SamplerTable& s, RngStream& rng);

/// Counting path N(0..horizon): N(0) = 0, increments in {0, 1}.
std::vector<long> simulate_counting(const SamplerTable& s, long horizon,
                                    RngStream& rng);

/// One subordinated walk: the walker rests between arrivals and takes one
/// uniform-neighbor step at each arrival. node_sequence[0] is the start
/// node and node_sequence[i] the node occupied after arrival_times[i-1].
struct WalkPath {
  std::vector<long> arrival_times;
  std::vector<int> node_sequence;
  long horizon = 0;
};

WalkPath simulate_walk(const graphwalk::Graph& g, const SamplerTable& s,
                       long horizon, int start, RngStream& rng);

/// Empirical frequencies with Wilson 99% interval geometry per cell.
struct Histogram {
  Eigen::VectorXd freq;
  Eigen::VectorXd wilson_center;
  Eigen::VectorXd wilson_halfwidth;
  long samples = 0;
};

/// Wilson score interval for a binomial proportion.
void wilson_interval(double p_hat, long n, double z, double* center,
                     double* halfwidth);

/// Histogram of N(t) over an ensemble of counting paths.
Histogram empirical_state_probs(const std::vector<std::vector<long>>& paths,
                                long t);

struct EnsembleConfig {
  std::uint64_t seed = 1;
  long walkers = 100000;
  int threads = 0;  ///< <= 0 means hardware concurrency
};

/// State histograms at the requested times over a seeded walker ensemble.
/// Bitwise deterministic for a fixed seed and walker count regardless of
/// the thread setting (per-walker streams, integer count reduction).
std::vector<Histogram> counting_ensemble(const SamplerTable& s,
                                         std::span<const long> times,
                                         const EnsembleConfig& cfg);

/// Node-occupation histograms at the requested times for subordinated
/// walks started on `start`.
std::vector<Histogram> walk_ensemble(const graphwalk::Graph& g,
                                     const SamplerTable& s,
                                     std::span<const long> times, int start,
                                     const EnsembleConfig& cfg);

}  // namespace pdtp::montecarlo
