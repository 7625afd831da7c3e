#include "pdtp/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "pdtp/counting.hpp"
#include "pdtp/powerseries.hpp"

namespace pdtp::montecarlo {

namespace {

constexpr double kWilsonZ99 = 2.5758293035489008;  // 99.5th normal quantile

std::uint64_t splitmix_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
  // Decorrelate streams by running the index through the mixer once.
  std::uint64_t s = master_seed;
  std::uint64_t idx = stream_index + 0x9E3779B97F4A7C15ull;
  state_ = splitmix_next(idx) ^ s;
  (void)splitmix_next(state_);
}

std::uint64_t RngStream::next_u64() { return splitmix_next(state_); }

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

namespace {

// Exact theta(1..length) from the coefficient oracle in extended precision.
std::vector<long double> theta_table(const PdtpParams& p, long length) {
  auto th = powerseries::theta_coeffs<long double>(p, length + 1);
  std::vector<long double> out(length);
  for (long t = 1; t <= length; ++t) out[t - 1] = th[t];
  return out;
}

}  // namespace

SamplerTable build_sampler(const PdtpParams& p, double eps_tail,
                           const SamplerConfig& cfg) {
  if (!(eps_tail > 0.0 && eps_tail <= 1e-3))
    throw DomainError("build_sampler: eps_tail must lie in (0, 1e-3]");

  const bool heavy_tail = p.alpha < 1.0;
  const double mass_target = heavy_tail ? cfg.max_tail_mass : eps_tail;

  // Predict the needed horizon, then grow geometrically until the raw
  // survival 1 - sum theta (= state_prob(0, t_max) by the renewal identity)
  // meets the target.
  long t_max = std::max<long>(cfg.t_max_init, 8);
  if (heavy_tail) {
    double g = std::tgamma(1.0 - p.alpha);
    double pred =
        std::pow((p.nu / p.xi) / (g * mass_target), 1.0 / p.alpha);
    if (pred > static_cast<double>(t_max) && pred < 1e18)
      t_max = static_cast<long>(pred) + 1;
    t_max = std::min(t_max, cfg.t_max_cap);
  }

  std::vector<long double> th;
  long double survival = 1.0L;
  for (;;) {
    th = theta_table(p, t_max + 8);
    survival = 1.0L;
    for (long t = 1; t <= t_max; ++t) survival -= th[t - 1];
    if (static_cast<double>(survival) <= mass_target) break;
    if (t_max >= cfg.t_max_cap)
      throw ConvergenceError(
          "build_sampler: survival " + std::to_string((double)survival) +
              " at the t_max cap " + std::to_string(cfg.t_max_cap) +
              " still exceeds the mass target " + std::to_string(mass_target) +
              "; enlarge t_max_cap or relax the target",
          static_cast<double>(survival));
    t_max = std::min(cfg.t_max_cap, t_max * 2);
  }

  SamplerTable s{p, {}, t_max, static_cast<double>(survival), heavy_tail, 0.0};
  s.cdf.resize(t_max);
  long double acc = 0.0L;
  const long double norm =
      heavy_tail ? 1.0L : (1.0L - survival);  // alpha = 1: renormalize
  for (long t = 1; t <= t_max; ++t) {
    acc += th[t - 1];
    s.cdf[t - 1] =
        std::min(1.0, static_cast<double>(acc / norm));
    if (t > 1) s.cdf[t - 1] = std::max(s.cdf[t - 1], s.cdf[t - 2]);
  }
  if (!heavy_tail) s.cdf[t_max - 1] = 1.0;

  if (heavy_tail) {
    // Attached tail law: Z = floor(L u^{-1/alpha}), L = t_max + 1, carrying
    // exactly the survival mass. Report how well its pmf matches the oracle
    // just past the table edge (estimated TV of the attachment).
    const double L = static_cast<double>(t_max) + 1.0;
    double worst = 0.0;
    for (long t = t_max + 1; t <= t_max + 8; ++t) {
      double q = s.truncation_mass *
                 (std::pow(L / static_cast<double>(t), p.alpha) -
                  std::pow(L / static_cast<double>(t + 1), p.alpha));
      double rel = std::fabs(static_cast<double>(th[t - 1]) / q - 1.0);
      worst = std::max(worst, rel);
    }
    s.tail_match_error = s.truncation_mass * worst;
  }
  return s;
}

long sample_interarrival(const SamplerTable& s, RngStream& rng) {
  const double u = rng.next_unit();
  const double top = s.cdf.back();
  if (u < top) {
    auto it = std::upper_bound(s.cdf.begin(), s.cdf.end(), u);
    return static_cast<long>(it - s.cdf.begin()) + 1;
  }
  if (!s.tail_attached) return s.t_max;  // renormalized table covers [0,1)
  // Truncation band: invert the attached Pareto tail.
  double w = (1.0 - u) / s.truncation_mass;  // uniform in (0, 1]
  w = std::min(1.0, std::max(w, 1e-300));
  double y = (static_cast<double>(s.t_max) + 1.0) *
             std::pow(w, -1.0 / s.params.alpha);
  double capped = std::min(y, 9.0e18);
  return static_cast<long>(capped);
}

std::vector<long> simulate_counting(const SamplerTable& s, long horizon,
                                    RngStream& rng) {
  if (horizon < 0) throw UsageError("simulate_counting: horizon must be >= 0");
  std::vector<long> path(horizon + 1);
  long arrivals = 0;
  long clock = 0;
  long filled = 0;  // path[0..filled-1] written
  for (;;) {
    long z = sample_interarrival(s, rng);
    long next = (z > horizon - clock) ? horizon + 1 : clock + z;
    for (long t = filled; t < std::min(next, horizon + 1); ++t)
      path[t] = arrivals;
    filled = std::min(next, horizon + 1);
    if (next > horizon) break;
    clock = next;
    ++arrivals;
  }
  return path;
}

WalkPath simulate_walk(const graphwalk::Graph& g, const SamplerTable& s,
                       long horizon, int start, RngStream& rng) {
  if (start < 0 || start >= g.size())
    throw UsageError("simulate_walk: start node out of range");
  if (horizon < 0) throw UsageError("simulate_walk: horizon must be >= 0");

  WalkPath path;
  path.horizon = horizon;
  path.node_sequence.push_back(start);
  long clock = 0;
  int node = start;
  const auto& adj = g.adjacency();
  for (;;) {
    long z = sample_interarrival(s, rng);
    if (z > horizon - clock) break;
    clock += z;
    // one uniform-neighbor step
    int deg = g.degrees()[node];
    int pick = std::min<int>(deg - 1,
                             static_cast<int>(rng.next_unit() * deg));
    int next_node = -1;
    for (int v = 0, c = 0; v < g.size(); ++v) {
      if (adj(node, v) != 0.0 && c++ == pick) {
        next_node = v;
        break;
      }
    }
    node = next_node;
    path.arrival_times.push_back(clock);
    path.node_sequence.push_back(node);
  }
  return path;
}

void wilson_interval(double p_hat, long n, double z, double* center,
                     double* halfwidth) {
  const double z2 = z * z;
  const double denom = 1.0 + z2 / static_cast<double>(n);
  *center = (p_hat + z2 / (2.0 * n)) / denom;
  *halfwidth =
      z * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom;
}

namespace {

Histogram histogram_from_counts(const std::vector<long long>& counts,
                                long samples) {
  Histogram h;
  const long cells = static_cast<long>(counts.size());
  h.freq.resize(cells);
  h.wilson_center.resize(cells);
  h.wilson_halfwidth.resize(cells);
  h.samples = samples;
  for (long i = 0; i < cells; ++i) {
    double p = static_cast<double>(counts[i]) / static_cast<double>(samples);
    h.freq[i] = p;
    wilson_interval(p, samples, kWilsonZ99, &h.wilson_center[i],
                    &h.wilson_halfwidth[i]);
  }
  return h;
}

// Deterministic parallel map-reduce over walkers: per-walker integer counts
// are summed, so the result is independent of the thread partition.
template <typename PerWalker>
std::vector<std::vector<long long>> reduce_counts(long walkers, int threads,
                                                  long n_slots, long n_cells,
                                                  PerWalker&& per_walker) {
  int n_threads = threads > 0
                      ? threads
                      : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<int>(
      std::min<long>(n_threads, std::max<long>(1, walkers)));

  std::vector<std::vector<std::vector<long long>>> partial(
      n_threads, std::vector<std::vector<long long>>(
                     n_slots, std::vector<long long>(n_cells, 0)));
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int tid = 0; tid < n_threads; ++tid) {
    pool.emplace_back([&, tid] {
      for (long w = tid; w < walkers; w += n_threads)
        per_walker(w, partial[tid]);
    });
  }
  for (auto& th : pool) th.join();

  std::vector<std::vector<long long>> total(
      n_slots, std::vector<long long>(n_cells, 0));
  for (int tid = 0; tid < n_threads; ++tid)
    for (long s = 0; s < n_slots; ++s)
      for (long c = 0; c < n_cells; ++c) total[s][c] += partial[tid][s][c];
  return total;
}

}  // namespace

Histogram empirical_state_probs(const std::vector<std::vector<long>>& paths,
                                long t) {
  if (paths.empty()) throw UsageError("empirical_state_probs: empty ensemble");
  std::vector<long long> counts(t + 1, 0);
  for (const auto& path : paths) {
    if (static_cast<long>(path.size()) <= t)
      throw UsageError("empirical_state_probs: path shorter than t");
    long n = path[t];
    if (n < 0 || n > t)
      throw IntegrityError("empirical_state_probs: state outside [0, t]",
                           static_cast<double>(n));
    ++counts[n];
  }
  return histogram_from_counts(counts, static_cast<long>(paths.size()));
}

std::vector<Histogram> counting_ensemble(const SamplerTable& s,
                                         std::span<const long> times,
                                         const EnsembleConfig& cfg) {
  if (times.empty()) throw UsageError("counting_ensemble: no times given");
  if (cfg.walkers < 1) throw UsageError("counting_ensemble: walkers must be >= 1");
  const long horizon = *std::max_element(times.begin(), times.end());
  const long n_slots = static_cast<long>(times.size());

  auto per_walker = [&](long w, std::vector<std::vector<long long>>& acc) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(w));
    long clock = 0, arrivals = 0;
    // N(t) sampled lazily: arrivals strictly after `clock` have not happened
    std::vector<long> state_at(n_slots);
    long next_arrival;
    {
      long z = sample_interarrival(s, rng);
      next_arrival = (z > horizon) ? horizon + 1 : z;
    }
    for (long i = 0; i < n_slots; ++i) state_at[i] = -1;
    // advance the renewal process once, recording states at query times
    std::vector<std::pair<long, long>> sorted_idx(n_slots);
    for (long i = 0; i < n_slots; ++i) sorted_idx[i] = {times[i], i};
    std::sort(sorted_idx.begin(), sorted_idx.end());
    for (auto [t_query, idx] : sorted_idx) {
      while (next_arrival <= t_query) {
        clock = next_arrival;
        ++arrivals;
        long z = sample_interarrival(s, rng);
        next_arrival = (z > horizon - clock) ? horizon + 1 : clock + z;
      }
      state_at[idx] = arrivals;
    }
    for (long i = 0; i < n_slots; ++i) ++acc[i][state_at[i]];
  };

  auto counts = reduce_counts(cfg.walkers, cfg.threads, n_slots, horizon + 1,
                              per_walker);
  std::vector<Histogram> out;
  out.reserve(n_slots);
  for (long i = 0; i < n_slots; ++i) {
    std::vector<long long> cell(counts[i].begin(),
                                counts[i].begin() + times[i] + 1);
    out.push_back(histogram_from_counts(cell, cfg.walkers));
  }
  return out;
}

std::vector<Histogram> walk_ensemble(const graphwalk::Graph& g,
                                     const SamplerTable& s,
                                     std::span<const long> times, int start,
                                     const EnsembleConfig& cfg) {
  if (times.empty()) throw UsageError("walk_ensemble: no times given");
  if (start < 0 || start >= g.size())
    throw UsageError("walk_ensemble: start node out of range");
  const long horizon = *std::max_element(times.begin(), times.end());
  const long n_slots = static_cast<long>(times.size());
  const int n_nodes = g.size();

  // flat neighbor lists for the inner loop
  std::vector<std::vector<int>> nbr(n_nodes);
  for (int i = 0; i < n_nodes; ++i)
    for (int j = 0; j < n_nodes; ++j)
      if (g.adjacency()(i, j) != 0.0) nbr[i].push_back(j);

  auto per_walker = [&](long w, std::vector<std::vector<long long>>& acc) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(w));
    std::vector<std::pair<long, long>> sorted_idx(n_slots);
    for (long i = 0; i < n_slots; ++i) sorted_idx[i] = {times[i], i};
    std::sort(sorted_idx.begin(), sorted_idx.end());

    long clock = 0;
    int node = start;
    long next_arrival;
    {
      long z = sample_interarrival(s, rng);
      next_arrival = (z > horizon) ? horizon + 1 : z;
    }
    for (auto [t_query, idx] : sorted_idx) {
      while (next_arrival <= t_query) {
        clock = next_arrival;
        const auto& nb = nbr[node];
        int pick = std::min<int>(static_cast<int>(nb.size()) - 1,
                                 static_cast<int>(rng.next_unit() * nb.size()));
        node = nb[pick];
        long z = sample_interarrival(s, rng);
        next_arrival = (z > horizon - clock) ? horizon + 1 : clock + z;
      }
      ++acc[idx][node];
    }
  };

  auto counts =
      reduce_counts(cfg.walkers, cfg.threads, n_slots, n_nodes, per_walker);
  std::vector<Histogram> out;
  out.reserve(n_slots);
  for (long i = 0; i < n_slots; ++i)
    out.push_back(histogram_from_counts(counts[i], cfg.walkers));
  return out;
}

}  // namespace pdtp::montecarlo
