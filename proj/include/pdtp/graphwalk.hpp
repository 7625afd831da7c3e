#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "pdtp/counting.hpp"
#include "pdtp/params.hpp"

namespace pdtp::graphwalk {

/// Undirected, connected, simple graph on nodes 0..N-1 (N >= 2).
/// Construction validates symmetry, zero diagonal and connectivity;
/// instances are immutable afterwards.
class Graph {
 public:
  static Graph from_edge_list(std::span<const std::pair<int, int>> edges,
                              int n_nodes);
  /// Text format: first line "N <integer>", then one "i j" pair per line;
  /// '#' starts a comment, blank lines are skipped.
  static Graph parse_edge_list(std::istream& in);
  static Graph load_edge_list(const std::filesystem::path& path);

  int size() const { return static_cast<int>(adjacency_.rows()); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  const Eigen::VectorXi& degrees() const { return degrees_; }
  std::vector<std::pair<int, int>> edges() const;

 private:
  explicit Graph(Eigen::MatrixXd adjacency);
  Eigen::MatrixXd adjacency_;
  Eigen::VectorXi degrees_;
};

/// Row-stochastic matrix with validated invariants (row sums within
/// tolerance of 1; entries nonnegative after a tiny roundoff clamp).
struct StochasticMatrix {
  Eigen::MatrixXd m;

  static StochasticMatrix checked(Eigen::MatrixXd matrix,
                                  double row_tol = 1e-12,
                                  double neg_tol = 1e-12);
};

/// One-step walk matrix H with H_ij = A_ij / K_i.
StochasticMatrix one_step_matrix(const Graph& g);

/// Exact walk transition matrix at time t: the degree-t matrix polynomial
/// P(t) = sum_{n=0}^{t} Phi^{(n)}(t) H^n, with P(0) = I.
StochasticMatrix dtrw_matrix(const Graph& g, const PdtpParams& p, long t,
                             counting::Route route = counting::Route::kAuto,
                             const EvalOptions& opts = {});

/// P(0..t_max) in one pass; the state weights are computed once as a table
/// and the powers of H are accumulated incrementally.
std::vector<StochasticMatrix> dtrw_matrices(
    const Graph& g, const PdtpParams& p, long t_max,
    counting::Route route = counting::Route::kAuto,
    const EvalOptions& opts = {});

/// Occupation probabilities at time t for a walk started on `start`
/// (row `start` of dtrw_matrix).
Eigen::VectorXd occupation_row(const Graph& g, const PdtpParams& p, long t,
                               int start,
                               counting::Route route = counting::Route::kAuto,
                               const EvalOptions& opts = {});

/// Degree-proportional stationary vector of H: pi_i = K_i / sum_j K_j.
Eigen::VectorXd stationary_distribution(const Graph& g);

/// Row-major CSV, 17 significant digits per entry.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

}  // namespace pdtp::graphwalk
