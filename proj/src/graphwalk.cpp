#include "pdtp/graphwalk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pdtp::graphwalk {

namespace {

void format_17g(std::ostream& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  out.write(buf, res.ptr - buf);
}

}  // namespace

Graph::Graph(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency)) {
  const int n = static_cast<int>(adjacency_.rows());
  degrees_.resize(n);
  for (int i = 0; i < n; ++i)
    degrees_[i] = static_cast<int>(std::lround(adjacency_.row(i).sum()));

  // connectivity check (BFS over the adjacency structure)
  std::vector<char> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  std::size_t head = 0;
  while (head < queue.size()) {
    int u = queue[head++];
    for (int v = 0; v < n; ++v)
      if (adjacency_(u, v) != 0.0 && !seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
  }
  if (queue.size() != static_cast<std::size_t>(n))
    throw DomainError("Graph: graph is disconnected (" +
                      std::to_string(queue.size()) + " of " +
                      std::to_string(n) + " nodes reachable from node 0)");
}

Graph Graph::from_edge_list(std::span<const std::pair<int, int>> edges,
                            int n_nodes) {
  if (n_nodes < 2) throw DomainError("Graph: need at least 2 nodes");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_nodes || j >= n_nodes)
      throw UsageError("Graph: edge (" + std::to_string(i) + ", " +
                       std::to_string(j) + ") out of range for N = " +
                       std::to_string(n_nodes));
    if (i == j)
      throw UsageError("Graph: self-loop at node " + std::to_string(i));
    a(i, j) = 1.0;  // duplicates collapse
    a(j, i) = 1.0;
  }
  return Graph(std::move(a));
}

Graph Graph::parse_edge_list(std::istream& in) {
  auto strip = [](std::string s) {
    if (auto pos = s.find('#'); pos != std::string::npos) s.resize(pos);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
      s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    return s.substr(b);
  };

  std::string line;
  int n_nodes = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (n_nodes < 0) {
      std::string tag;
      if (!(ls >> tag >> n_nodes) || tag != "N")
        throw UsageError("edge list: first line must be 'N <integer>'");
      continue;
    }
    int i, j;
    if (!(ls >> i >> j))
      throw UsageError("edge list: expected 'i j' pair, got '" + line + "'");
    edges.emplace_back(i, j);
  }
  if (n_nodes < 0) throw UsageError("edge list: missing 'N <integer>' header");
  return from_edge_list(edges, n_nodes);
}

Graph Graph::load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open edge list file: " + path.string());
  return parse_edge_list(in);
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  const int n = size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adjacency_(i, j) != 0.0) out.emplace_back(i, j);
  return out;
}

StochasticMatrix StochasticMatrix::checked(Eigen::MatrixXd matrix,
                                           double row_tol, double neg_tol) {
  const auto n = matrix.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = matrix.row(i).sum();
    if (std::fabs(row_sum - 1.0) > row_tol)
      throw IntegrityError("StochasticMatrix: row " + std::to_string(i) +
                               " sums to " + std::to_string(row_sum),
                           row_sum - 1.0);
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (matrix(i, j) < 0.0) {
        if (matrix(i, j) < -neg_tol)
          throw IntegrityError(
              "StochasticMatrix: negative entry beyond roundoff",
              matrix(i, j));
        matrix(i, j) = 0.0;
      }
    }
  }
  return StochasticMatrix{std::move(matrix)};
}

StochasticMatrix one_step_matrix(const Graph& g) {
  const int n = g.size();
  Eigen::MatrixXd h(n, n);
  for (int i = 0; i < n; ++i)
    h.row(i) = g.adjacency().row(i) / static_cast<double>(g.degrees()[i]);
  return StochasticMatrix::checked(std::move(h));
}

namespace {

// P(t) = sum_n w_n H^n with compensated entrywise accumulation.
Eigen::MatrixXd weighted_power_sum(const Eigen::MatrixXd& h,
                                   const Eigen::VectorXd& weights) {
  const auto n = h.rows();
  const long t = weights.size() - 1;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (long k = 0;; ++k) {
    Eigen::MatrixXd term = weights[k] * power;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        double x = term(i, j), s = sum(i, j);
        double y = s + x;
        comp(i, j) += (std::fabs(s) >= std::fabs(x)) ? (s - y) + x : (x - y) + s;
        sum(i, j) = y;
      }
    if (k == t) break;
    power = (power * h).eval();
  }
  return sum + comp;
}

}  // namespace

StochasticMatrix dtrw_matrix(const Graph& g, const PdtpParams& p, long t,
                             counting::Route route, const EvalOptions& opts) {
  if (t < 0) throw UsageError("dtrw_matrix: t must be >= 0");
  if (t == 0)
    return StochasticMatrix{
        Eigen::MatrixXd::Identity(g.size(), g.size())};  // P(0) = I exactly

  counting::StateDistribution w =
      counting::state_distribution(p, t, route, opts);
  Eigen::MatrixXd h = one_step_matrix(g).m;
  return StochasticMatrix::checked(weighted_power_sum(h, w.probs), 1e-10,
                                   1e-12);
}

std::vector<StochasticMatrix> dtrw_matrices(const Graph& g,
                                            const PdtpParams& p, long t_max,
                                            counting::Route route,
                                            const EvalOptions& opts) {
  if (t_max < 0) throw UsageError("dtrw_matrices: t_max must be >= 0");
  Eigen::MatrixXd table = counting::state_table(p, t_max, route, opts);
  Eigen::MatrixXd h = one_step_matrix(g).m;

  std::vector<StochasticMatrix> out;
  out.reserve(t_max + 1);
  out.push_back(
      StochasticMatrix{Eigen::MatrixXd::Identity(g.size(), g.size())});
  for (long t = 1; t <= t_max; ++t) {
    Eigen::VectorXd w = table.col(t).head(t + 1);
    out.push_back(
        StochasticMatrix::checked(weighted_power_sum(h, w), 1e-10, 1e-12));
  }
  return out;
}

Eigen::VectorXd occupation_row(const Graph& g, const PdtpParams& p, long t,
                               int start, counting::Route route,
                               const EvalOptions& opts) {
  if (start < 0 || start >= g.size())
    throw UsageError("occupation_row: start node " + std::to_string(start) +
                     " out of range");
  return dtrw_matrix(g, p, t, route, opts).m.row(start);
}

Eigen::VectorXd stationary_distribution(const Graph& g) {
  Eigen::VectorXd pi = g.degrees().cast<double>();
  return pi / pi.sum();
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out.put(',');
      format_17g(out, m(i, j));
    }
    out.put('\n');
  }
}

}  // namespace pdtp::graphwalk
