#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "pdtp/graphwalk.hpp"
#include "pdtp/montecarlo.hpp"

using namespace pdtp;
using namespace pdtp::graphwalk;

namespace {

Graph k2() {
  std::vector<std::pair<int, int>> e{{0, 1}};
  return Graph::from_edge_list(e, 2);
}

Graph triangle() {
  std::vector<std::pair<int, int>> e{{0, 1}, {1, 2}, {0, 2}};
  return Graph::from_edge_list(e, 3);
}

Graph star3() {  // center 0, leaves 1..3
  std::vector<std::pair<int, int>> e{{0, 1}, {0, 2}, {0, 3}};
  return Graph::from_edge_list(e, 4);
}

Graph cycle5() {
  std::vector<std::pair<int, int>> e{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}};
  return Graph::from_edge_list(e, 5);
}

// Seeded Erdos-Renyi-style G(10, 0.4), resampled until connected.
Graph random_connected_10() {
  for (std::uint64_t attempt = 0;; ++attempt) {
    montecarlo::RngStream rng(424242, attempt);
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j)
        if (rng.next_unit() < 0.4) e.emplace_back(i, j);
    try {
      return Graph::from_edge_list(e, 10);
    } catch (const DomainError&) {
      continue;  // disconnected draw
    }
  }
}

}  // namespace

TEST_CASE("from_edge_list: shapes, degrees, rejection paths") {
  auto g = k2();
  CHECK(g.size() == 2);
  CHECK(g.degrees()[0] == 1);
  CHECK(g.degrees()[1] == 1);

  auto tri = triangle();
  for (int i = 0; i < 3; ++i) CHECK(tri.degrees()[i] == 2);

  // duplicates collapse
  std::vector<std::pair<int, int>> dup{{0, 1}, {1, 0}, {0, 1}, {1, 2}, {0, 2}};
  auto g2 = Graph::from_edge_list(dup, 3);
  CHECK(g2.degrees()[0] == 2);
  CHECK(g2.adjacency()(0, 1) == 1.0);

  std::vector<std::pair<int, int>> disc{{0, 1}};
  CHECK_THROWS_AS(Graph::from_edge_list(disc, 3), DomainError);
  std::vector<std::pair<int, int>> loop{{0, 0}, {0, 1}};
  CHECK_THROWS_AS(Graph::from_edge_list(loop, 2), UsageError);
  std::vector<std::pair<int, int>> oob{{0, 5}};
  CHECK_THROWS_AS(Graph::from_edge_list(oob, 2), UsageError);
  std::vector<std::pair<int, int>> none;
  CHECK_THROWS_AS(Graph::from_edge_list(none, 1), DomainError);
}

TEST_CASE("edge-list text format: comments, blanks, errors") {
  std::istringstream in(
      "# toy graph\n"
      "N 3\n"
      "\n"
      "0 1  # first edge\n"
      "1 2\n"
      "0 2\n");
  auto g = Graph::parse_edge_list(in);
  CHECK(g.size() == 3);
  CHECK(g.degrees()[1] == 2);

  std::istringstream bad("0 1\n");
  CHECK_THROWS_AS(Graph::parse_edge_list(bad), UsageError);
  std::istringstream junk("N 3\n0 x\n");
  CHECK_THROWS_AS(Graph::parse_edge_list(junk), UsageError);

  CHECK_THROWS_AS(Graph::load_edge_list("/nonexistent/file.txt"), UsageError);

  auto edges = g.edges();
  CHECK(edges.size() == 3);
}

TEST_CASE("one_step_matrix: normalized rows and detailed balance") {
  auto hk2 = one_step_matrix(k2()).m;
  CHECK(hk2(0, 0) == 0.0);
  CHECK(hk2(0, 1) == 1.0);
  CHECK(hk2(1, 0) == 1.0);

  auto htri = one_step_matrix(triangle()).m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(htri(i, j) == (i == j ? 0.0 : 0.5));

  auto g = star3();
  auto h = one_step_matrix(g).m;
  CHECK(h(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(h(0, 0) == 0.0);
  for (int i = 1; i <= 3; ++i) {
    CHECK(h(i, 0) == 1.0);
    CHECK(h(i, i) == 0.0);
  }

  // K_i H_ij = K_j H_ji
  for (const Graph& gg : {star3(), cycle5(), random_connected_10()}) {
    auto hh = one_step_matrix(gg).m;
    for (int i = 0; i < gg.size(); ++i)
      for (int j = 0; j < gg.size(); ++j)
        CHECK(std::fabs(gg.degrees()[i] * hh(i, j) -
                        gg.degrees()[j] * hh(j, i)) <= 1e-15);
  }
}

TEST_CASE("dtrw_matrix: identity at t = 0 and binomial weights on the triangle") {
  PdtpParams p(0.5, 1.0, 0.5);
  auto p0 = dtrw_matrix(triangle(), p, 0);
  CHECK(p0.m == Eigen::MatrixXd::Identity(3, 3));

  // alpha = nu = 1, xi = 1 (oracle route), t = 2: sum_n C(2,n) 2^{-2} H^n
  PdtpParams bern(1.0, 1.0, 1.0);
  auto h = one_step_matrix(triangle()).m;
  Eigen::MatrixXd direct = 0.25 * Eigen::MatrixXd::Identity(3, 3) +
                           0.5 * h + 0.25 * (h * h);
  auto p2 = dtrw_matrix(triangle(), bern, 2, counting::Route::kOracle);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(p2.m(i, j) == doctest::Approx(direct(i, j)).epsilon(1e-13));

  CHECK_THROWS_AS(dtrw_matrix(triangle(), p, -1), UsageError);
}

TEST_CASE("dtrw_matrix on K2: even/odd state split") {
  // H^n alternates between I and the swap, so P_00(t) = sum_{n even} Phi(n,t)
  PdtpParams p(0.5, 1.0, 0.5);
  for (long t : {1L, 4L, 9L}) {
    auto pm = dtrw_matrix(k2(), p, t);
    auto dist = counting::state_distribution(p, t);
    double even = 0.0;
    for (long n = 0; n <= t; n += 2) even += dist.probs[n];
    CHECK(pm.m(0, 0) == doctest::Approx(even).epsilon(1e-12));
    CHECK(pm.m(0, 1) == doctest::Approx(1.0 - even).epsilon(1e-12));
  }
}

TEST_CASE("dtrw invariants: row sums, detailed balance, spectrum, commutation") {
  PdtpParams p(0.5, 1.0, 0.5);
  std::vector<Graph> graphs;
  graphs.push_back(k2());
  graphs.push_back(triangle());
  graphs.push_back(cycle5());
  graphs.push_back(star3());
  graphs.push_back(random_connected_10());

  for (const auto& g : graphs) {
    auto h = one_step_matrix(g).m;
    auto mats = dtrw_matrices(g, p, 24);
    for (long t = 0; t <= 24; ++t) {
      const auto& pm = mats[t].m;
      for (int i = 0; i < g.size(); ++i)
        CHECK(std::fabs(pm.row(i).sum() - 1.0) <= 1e-10);
      for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j)
          CHECK(std::fabs(g.degrees()[i] * pm(i, j) -
                          g.degrees()[j] * pm(j, i)) <= 1e-10);
      CHECK(((pm * h) - (h * pm)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    // spectral sanity at a few times
    for (long t : {3L, 12L, 24L}) {
      Eigen::EigenSolver<Eigen::MatrixXd> es(mats[t].m);
      for (int i = 0; i < g.size(); ++i)
        CHECK(std::abs(es.eigenvalues()[i]) <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("dtrw_matrices agrees with one-shot dtrw_matrix") {
  PdtpParams p(0.9, 1.754, 2.0);
  auto g = cycle5();
  auto mats = dtrw_matrices(g, p, 12);
  for (long t : {0L, 5L, 12L}) {
    auto single = dtrw_matrix(g, p, t);
    CHECK((mats[t].m - single.m).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("occupation_row: start indicator, K2 split, long-time flattening") {
  PdtpParams p(0.5, 1.0, 0.5);
  auto row0 = occupation_row(triangle(), p, 0, 1);
  CHECK(row0[1] == 1.0);
  CHECK(row0[0] == 0.0);

  // K2 at alpha = nu = 1, xi = 1, t = 1: [1/2, 1/2]
  PdtpParams bern(1.0, 1.0, 1.0);
  auto r = occupation_row(k2(), bern, 1, 0, counting::Route::kOracle);
  CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-13));

  // triangle rows drift toward the uniform stationary vector
  auto far = occupation_row(triangle(), p, 200, 0);
  for (int j = 0; j < 3; ++j)
    CHECK(far[j] == doctest::Approx(1.0 / 3.0).epsilon(0.15));

  CHECK_THROWS_AS(occupation_row(triangle(), p, 3, 7), UsageError);
}

TEST_CASE("stationary_distribution: degree proportional, fixed point of H") {
  auto pi_tri = stationary_distribution(triangle());
  for (int i = 0; i < 3; ++i) CHECK(pi_tri[i] == doctest::Approx(1.0 / 3.0));

  auto pi_star = stationary_distribution(star3());
  CHECK(pi_star[0] == doctest::Approx(0.5));
  for (int i = 1; i <= 3; ++i) CHECK(pi_star[i] == doctest::Approx(1.0 / 6.0));

  for (const Graph& g : {triangle(), star3(), cycle5(), random_connected_10()}) {
    auto pi = stationary_distribution(g);
    auto h = one_step_matrix(g).m;
    Eigen::VectorXd residual = (pi.transpose() * h).transpose() - pi;
    CHECK(residual.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("write_matrix_csv: 17-digit row-major output parses back exactly") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0 / 3.0, 0.1234567890123456789, 1e-17, 1.0;
  std::ostringstream out;
  write_matrix_csv(out, m);
  std::istringstream in(out.str());
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      CHECK(std::stod(cell) == m(row, col));
      ++col;
    }
    CHECK(col == 2);
    ++row;
  }
  CHECK(row == 2);
}
