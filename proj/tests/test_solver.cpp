#include <doctest.h>

#include <Eigen/Cholesky>

#include "energy_fixtures.h"
#include "nrr/solver.h"

using namespace nrr;

namespace {

MatXd random_spd(std::mt19937& gen, int n, double shift = 1.0) {
  MatXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = testutil::uniform(gen, -1, 1);
  return B.transpose() * B + shift * MatXd::Identity(n, n);
}

}  // namespace

TEST_CASE("pcg_solve") {
  SUBCASE("identity system converges in one iteration") {
    const int n = 8;
    VecXd b(n);
    b.setLinSpaced(n, 1.0, 2.0);
    const auto result = pcg_solve(
        [](const VecXd& v) { return v; }, VecXd::Ones(n), b, 10, 1e-12);
    CHECK(result.converged);
    CHECK(result.iterations == 1);
    CHECK((result.x - b).norm() < 1e-12);
  }
  SUBCASE("zero rhs returns zero immediately") {
    const auto result = pcg_solve([](const VecXd& v) { return v; },
                                  VecXd::Ones(5), VecXd::Zero(5), 10, 1e-10);
    CHECK(result.converged);
    CHECK(result.iterations == 0);
    CHECK(result.x.norm() == 0.0);
  }
  SUBCASE("matches a dense direct solve on random SPD systems") {
    auto& gen = testutil::rng(401);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = testutil::uniform_int(gen, 5, 30);
      const MatXd A = random_spd(gen, n);
      VecXd b(n);
      for (int i = 0; i < n; ++i) b[i] = testutil::uniform(gen, -1, 1);
      const auto result =
          pcg_solve([&](const VecXd& v) { return VecXd(A * v); },
                    A.diagonal(), b, 500, 1e-12);
      const VecXd direct = A.ldlt().solve(b);
      CHECK(result.converged);
      CHECK((result.x - direct).norm() / direct.norm() < 1e-6);
    }
  }
  SUBCASE("converges in at most n iterations on small systems") {
    auto& gen = testutil::rng(402);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = testutil::uniform_int(gen, 3, 20);
      const MatXd A = random_spd(gen, n);
      VecXd b(n);
      for (int i = 0; i < n; ++i) b[i] = testutil::uniform(gen, -1, 1);
      const auto result =
          pcg_solve([&](const VecXd& v) { return VecXd(A * v); },
                    A.diagonal(), b, n, 1e-10);
      CHECK(result.converged);
      CHECK(result.iterations <= n);
    }
  }
  SUBCASE("indefinite operator reports breakdown") {
    const auto result = pcg_solve([](const VecXd& v) { return VecXd(-v); },
                                  VecXd::Ones(4), VecXd::Ones(4), 10, 1e-10);
    CHECK(result.breakdown);
  }
}

TEST_CASE("apply_normal_matrix") {
  auto& gen = testutil::rng(403);
  EnergyWeights weights;
  weights.lambda_sparse = 100.0;

  for (int trial = 0; trial < 5; ++trial) {
    testutil::TermFixture f = testutil::make_term_fixture(gen, weights);
    auto spec = EnergySpec::assemble(f.graph, std::move(f.terms));
    const LinearSystem system = spec.linearize(f.x);
    const MatXd J = system.materialize_jacobian();
    const double damping = 1e-6;
    const MatXd JtJ =
        J.transpose() * J +
        damping * MatXd::Identity(system.param_count(), system.param_count());

    SUBCASE("agrees with the materialized normal matrix") {}
    for (int k = 0; k < 5; ++k) {
      VecXd x(system.param_count());
      for (int i = 0; i < x.size(); ++i) x[i] = testutil::uniform(gen, -1, 1);
      const VecXd via_blocks = apply_normal_matrix(system, damping, x);
      const VecXd dense = JtJ * x;
      CHECK((via_blocks - dense).lpNorm<Eigen::Infinity>() <
            1e-10 * std::max(1.0, dense.lpNorm<Eigen::Infinity>()));
    }

    // x = 0 -> 0; J = 0 handled through damping alone.
    CHECK(apply_normal_matrix(system, damping, VecXd::Zero(system.param_count()))
              .norm() == 0.0);

    // Symmetry: x^T A y == y^T A x.
    VecXd xa(system.param_count()), xb(system.param_count());
    for (int i = 0; i < xa.size(); ++i) {
      xa[i] = testutil::uniform(gen, -1, 1);
      xb[i] = testutil::uniform(gen, -1, 1);
    }
    const double lhs = xa.dot(apply_normal_matrix(system, damping, xb));
    const double rhs = xb.dot(apply_normal_matrix(system, damping, xa));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    // Jacobi diagonal matches the dense diagonal.
    const VecXd diag = system.normal_diagonal(damping);
    CHECK((diag - JtJ.diagonal()).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("apply_normal_matrix with zero Jacobian is pure damping") {
  LinearSystem system(12, 4);
  EvaluatedBlock b;
  b.row = 0;
  b.dim = 4;
  b.nodes = {0, 1};
  b.J = MatXd::Zero(4, 12);
  system.blocks.push_back(b);
  VecXd x(12);
  x.setLinSpaced(12, -1.0, 1.0);
  const VecXd out = apply_normal_matrix(system, 0.5, x);
  CHECK((out - 0.5 * x).norm() < 1e-15);
}

TEST_CASE("linearize is deterministic across repeated evaluation") {
  auto& gen = testutil::rng(404);
  EnergyWeights weights;
  testutil::TermFixture f = testutil::make_term_fixture(gen, weights);
  auto spec = EnergySpec::assemble(f.graph, std::move(f.terms));
  const LinearSystem a = spec.linearize(f.x);
  const LinearSystem b = spec.linearize(f.x);
  CHECK((a.F - b.F).norm() == 0.0);
  const VecXd rhs_a = a.jtf();
  const VecXd rhs_b = b.jtf();
  CHECK((rhs_a - rhs_b).norm() == 0.0);  // bit-identical reduction order
}

TEST_CASE("gauss_newton") {
  SUBCASE("zero-residual start leaves parameters unchanged") {
    DeformationGraph graph;
    graph.sigma = 0.1;
    graph.nodes.push_back({{0, 0, 1}, Vec3d::Zero(), Vec3d::Zero()});
    graph.nodes.push_back({{0.2, 0, 1}, Vec3d::Zero(), Vec3d::Zero()});
    graph.edges = {{0, 1}};
    auto spec = EnergySpec::assemble(graph, [&] {
      std::vector<BlockList> t;
      t.push_back(residual_arap(graph, 1.0));
      return t;
    }());
    SolverConfig config;
    config.gn_iterations = 4;
    const SolveResult result =
        gauss_newton(spec, VecXd::Zero(graph.param_count()), config);
    CHECK(result.final_energy == 0.0);
    CHECK(result.parameters.norm() == 0.0);
    for (const auto& it : result.iterations) CHECK(it.energy == 0.0);
  }

  SUBCASE("single sparse match converges to the exact translation") {
    // Match placed at the node: rotation columns vanish and the problem is
    // linear in t with a unique solution.
    DeformationGraph graph;
    graph.sigma = 0.2;
    const Vec3d s(0.02, -0.01, 1.05);
    graph.nodes.push_back({s, Vec3d::Zero(), Vec3d::Zero()});
    std::vector<SparseMatch> ms{{s, s + Vec3d(0.05, 0, 0)}};
    auto spec = EnergySpec::assemble(graph, [&] {
      std::vector<BlockList> t;
      t.push_back(residual_sparse(graph, ms, 1.0));
      return t;
    }());
    SolverConfig config;
    config.gn_iterations = 3;
    config.pcg_tolerance = 1e-12;
    config.damping = 0.0;
    const SolveResult result =
        gauss_newton(spec, VecXd::Zero(6), config);
    CHECK((result.parameters.segment<3>(3) - Vec3d(0.05, 0, 0)).norm() <
          1e-6);
    CHECK(result.final_energy < 1e-12);
  }

  SUBCASE("energy never increases with step acceptance on") {
    auto& gen = testutil::rng(405);
    EnergyWeights weights;
    for (int trial = 0; trial < 3; ++trial) {
      testutil::TermFixture f = testutil::make_term_fixture(gen, weights);
      auto spec = EnergySpec::assemble(f.graph, std::move(f.terms));
      SolverConfig config;
      config.gn_iterations = 6;
      const VecXd x0 = testutil::random_params(gen, f.graph, 0.05, 0.01);
      const SolveResult result = gauss_newton(spec, x0, config);
      const double initial = spec.energy(x0);
      CHECK(result.final_energy <= initial + 1e-12);
      for (std::size_t i = 1; i < result.iterations.size(); ++i)
        CHECK(result.iterations[i].energy <=
              result.iterations[i - 1].energy + 1e-12);
    }
  }

  SUBCASE("non-finite start throws NumericalError") {
    DeformationGraph graph;
    graph.sigma = 0.1;
    graph.nodes.push_back({{0, 0, 1}, Vec3d::Zero(), Vec3d::Zero()});
    std::vector<SparseMatch> ms{{Vec3d(0, 0, 1), Vec3d(0.1, 0, 1)}};
    auto spec = EnergySpec::assemble(graph, [&] {
      std::vector<BlockList> t;
      t.push_back(residual_sparse(graph, ms, 1.0));
      return t;
    }());
    VecXd x0(6);
    x0.setZero();
    x0[3] = std::numeric_limits<double>::quiet_NaN();
    SolverConfig config;
    CHECK_THROWS_AS(gauss_newton(spec, x0, config), NumericalError);
  }
}

TEST_CASE("gauss_newton solves a bit-identical trace across runs") {
  auto& gen = testutil::rng(406);
  EnergyWeights weights;
  testutil::TermFixture f = testutil::make_term_fixture(gen, weights);
  auto spec = EnergySpec::assemble(f.graph, std::move(f.terms));
  SolverConfig config;
  config.gn_iterations = 4;
  const VecXd x0 = testutil::random_params(gen, f.graph, 0.04, 0.01);
  const SolveResult a = gauss_newton(spec, x0, config);
  const SolveResult b = gauss_newton(spec, x0, config);
  CHECK((a.parameters - b.parameters).norm() == 0.0);
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i)
    CHECK(a.iterations[i].energy == b.iterations[i].energy);
}
