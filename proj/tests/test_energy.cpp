#include <doctest.h>

#include <cmath>
#include <numbers>

#include "energy_fixtures.h"
#include "nrr/energy.h"
#include "nrr/render.h"

using namespace nrr;

namespace {

DeformationGraph single_node_graph(const Vec3d& g = Vec3d(0, 0, 1)) {
  DeformationGraph graph;
  graph.sigma = 0.2;
  graph.nodes.push_back({g, Vec3d::Zero(), Vec3d::Zero()});
  return graph;
}

EnergySpec assemble_one(const DeformationGraph& graph, BlockList blocks) {
  std::vector<BlockList> terms;
  terms.push_back(std::move(blocks));
  return EnergySpec::assemble(graph, std::move(terms));
}

}  // namespace

TEST_CASE("dense ICP residuals") {
  const CameraIntrinsics K = testutil::small_intrinsics();

  SUBCASE("self-rendered target with identity warp gives zero residuals") {
    RgbdFrame target;
    target.intrinsics = K;
    target.depth = ImageF(K.width, K.height, 1.25f);
    const SurfaceMesh mesh = frame_to_mesh(target);
    DeformationGraph graph = single_node_graph({0, 0, 1.25});
    const EnergySpec spec =
        assemble_one(graph, residual_dense_icp(graph, mesh, target));
    CHECK(spec.energy(VecXd::Zero(6)) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("1 cm normal offset produces 0.01 point-to-plane residuals") {
    RgbdFrame source;
    source.intrinsics = K;
    source.depth = ImageF(K.width, K.height, 1.20f);
    RgbdFrame target;
    target.intrinsics = K;
    target.depth = ImageF(K.width, K.height, 1.21f);
    const SurfaceMesh mesh = frame_to_mesh(source);
    DeformationGraph graph = single_node_graph({0, 0, 1.2});
    const EnergySpec spec =
        assemble_one(graph, residual_dense_icp(graph, mesh, target));
    const VecXd F = spec.residuals(VecXd::Zero(6));
    int active = 0;
    for (const auto& block : spec.blocks()) {
      (void)block;
    }
    for (int i = 0; i < F.size(); i += 4) {
      if (F[i] != 0.0) {
        ++active;
        CHECK(F[i] == doctest::Approx(0.01).epsilon(1e-6));
      }
    }
    CHECK(active > 100);
  }

  SUBCASE("vertices projecting outside the target contribute nothing") {
    RgbdFrame target;
    target.intrinsics = K;
    target.depth = ImageF(K.width, K.height, 1.2f);
    SurfaceMesh mesh;
    mesh.vertices.push_back(Vec3d(5.0, 0, 1.2));  // far outside the frustum
    mesh.normals.push_back(Vec3d(0, 0, -1));
    mesh.source_pixel.push_back({0, 0});
    DeformationGraph graph = single_node_graph({0, 0, 1.2});
    const EnergySpec spec =
        assemble_one(graph, residual_dense_icp(graph, mesh, target));
    CHECK(spec.energy(VecXd::Zero(6)) == 0.0);
  }
}

TEST_CASE("ARAP residuals") {
  DeformationGraph graph;
  graph.sigma = 0.1;
  auto& gen = testutil::rng(301);
  for (int i = 0; i < 6; ++i)
    graph.nodes.push_back({Vec3d(testutil::uniform(gen, -0.3, 0.3),
                                 testutil::uniform(gen, -0.3, 0.3),
                                 testutil::uniform(gen, 0.8, 1.2)),
                           Vec3d::Zero(), Vec3d::Zero()});
  std::vector<Vec3d> pos;
  for (auto& n : graph.nodes) pos.push_back(n.g);
  graph.edges = build_edges(pos, 2);

  const EnergySpec spec = assemble_one(graph, residual_arap(graph, 1.0));

  SUBCASE("zero parameters give zero energy") {
    CHECK(spec.energy(VecXd::Zero(graph.param_count())) == 0.0);
  }
  SUBCASE("global translation is free") {
    VecXd x = VecXd::Zero(graph.param_count());
    for (int i = 0; i < graph.node_count(); ++i)
      x.segment<3>(6 * i + 3) = Vec3d(0.3, -0.1, 0.25);
    CHECK(spec.energy(x) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("global rotation with consistent translations is free") {
    const Vec3d theta = Vec3d(0.2, -0.3, 0.5);
    const Mat3d R = rotation_exp(theta);
    VecXd x = VecXd::Zero(graph.param_count());
    for (int i = 0; i < graph.node_count(); ++i) {
      x.segment<3>(6 * i) = theta;
      x.segment<3>(6 * i + 3) = R * graph.nodes[i].g - graph.nodes[i].g;
    }
    CHECK(spec.energy(x) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("adding a common translation to all t never changes the energy") {
    for (int trial = 0; trial < 20; ++trial) {
      VecXd x = testutil::random_params(gen, graph, 0.4, 0.1);
      const double e0 = spec.energy(x);
      const Vec3d shift(testutil::uniform(gen, -1, 1),
                        testutil::uniform(gen, -1, 1),
                        testutil::uniform(gen, -1, 1));
      for (int i = 0; i < graph.node_count(); ++i)
        x.segment<3>(6 * i + 3) += shift;
      CHECK(spec.energy(x) == doctest::Approx(e0).epsilon(1e-9));
    }
  }
}

TEST_CASE("learned residuals") {
  const CameraIntrinsics K = testutil::small_intrinsics();
  DeformationGraph graph = single_node_graph({0, 0, 1.0});

  SUBCASE("node on the peak with exact point prediction is zero") {
    LearnedConstraint c;
    c.node_index = 0;
    c.heatmap = ImageF(K.width, K.height, 0.0f);
    const Vec2d peak = project({0, 0, 1.0}, K);
    // Fill the bilinear cell containing the projection with ones.
    const int u0 = int(std::floor(peak.x())), v0 = int(std::floor(peak.y()));
    c.heatmap.at(u0, v0) = 1.0f;
    c.heatmap.at(u0 + 1, v0) = 1.0f;
    c.heatmap.at(u0, v0 + 1) = 1.0f;
    c.heatmap.at(u0 + 1, v0 + 1) = 1.0f;
    c.p = Vec3d(0, 0, 1.0);
    c.p_valid = true;
    std::vector<LearnedConstraint> cs{c};
    const EnergySpec spec = assemble_one(
        graph, residual_learned(graph, std::move(cs), K, 1.0, 10.0));
    CHECK(spec.energy(VecXd::Zero(6)) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("uniform heatmap of ones gives zero heatmap residual everywhere") {
    LearnedConstraint c;
    c.node_index = 0;
    c.heatmap = ImageF(K.width, K.height, 1.0f);
    c.p_valid = false;
    std::vector<LearnedConstraint> cs{c};
    const EnergySpec spec = assemble_one(
        graph, residual_learned(graph, std::move(cs), K, 1.0, 10.0));
    VecXd x = VecXd::Zero(6);
    x.segment<3>(3) = Vec3d(0.05, -0.03, 0.1);
    CHECK(spec.energy(x) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("two pixels from a sigma-7 Gaussian peak") {
    LearnedConstraint c;
    c.node_index = 0;
    c.heatmap = ImageF(K.width, K.height, 0.0f);
    const int pu = 80, pv = 60;
    for (int v = 0; v < K.height; ++v)
      for (int u = 0; u < K.width; ++u)
        c.heatmap.at(u, v) = float(std::exp(
            -((u - pu) * (u - pu) + (v - pv) * (v - pv)) / (2.0 * 49.0)));
    c.p_valid = false;
    std::vector<LearnedConstraint> cs{c};
    const EnergySpec spec = assemble_one(
        graph, residual_learned(graph, std::move(cs), K, 1.0, 10.0));
    // Place the node so g + t projects exactly 2 px from the peak.
    const Vec3d target = backproject({double(pu + 2), double(pv)}, 1.0, K);
    VecXd x = VecXd::Zero(6);
    x.segment<3>(3) = target - graph.nodes[0].g;
    const VecXd F = spec.residuals(x);
    REQUIRE(F.size() == 1);
    CHECK(F[0] == doctest::Approx(1.0 - std::exp(-4.0 / 98.0)).epsilon(1e-6));
    CHECK(F[0] == doctest::Approx(0.040).epsilon(0.02));
  }

  SUBCASE("projection outside the image saturates at residual 1") {
    LearnedConstraint c;
    c.node_index = 0;
    c.heatmap = ImageF(K.width, K.height, 0.5f);
    c.p_valid = false;
    std::vector<LearnedConstraint> cs{c};
    const EnergySpec spec = assemble_one(
        graph, residual_learned(graph, std::move(cs), K, 1.0, 10.0));
    VecXd x = VecXd::Zero(6);
    x.segment<3>(3) = Vec3d(10.0, 0, 0);  // projects far outside
    const VecXd F = spec.residuals(x);
    CHECK(F[0] == 1.0);
    const LinearSystem sys = spec.linearize(x);
    CHECK(sys.blocks[0].J.norm() == 0.0);
  }
}

TEST_CASE("filter_learned applies the paper thresholds exactly") {
  ImageF depth(8, 8, 1.0f);
  auto make = [](double visibility, double pred_depth) {
    LearnedConstraint c;
    c.node_index = 0;
    c.heatmap = ImageF(2, 2, 1.0f);
    c.visibility = visibility;
    c.predicted_depth = pred_depth;
    c.peak_pixel = Vec2i(4, 4);
    return c;
  };

  SUBCASE("visibility 0.4 is dropped") {
    CHECK(filter_learned({make(0.4, 1.0)}, depth).empty());
  }
  SUBCASE("visibility 0.5 is kept, 0.4999 dropped") {
    CHECK(filter_learned({make(0.5, 1.0)}, depth).size() == 1);
    CHECK(filter_learned({make(0.4999, 1.0)}, depth).empty());
  }
  SUBCASE("depth difference 0.2 m is dropped") {
    ImageF d12(8, 8, 1.2f);
    CHECK(filter_learned({make(0.9, 1.0)}, d12).empty());
  }
  SUBCASE("depth difference 0.1 m is kept") {
    ImageF d11(8, 8, 1.1f);
    CHECK(filter_learned({make(0.9, 1.0)}, d11).size() == 1);
  }
  SUBCASE("gap of exactly 0.15 m is kept, 0.1501 dropped") {
    // The bit of 0.15 at 2^-25 is zero, so 0.15 + 2^-25 is exact in double
    // and 2^-25 is exact in float; the computed gap equals the threshold
    // bit-for-bit and must pass the inclusive comparison.
    const double eps = std::ldexp(1.0, -25);
    ImageF dmap(8, 8, float(eps));
    CHECK(filter_learned({make(0.9, 0.15 + eps)}, dmap).size() == 1);
    CHECK(filter_learned({make(0.9, 0.1501 + eps)}, dmap).empty());
  }
  SUBCASE("invalid target depth drops the constraint") {
    ImageF zeros(8, 8, 0.0f);
    CHECK(filter_learned({make(0.9, 1.0)}, zeros).empty());
  }
  SUBCASE("filtering is idempotent") {
    std::vector<LearnedConstraint> cs{make(0.7, 1.05), make(0.2, 1.0),
                                      make(0.9, 2.0)};
    auto once = filter_learned(cs, depth);
    auto twice = filter_learned(once, depth);
    CHECK(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i)
      CHECK(once[i].visibility == twice[i].visibility);
  }
}

TEST_CASE("sparse residuals") {
  DeformationGraph graph = single_node_graph({0, 0, 1});

  SUBCASE("identity warp on coincident matches is zero") {
    std::vector<SparseMatch> ms{{Vec3d(0.1, 0, 1), Vec3d(0.1, 0, 1)}};
    const EnergySpec spec =
        assemble_one(graph, residual_sparse(graph, ms, 100.0));
    CHECK(spec.energy(VecXd::Zero(6)) == 0.0);
  }
  SUBCASE("two-centimeter offset with lambda 100") {
    std::vector<SparseMatch> ms{
        {Vec3d(0.1, 0, 1), Vec3d(0.1, 0, 1) + Vec3d(0, 0.02, 0)}};
    const EnergySpec spec =
        assemble_one(graph, residual_sparse(graph, ms, 100.0));
    const VecXd F = spec.residuals(VecXd::Zero(6));
    CHECK(F[0] == doctest::Approx(0.0));
    CHECK(F[1] == doctest::Approx(10.0 * -0.02));
    CHECK(F[2] == doctest::Approx(0.0));
    CHECK(spec.energy(VecXd::Zero(6)) == doctest::Approx(0.04));
  }
  SUBCASE("match far outside the node cover still warps via fallback") {
    std::vector<SparseMatch> ms{{Vec3d(100, 0, 1), Vec3d(100, 0.5, 1)}};
    const EnergySpec spec =
        assemble_one(graph, residual_sparse(graph, ms, 1.0));
    VecXd x = VecXd::Zero(6);
    x.segment<3>(3) = Vec3d(0, 0.5, 0);
    CHECK(spec.energy(x) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("silhouette residuals") {
  const CameraIntrinsics K = testutil::small_intrinsics();
  ImageU8 mask(K.width, K.height, 0);
  for (int v = 40; v < 80; ++v)
    for (int u = 60; u < 100; ++u) mask.at(u, v) = 255;
  auto dist = std::make_shared<DistanceMap>(distance_map(mask));
  DeformationGraph graph = single_node_graph({0, 0, 1});

  SUBCASE("vertex projecting inside the mask has zero residual") {
    SurfaceMesh mesh;
    mesh.vertices.push_back(backproject({80, 60}, 1.0, K));
    mesh.normals.push_back(Vec3d(0, 0, -1));
    mesh.source_pixel.push_back({80, 60});
    const EnergySpec spec = assemble_one(
        graph, residual_silhouette(graph, mesh, dist, K, 1.0));
    CHECK(spec.energy(VecXd::Zero(6)) == 0.0);
  }
  SUBCASE("vertex 5 px outside the boundary reads distance 5") {
    SurfaceMesh mesh;
    mesh.vertices.push_back(backproject({104.0, 60.0}, 1.0, K));
    mesh.normals.push_back(Vec3d(0, 0, -1));
    mesh.source_pixel.push_back({104, 60});
    const double lambda = 0.0001;
    const EnergySpec spec = assemble_one(
        graph, residual_silhouette(graph, mesh, dist, K, lambda));
    const VecXd F = spec.residuals(VecXd::Zero(6));
    CHECK(F[0] == doctest::Approx(std::sqrt(lambda) * 5.0).epsilon(1e-6));
  }
  SUBCASE("empty mesh produces no blocks") {
    CHECK(residual_silhouette(graph, SurfaceMesh{}, dist, K, 1.0).empty());
  }
}

TEST_CASE("photometric residuals") {
  const CameraIntrinsics K = testutil::small_intrinsics();
  DeformationGraph graph = single_node_graph({0, 0, 1.2});

  SUBCASE("identical frames and identity warp are zero") {
    RgbdFrame frame = testutil::smooth_target_frame(K);
    const SurfaceMesh mesh = frame_to_mesh(frame);
    const EnergySpec spec = assemble_one(
        graph, residual_photometric(graph, mesh, frame, frame, 0.001));
    CHECK(spec.energy(VecXd::Zero(6)) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("constant colors are zero for any warp") {
    RgbdFrame frame = testutil::smooth_target_frame(K);
    for (int v = 0; v < K.height; ++v)
      for (int u = 0; u < K.width; ++u)
        frame.color.at(u, v) = Vec3f(0.3f, 0.3f, 0.3f);
    const SurfaceMesh mesh = frame_to_mesh(frame);
    const EnergySpec spec = assemble_one(
        graph, residual_photometric(graph, mesh, frame, frame, 0.001));
    VecXd x = VecXd::Zero(6);
    x.segment<3>(3) = Vec3d(0.02, -0.01, 0.03);
    CHECK(spec.energy(x) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("3 px image shift matched by the corresponding 3D shift") {
    RgbdFrame source;
    source.intrinsics = K;
    source.depth = ImageF(K.width, K.height, 1.2f);
    source.color = ImageRGB(K.width, K.height);
    RgbdFrame target = source;
    for (int v = 0; v < K.height; ++v)
      for (int u = 0; u < K.width; ++u) {
        const float c = 0.5f + 0.2f * std::sin(0.15f * u) * std::cos(0.12f * v);
        source.color.at(u, v) = Vec3f(c, c, c);
        const float ct =
            0.5f + 0.2f * std::sin(0.15f * (u - 3)) * std::cos(0.12f * v);
        target.color.at(u, v) = Vec3f(ct, ct, ct);
      }
    // 3 px at fx = 130, z = 1.2 -> dx = 3 * z / fx.
    const double dx = 3.0 * 1.2 / K.fx;
    SurfaceMesh mesh;
    for (int u = 40; u < 120; u += 7)
      for (int v = 30; v < 90; v += 7) {
        mesh.vertices.push_back(backproject({double(u), double(v)}, 1.2, K));
        mesh.normals.push_back(Vec3d(0, 0, -1));
        mesh.source_pixel.push_back({u, v});
      }
    const EnergySpec spec = assemble_one(
        graph, residual_photometric(graph, mesh, source, target, 1.0));
    VecXd x = VecXd::Zero(6);
    x.segment<3>(3) = Vec3d(dx, 0, 0);
    const VecXd F = spec.residuals(x);
    CHECK(F.lpNorm<Eigen::Infinity>() < 2e-3);
  }
}

TEST_CASE("assemble") {
  DeformationGraph graph;
  graph.sigma = 0.1;
  graph.nodes.push_back({{0, 0, 1}, Vec3d::Zero(), Vec3d::Zero()});
  graph.nodes.push_back({{0.2, 0, 1}, Vec3d::Zero(), Vec3d::Zero()});
  graph.edges = {{0, 1}};

  SUBCASE("no active terms is an error") {
    std::vector<BlockList> empty;
    empty.push_back(residual_arap(graph, 0.0));
    CHECK_THROWS_AS(EnergySpec::assemble(graph, std::move(empty)),
                    std::invalid_argument);
  }
  SUBCASE("energies add exactly and scale with lambda") {
    std::vector<SparseMatch> ms{
        {Vec3d(0.1, 0, 1), Vec3d(0.12, 0, 1)},
        {Vec3d(0.0, 0.05, 1), Vec3d(0.0, 0.0, 1)}};
    VecXd x(12);
    x.setZero();
    x.segment<3>(0) = Vec3d(0.1, 0.2, -0.1);
    x.segment<3>(9) = Vec3d(0.05, 0, 0.02);

    auto arap_only = assemble_one(graph, residual_arap(graph, 1.0));
    auto sparse_only = assemble_one(graph, residual_sparse(graph, ms, 100.0));
    std::vector<BlockList> both;
    both.push_back(residual_arap(graph, 1.0));
    both.push_back(residual_sparse(graph, ms, 100.0));
    auto combined = EnergySpec::assemble(graph, std::move(both));

    const double ea = arap_only.energy(x);
    const double es = sparse_only.energy(x);
    CHECK(combined.energy(x) == doctest::Approx(ea + es).epsilon(1e-12));

    auto arap_double = assemble_one(graph, residual_arap(graph, 2.0));
    CHECK(arap_double.energy(x) == doctest::Approx(2.0 * ea).epsilon(1e-12));

    const auto terms = combined.term_energies(x);
    CHECK(terms.at(TermKind::kArap) == doctest::Approx(ea));
    CHECK(terms.at(TermKind::kSparse) == doctest::Approx(es));
  }
  SUBCASE("energy equals the squared norm of the stacked residual") {
    std::vector<SparseMatch> ms{{Vec3d(0.1, 0, 1), Vec3d(0.15, 0.02, 1)}};
    std::vector<BlockList> terms;
    terms.push_back(residual_arap(graph, 3.0));
    terms.push_back(residual_sparse(graph, ms, 10.0));
    auto spec = EnergySpec::assemble(graph, std::move(terms));
    auto& gen = testutil::rng(302);
    for (int trial = 0; trial < 10; ++trial) {
      const VecXd x = testutil::random_params(gen, graph, 0.5, 0.2);
      CHECK(spec.energy(x) ==
            doctest::Approx(spec.residuals(x).squaredNorm()).epsilon(1e-14));
    }
  }
}

TEST_CASE("residuals stay finite for extreme parameters") {
  auto& gen = testutil::rng(303);
  const EnergyWeights weights;
  testutil::TermFixture f = testutil::make_term_fixture(gen, weights);
  auto spec = EnergySpec::assemble(f.graph, std::move(f.terms));
  for (int trial = 0; trial < 5; ++trial) {
    const VecXd x = testutil::random_params(gen, f.graph, 3.0, 5.0);
    const VecXd F = spec.residuals(x);
    CHECK(F.allFinite());
  }
}

TEST_CASE("analytic Jacobians match finite differences on random problems") {
  auto& gen = testutil::rng(304);
  EnergyWeights weights;
  weights.lambda_photo = 0.001;
  weights.lambda_silh = 0.0001;
  weights.lambda_sparse = 100.0;
  for (int trial = 0; trial < 5; ++trial) {
    testutil::TermFixture f = testutil::make_term_fixture(gen, weights);
    auto spec = EnergySpec::assemble(f.graph, std::move(f.terms));
    CHECK(testutil::max_jacobian_mismatch(spec, f.x) < 1e-4);
  }
}
