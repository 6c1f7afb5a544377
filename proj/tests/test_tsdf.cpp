#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "nrr/render.h"
#include "nrr/tsdf.h"
#include "test_util.h"

using namespace nrr;

namespace {

// Fills the volume from an analytic SDF (meters), marking everything
// observed.
template <typename Sdf>
void fill_analytic(TsdfVolume& volume, Sdf&& sdf) {
  for (int k = 0; k < volume.dims().z(); ++k)
    for (int j = 0; j < volume.dims().y(); ++j)
      for (int i = 0; i < volume.dims().x(); ++i) {
        const double d = sdf(volume.voxel_center(i, j, k));
        const std::size_t idx =
            (static_cast<std::size_t>(k) * volume.dims().y() + j) *
                volume.dims().x() +
            i;
        volume.mutable_tsdf_data()[idx] = static_cast<float>(
            std::clamp(d / volume.truncation(), -1.0, 1.0));
        volume.mutable_weight_data()[idx] = 1.0f;
      }
}

// Closed 2-manifold check: every edge is shared by exactly two triangles.
bool is_closed_surface(const SurfaceMesh& mesh) {
  std::map<std::pair<int, int>, int> edge_count;
  for (const Vec3i& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  for (const auto& [edge, count] : edge_count)
    if (count != 2) return false;
  return true;
}

}  // namespace

TEST_CASE("extract_mesh on an analytic sphere") {
  TsdfConfig config;
  TsdfVolume volume = TsdfVolume::around_box(
      {-0.6, -0.6, -0.6}, {0.6, 0.6, 0.6}, config);
  const double radius = 0.5;
  fill_analytic(volume,
                [&](const Vec3d& p) { return p.norm() - radius; });
  const SurfaceMesh mesh = volume.extract_mesh();
  REQUIRE(mesh.vertices.size() > 1000);
  double max_err = 0.0, mean_err = 0.0;
  for (const Vec3d& v : mesh.vertices) {
    const double err = std::abs(v.norm() - radius);
    max_err = std::max(max_err, err);
    mean_err += err;
  }
  mean_err /= double(mesh.vertices.size());
  CHECK(mean_err < 0.2 * config.voxel_size);
  CHECK(max_err < config.voxel_size);

  // A correctly triangulated sphere is a closed surface with Euler
  // characteristic 2; any table transcription error breaks this.
  CHECK(is_closed_surface(mesh));
  std::map<std::pair<int, int>, int> edges;
  for (const Vec3i& t : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      edges[{std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])}] =
          1;
  const long chi = long(mesh.vertices.size()) - long(edges.size()) +
                   long(mesh.triangles.size());
  CHECK(chi == 2);

  // Normals follow the outward gradient.
  for (std::size_t i = 0; i < mesh.vertices.size(); i += 50) {
    const Vec3d expected = mesh.vertices[i].normalized();
    CHECK(mesh.normals[i].dot(expected) > 0.95);
  }
}

TEST_CASE("extract_mesh on a plane is planar with gradient normals") {
  TsdfConfig config;
  TsdfVolume volume =
      TsdfVolume::around_box({-0.2, -0.2, 0.8}, {0.2, 0.2, 1.2}, config);
  fill_analytic(volume, [](const Vec3d& p) { return 1.0 - p.z(); });
  const SurfaceMesh mesh = volume.extract_mesh();
  REQUIRE(!mesh.empty());
  for (const Vec3d& v : mesh.vertices)
    CHECK(v.z() == doctest::Approx(1.0).epsilon(1e-9));
  // SDF decreases along +z, so gradients (and normals) point to -z.
  for (const Vec3d& n : mesh.normals)
    CHECK(n.dot(Vec3d(0, 0, -1)) > 0.999);
}

TEST_CASE("all-positive tsdf extracts an empty mesh") {
  TsdfConfig config;
  TsdfVolume volume =
      TsdfVolume::around_box({0, 0, 0}, {0.2, 0.2, 0.2}, config);
  fill_analytic(volume, [](const Vec3d&) { return 1.0; });
  CHECK(volume.extract_mesh().empty());
}

TEST_CASE("unobserved volume extracts an empty mesh") {
  TsdfConfig config;
  TsdfVolume volume =
      TsdfVolume::around_box({0, 0, 0}, {0.2, 0.2, 0.2}, config);
  CHECK(volume.extract_mesh().empty());
}

TEST_CASE("integrate") {
  const CameraIntrinsics K(260, 260, 159.5, 119.5, 320, 240);

  SUBCASE("first integration stores the observation exactly") {
    RgbdFrame frame;
    frame.intrinsics = K;
    frame.depth = ImageF(K.width, K.height, 1.0f);
    TsdfConfig config;
    TsdfVolume volume =
        TsdfVolume::around_box({-0.1, -0.1, 0.9}, {0.1, 0.1, 1.1}, config);
    volume.integrate(frame);
    // Probe a voxel straight down the axis in front of the wall.
    bool probed = false;
    for (int k = 0; k < volume.dims().z(); ++k) {
      const Vec3d c = volume.voxel_center(volume.dims().x() / 2,
                                          volume.dims().y() / 2, k);
      if (c.z() <= 0.0) continue;
      const double sdf = 1.0 - c.z();
      if (std::abs(sdf) < volume.truncation() * 0.9) {
        const float expected = float(
            std::clamp(sdf / volume.truncation(), -1.0, 1.0));
        CHECK(volume.tsdf_at(volume.dims().x() / 2, volume.dims().y() / 2,
                             k) == doctest::Approx(expected).epsilon(1e-6));
        probed = true;
      }
    }
    CHECK(probed);
  }

  SUBCASE("integrating the same frame twice is a fixed point") {
    RgbdFrame frame;
    frame.intrinsics = K;
    frame.depth = ImageF(K.width, K.height);
    for (int v = 0; v < K.height; ++v)
      for (int u = 0; u < K.width; ++u)
        frame.depth.at(u, v) =
            1.0f + 0.05f * std::sin(0.05f * u) * std::cos(0.04f * v);
    TsdfConfig config;
    TsdfVolume volume =
        TsdfVolume::around_box({-0.3, -0.3, 0.8}, {0.3, 0.3, 1.2}, config);
    volume.integrate(frame);
    const std::vector<float> after_one = volume.tsdf_data();
    volume.integrate(frame);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < after_one.size(); ++i)
      max_diff = std::max(
          max_diff, double(std::abs(after_one[i] - volume.tsdf_data()[i])));
    CHECK(max_diff < 1e-6);
  }

  SUBCASE("tsdf stays in [-1,1] and weight in [0, w_max]") {
    auto& gen = testutil::rng(501);
    RgbdFrame frame;
    frame.intrinsics = K;
    TsdfConfig config;
    config.max_weight = 8.0f;
    TsdfVolume volume =
        TsdfVolume::around_box({-0.2, -0.2, 0.8}, {0.2, 0.2, 1.2}, config);
    for (int pass = 0; pass < 12; ++pass) {
      frame.depth = testutil::random_image(gen, K.width, K.height, 0.7f, 1.4f);
      volume.integrate(frame);
    }
    for (std::size_t i = 0; i < volume.voxel_count(); ++i) {
      CHECK(std::abs(volume.tsdf_data()[i]) <= 1.0f);
      CHECK(volume.weight_data()[i] >= 0.0f);
      CHECK(volume.weight_data()[i] <= config.max_weight);
    }
  }

  SUBCASE("round trip: rendered wall integrates to a surface at z = 1") {
    RgbdFrame frame;
    frame.intrinsics = K;
    frame.depth = ImageF(K.width, K.height, 1.0f);
    TsdfConfig config;
    TsdfVolume volume =
        TsdfVolume::around_box({-0.25, -0.25, 0.9}, {0.25, 0.25, 1.1}, config);
    volume.integrate(frame);
    const SurfaceMesh mesh = volume.extract_mesh();
    REQUIRE(!mesh.empty());
    double mean = 0.0;
    for (const Vec3d& v : mesh.vertices) mean += std::abs(v.z() - 1.0);
    mean /= double(mesh.vertices.size());
    CHECK(mean < 0.5 * config.voxel_size);
  }
}

TEST_CASE("warp_mesh") {
  SurfaceMesh mesh;
  for (int i = 0; i < 20; ++i) {
    mesh.vertices.emplace_back(0.01 * i, 0.02 * i, 1.0 + 0.005 * i);
    mesh.normals.emplace_back(0, 0, -1);
    mesh.source_pixel.emplace_back(i, i);
  }
  DeformationGraph graph;
  graph.sigma = 0.2;
  graph.nodes.push_back({{0.1, 0.2, 1.05}, Vec3d::Zero(), Vec3d::Zero()});

  SUBCASE("identity graph keeps the mesh") {
    const SurfaceMesh warped = warp_mesh(mesh, graph, VecXd::Zero(6));
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      CHECK((warped.vertices[i] - mesh.vertices[i]).norm() < 1e-15);
      CHECK((warped.normals[i] - mesh.normals[i]).norm() < 1e-15);
    }
  }
  SUBCASE("single-node translation shifts rigidly") {
    VecXd x = VecXd::Zero(6);
    x.segment<3>(3) = Vec3d(0.05, -0.02, 0.01);
    const SurfaceMesh warped = warp_mesh(mesh, graph, x);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
      CHECK((warped.vertices[i] - mesh.vertices[i] - Vec3d(0.05, -0.02, 0.01))
                .norm() < 1e-12);
  }
  SUBCASE("single-node rotation matches the Rodrigues oracle") {
    VecXd x = VecXd::Zero(6);
    x.segment<3>(0) = Vec3d(0, 0, std::numbers::pi / 2);
    const Mat3d R = rotation_exp(x.segment<3>(0));
    const SurfaceMesh warped = warp_mesh(mesh, graph, x);
    const Vec3d g = graph.nodes[0].g;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec3d expected = R * (mesh.vertices[i] - g) + g;
      CHECK((warped.vertices[i] - expected).norm() < 1e-12);
      CHECK((warped.normals[i] - R * mesh.normals[i]).norm() < 1e-12);
    }
  }
}
