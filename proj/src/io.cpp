#include "nrr/io.h"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace nrr {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open: " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write: " + path.string());
  return out;
}

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated file: " + path.string());
  return value;
}

json load_json(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

void write_intrinsics(const std::filesystem::path& path,
                      const CameraIntrinsics& K) {
  auto out = open_out(path, false);
  out.precision(17);
  out << K.fx << " " << K.fy << " " << K.cx << " " << K.cy << " " << K.width
      << " " << K.height << "\n";
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  double fx, fy, cx, cy;
  int w, h;
  if (!(in >> fx >> fy >> cx >> cy >> w >> h))
    throw DataError("malformed intrinsics file: " + path.string());
  try {
    return CameraIntrinsics(fx, fy, cx, cy, w, h);
  } catch (const std::invalid_argument& e) {
    throw DataError("invalid intrinsics in " + path.string() + ": " +
                    e.what());
  }
}

void write_ply(const std::filesystem::path& path, const SurfaceMesh& mesh,
               bool binary) {
  auto out = open_out(path, true);
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float nx\nproperty float ny\nproperty float nz\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  if (binary) {
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec3f v = mesh.vertices[i].cast<float>();
      const Vec3f n = mesh.normals[i].cast<float>();
      out.write(reinterpret_cast<const char*>(v.data()), 12);
      out.write(reinterpret_cast<const char*>(n.data()), 12);
    }
    for (const Vec3i& t : mesh.triangles) {
      const std::uint8_t count = 3;
      put(out, count);
      out.write(reinterpret_cast<const char*>(t.data()), 12);
    }
  } else {
    out.precision(9);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec3d& v = mesh.vertices[i];
      const Vec3d& n = mesh.normals[i];
      out << v.x() << " " << v.y() << " " << v.z() << " " << n.x() << " "
          << n.y() << " " << n.z() << "\n";
    }
    for (const Vec3i& t : mesh.triangles)
      out << "3 " << t.x() << " " << t.y() << " " << t.z() << "\n";
  }
}

SurfaceMesh read_ply(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  std::string line;
  bool binary = false;
  std::size_t vertex_count = 0, face_count = 0;
  std::vector<std::string> vertex_props;
  if (!std::getline(in, line) || line != "ply")
    throw DataError("not a PLY file: " + path.string());
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      binary = fmt == "binary_little_endian";
    } else if (kw == "element") {
      std::string what;
      std::size_t n;
      ls >> what >> n;
      if (what == "vertex")
        vertex_count = n;
      else if (what == "face")
        face_count = n;
    } else if (kw == "property") {
      std::string type, name;
      ls >> type;
      if (type != "list") {
        ls >> name;
        if (vertex_count > 0 && face_count == 0) vertex_props.push_back(name);
      }
    } else if (kw == "end_header") {
      break;
    }
  }
  if (vertex_props.size() < 3)
    throw DataError("PLY without xyz properties: " + path.string());
  SurfaceMesh mesh;
  mesh.vertices.resize(vertex_count);
  mesh.normals.assign(vertex_count, Vec3d(0, 0, -1));
  mesh.source_pixel.assign(vertex_count, Vec2i(-1, -1));
  const bool has_normals = vertex_props.size() >= 6;
  for (std::size_t i = 0; i < vertex_count; ++i) {
    float values[6] = {0, 0, 0, 0, 0, -1};
    const std::size_t n = vertex_props.size();
    if (binary) {
      for (std::size_t p = 0; p < n; ++p) {
        const float f = get<float>(in, path);
        if (p < 6) values[p] = f;
      }
    } else {
      for (std::size_t p = 0; p < n; ++p) {
        float f;
        if (!(in >> f)) throw DataError("truncated PLY: " + path.string());
        if (p < 6) values[p] = f;
      }
    }
    mesh.vertices[i] = Vec3d(values[0], values[1], values[2]);
    if (has_normals) mesh.normals[i] = Vec3d(values[3], values[4], values[5]);
  }
  mesh.triangles.reserve(face_count);
  for (std::size_t f = 0; f < face_count; ++f) {
    int count;
    if (binary)
      count = get<std::uint8_t>(in, path);
    else if (!(in >> count))
      throw DataError("truncated PLY: " + path.string());
    std::vector<int> idx(count);
    for (int c = 0; c < count; ++c) {
      if (binary)
        idx[c] = get<std::int32_t>(in, path);
      else if (!(in >> idx[c]))
        throw DataError("truncated PLY: " + path.string());
    }
    for (int c = 2; c < count; ++c)
      mesh.triangles.push_back({idx[0], idx[c - 1], idx[c]});
  }
  return mesh;
}

void write_graph_json(const std::filesystem::path& path,
                      const DeformationGraph& graph) {
  json j;
  j["sigma"] = graph.sigma;
  j["nodes"] = json::array();
  for (const DeformationNode& n : graph.nodes)
    j["nodes"].push_back({{"g", {n.g.x(), n.g.y(), n.g.z()}},
                          {"theta", {n.theta.x(), n.theta.y(), n.theta.z()}},
                          {"t", {n.t.x(), n.t.y(), n.t.z()}}});
  j["edges"] = json::array();
  for (auto [a, b] : graph.edges) j["edges"].push_back({a, b});
  auto out = open_out(path, false);
  out << j.dump(1) << "\n";
}

DeformationGraph read_graph_json(const std::filesystem::path& path) {
  const json j = load_json(path);
  DeformationGraph graph;
  try {
    graph.sigma = j.at("sigma").get<double>();
    for (const json& nj : j.at("nodes")) {
      DeformationNode n;
      for (int c = 0; c < 3; ++c) {
        n.g[c] = nj.at("g").at(c).get<double>();
        n.theta[c] = nj.at("theta").at(c).get<double>();
        n.t[c] = nj.at("t").at(c).get<double>();
      }
      graph.nodes.push_back(n);
    }
    for (const json& ej : j.at("edges"))
      graph.edges.emplace_back(ej.at(0).get<int>(), ej.at(1).get<int>());
  } catch (const json::exception& e) {
    throw DataError("invalid graph JSON in " + path.string() + ": " +
                    e.what());
  }
  graph.validate();
  return graph;
}

void write_dense_matches(const std::filesystem::path& path,
                         const std::vector<DenseMatch>& matches) {
  auto out = open_out(path, true);
  put(out, static_cast<std::uint32_t>(matches.size()));
  for (const DenseMatch& m : matches) {
    put(out, static_cast<std::uint32_t>(m.source_pixel.x()));
    put(out, static_cast<std::uint32_t>(m.source_pixel.y()));
    put(out, m.target.x());
    put(out, m.target.y());
    put(out, m.target.z());
    put(out, static_cast<std::uint8_t>(m.valid ? 1 : 0));
  }
}

std::vector<DenseMatch> read_dense_matches(
    const std::filesystem::path& path) {
  auto in = open_in(path, true);
  const auto count = get<std::uint32_t>(in, path);
  std::vector<DenseMatch> matches(count);
  for (auto& m : matches) {
    m.source_pixel.x() = static_cast<int>(get<std::uint32_t>(in, path));
    m.source_pixel.y() = static_cast<int>(get<std::uint32_t>(in, path));
    m.target.x() = get<float>(in, path);
    m.target.y() = get<float>(in, path);
    m.target.z() = get<float>(in, path);
    m.valid = get<std::uint8_t>(in, path) != 0;
  }
  return matches;
}

void write_heatmap_file(const std::filesystem::path& path,
                        const HeatmapFile& data) {
  auto out = open_out(path, true);
  out.write("DDHM", 4);
  put(out, static_cast<std::uint32_t>(data.heatmap.height()));
  put(out, static_cast<std::uint32_t>(data.heatmap.width()));
  put(out, data.depth);
  put(out, data.visibility);
  put(out, static_cast<std::uint32_t>(data.query_pixel.x()));
  put(out, static_cast<std::uint32_t>(data.query_pixel.y()));
  out.write(reinterpret_cast<const char*>(data.heatmap.data()),
            static_cast<std::streamsize>(data.heatmap.size() * 4));
}

HeatmapFile read_heatmap_file(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DDHM", 4) != 0)
    throw DataError("not a heatmap file: " + path.string());
  HeatmapFile data;
  const auto height = get<std::uint32_t>(in, path);
  const auto width = get<std::uint32_t>(in, path);
  data.depth = get<float>(in, path);
  data.visibility = get<float>(in, path);
  data.query_pixel.x() = static_cast<int>(get<std::uint32_t>(in, path));
  data.query_pixel.y() = static_cast<int>(get<std::uint32_t>(in, path));
  if (width == 0 || height == 0 || width > 1 << 16 || height > 1 << 16)
    throw DataError("bad heatmap size: " + path.string());
  data.heatmap = ImageF(static_cast<int>(width), static_cast<int>(height));
  in.read(reinterpret_cast<char*>(data.heatmap.data()),
          static_cast<std::streamsize>(data.heatmap.size() * 4));
  if (!in) throw DataError("truncated heatmap file: " + path.string());
  return data;
}

void write_pair_annotation(const std::filesystem::path& path,
                           const PairAnnotation& annotation) {
  json j;
  j["id"] = annotation.id;
  j["source_frame"] = annotation.source_frame;
  j["target_frame"] = annotation.target_frame;
  j["matches"] = json::array();
  for (const AnnotatedMatch& m : annotation.matches)
    j["matches"].push_back(
        {{"source_uv", {m.source_uv.x(), m.source_uv.y()}},
         {"target_uv", {m.target_uv.x(), m.target_uv.y()}},
         {"source_xyz", {m.source_xyz.x(), m.source_xyz.y(), m.source_xyz.z()}},
         {"target_xyz",
          {m.target_xyz.x(), m.target_xyz.y(), m.target_xyz.z()}}});
  j["occlusions"] = json::array();
  for (const Vec2i& o : annotation.occlusions)
    j["occlusions"].push_back({{"source_uv", {o.x(), o.y()}}});
  auto out = open_out(path, false);
  out << j.dump(1) << "\n";
}

PairAnnotation read_pair_annotation(const std::filesystem::path& path) {
  const json j = load_json(path);
  PairAnnotation a;
  try {
    a.id = j.at("id").get<std::string>();
    a.source_frame = j.at("source_frame").get<int>();
    a.target_frame = j.at("target_frame").get<int>();
    for (const json& mj : j.at("matches")) {
      AnnotatedMatch m;
      m.source_uv = {mj.at("source_uv").at(0).get<int>(),
                     mj.at("source_uv").at(1).get<int>()};
      m.target_uv = {mj.at("target_uv").at(0).get<int>(),
                     mj.at("target_uv").at(1).get<int>()};
      for (int c = 0; c < 3; ++c) {
        m.source_xyz[c] = mj.at("source_xyz").at(c).get<double>();
        m.target_xyz[c] = mj.at("target_xyz").at(c).get<double>();
      }
      a.matches.push_back(m);
    }
    for (const json& oj : j.at("occlusions"))
      a.occlusions.emplace_back(oj.at("source_uv").at(0).get<int>(),
                                oj.at("source_uv").at(1).get<int>());
  } catch (const json::exception& e) {
    throw DataError("invalid annotation JSON in " + path.string() + ": " +
                    e.what());
  }
  return a;
}

void write_volume(const std::filesystem::path& path,
                  const TsdfVolume& volume) {
  auto out = open_out(path, true);
  for (int c = 0; c < 3; ++c) put(out, volume.origin()[c]);
  put(out, volume.voxel_size());
  for (int c = 0; c < 3; ++c)
    put(out, static_cast<std::uint32_t>(volume.dims()[c]));
  put(out, volume.truncation());
  put(out, volume.max_weight());
  out.write(reinterpret_cast<const char*>(volume.tsdf_data().data()),
            static_cast<std::streamsize>(volume.voxel_count() * 4));
  out.write(reinterpret_cast<const char*>(volume.weight_data().data()),
            static_cast<std::streamsize>(volume.voxel_count() * 4));
}

TsdfVolume read_volume(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  Vec3d origin;
  for (int c = 0; c < 3; ++c) origin[c] = get<double>(in, path);
  const double voxel_size = get<double>(in, path);
  Vec3i dims;
  for (int c = 0; c < 3; ++c)
    dims[c] = static_cast<int>(get<std::uint32_t>(in, path));
  const double truncation = get<double>(in, path);
  const float max_weight = get<float>(in, path);
  TsdfVolume volume(origin, voxel_size, dims, truncation, max_weight);
  in.read(reinterpret_cast<char*>(volume.mutable_tsdf_data().data()),
          static_cast<std::streamsize>(volume.voxel_count() * 4));
  in.read(reinterpret_cast<char*>(volume.mutable_weight_data().data()),
          static_cast<std::streamsize>(volume.voxel_count() * 4));
  if (!in) throw DataError("truncated volume file: " + path.string());
  return volume;
}

}  // namespace nrr
