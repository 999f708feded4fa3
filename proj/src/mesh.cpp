#include "shapematch/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace shapematch {

namespace {

// skips blank lines and '#' comments, returns false at EOF
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) {
        blank = false;
        break;
      }
    if (!blank) return true;
  }
  return false;
}

void append_fan(std::vector<Eigen::Vector3i>& faces, const std::vector<long>& poly) {
  if (poly.size() < 3) throw ParseError("face with fewer than 3 vertices");
  for (std::size_t i = 1; i + 1 < poly.size(); ++i)
    faces.emplace_back(static_cast<int>(poly[0]), static_cast<int>(poly[i]),
                       static_cast<int>(poly[i + 1]));
}

TriangleMesh assemble(const std::vector<Eigen::Vector3d>& verts,
                      const std::vector<Eigen::Vector3i>& faces) {
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i];
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) mesh.faces.row(static_cast<Eigen::Index>(i)) = faces[i];
  validate_mesh(mesh);
  return mesh;
}

}  // namespace

void validate_mesh(const TriangleMesh& mesh) {
  const int n = mesh.n();
  std::vector<char> referenced(static_cast<std::size_t>(n), 0);
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
    const int a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
    for (int v : {a, b, c}) {
      if (v < 0 || v >= n)
        throw DegenerateMesh("face " + std::to_string(f) + " references vertex " +
                             std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
      referenced[static_cast<std::size_t>(v)] = 1;
    }
    if (a == b || b == c || a == c)
      throw DegenerateMesh("face " + std::to_string(f) + " has repeated vertices");
  }
  for (int v = 0; v < n; ++v)
    if (!referenced[static_cast<std::size_t>(v)])
      throw DegenerateMesh("isolated vertex " + std::to_string(v));
}

TriangleMesh parse_off(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) throw ParseError("empty OFF file");
  std::istringstream header(line);
  std::string tag;
  header >> tag;
  if (tag != "OFF") throw ParseError("missing OFF header");
  long nv = -1, nf = -1, ne = -1;
  if (!(header >> nv >> nf >> ne)) {
    if (!next_content_line(in, line)) throw ParseError("missing OFF counts");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf >> ne)) throw ParseError("malformed OFF counts");
  }
  if (nv < 0 || nf < 0) throw ParseError("negative OFF counts");

  std::vector<Eigen::Vector3d> verts;
  verts.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line)) throw ParseError("truncated OFF vertex list");
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw ParseError("malformed OFF vertex line: " + line);
    verts.emplace_back(x, y, z);
  }
  std::vector<Eigen::Vector3i> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    if (!next_content_line(in, line)) throw ParseError("truncated OFF face list");
    std::istringstream ls(line);
    long cnt;
    if (!(ls >> cnt) || cnt < 3) throw ParseError("malformed OFF face line: " + line);
    std::vector<long> poly(static_cast<std::size_t>(cnt));
    for (long& v : poly)
      if (!(ls >> v)) throw ParseError("malformed OFF face line: " + line);
    append_fan(faces, poly);
  }
  return assemble(verts, faces);
}

TriangleMesh parse_obj(std::istream& in) {
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  while (next_content_line(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ParseError("malformed OBJ vertex line: " + line);
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<long> poly;
      std::string tok;
      while (ls >> tok) {
        // accept v, v/vt, v//vn, v/vt/vn; keep the position index
        const auto slash = tok.find('/');
        long idx = 0;
        try {
          idx = std::stol(slash == std::string::npos ? tok : tok.substr(0, slash));
        } catch (const std::exception&) {
          throw ParseError("malformed OBJ face token: " + tok);
        }
        if (idx == 0) throw ParseError("OBJ face index 0 is invalid");
        // 1-based; negative indices are relative to the current vertex count
        const long zero_based = idx > 0 ? idx - 1 : static_cast<long>(verts.size()) + idx;
        poly.push_back(zero_based);
      }
      append_fan(faces, poly);
    }
    // other tags (vn, vt, usemtl, ...) ignored
  }
  if (verts.empty() || faces.empty()) throw ParseError("OBJ file contains no mesh");
  return assemble(verts, faces);
}

TriangleMesh parse_ply_ascii(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw ParseError("missing ply magic");
  long nv = -1, nf = -1;
  bool ascii = false;
  int xi = -1, yi = -1, zi = -1;
  int vertex_props = 0;
  std::string current_element;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = (fmt == "ascii");
    } else if (tag == "element") {
      std::string name;
      long count;
      ls >> name >> count;
      current_element = name;
      if (name == "vertex") nv = count;
      if (name == "face") nf = count;
    } else if (tag == "property" && current_element == "vertex") {
      std::string type, name;
      ls >> type >> name;
      if (name == "x") xi = vertex_props;
      if (name == "y") yi = vertex_props;
      if (name == "z") zi = vertex_props;
      ++vertex_props;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!ascii) throw ParseError("only ascii PLY is supported");
  if (nv < 0 || nf < 0 || xi < 0 || yi < 0 || zi < 0)
    throw ParseError("incomplete PLY header");

  std::vector<Eigen::Vector3d> verts;
  verts.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line)) throw ParseError("truncated PLY vertex list");
    std::istringstream ls(line);
    std::vector<double> vals(static_cast<std::size_t>(vertex_props));
    for (double& v : vals)
      if (!(ls >> v)) throw ParseError("malformed PLY vertex line: " + line);
    verts.emplace_back(vals[static_cast<std::size_t>(xi)], vals[static_cast<std::size_t>(yi)],
                       vals[static_cast<std::size_t>(zi)]);
  }
  std::vector<Eigen::Vector3i> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    if (!next_content_line(in, line)) throw ParseError("truncated PLY face list");
    std::istringstream ls(line);
    long cnt;
    if (!(ls >> cnt) || cnt < 3) throw ParseError("malformed PLY face line: " + line);
    std::vector<long> poly(static_cast<std::size_t>(cnt));
    for (long& v : poly)
      if (!(ls >> v)) throw ParseError("malformed PLY face line: " + line);
    append_fan(faces, poly);
  }
  return assemble(verts, faces);
}

TriangleMesh load_mesh(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path);
  switch (format) {
    case MeshFormat::Off:
      return parse_off(in);
    case MeshFormat::Obj:
      return parse_obj(in);
    case MeshFormat::PlyAscii:
      return parse_ply_ascii(in);
  }
  throw ParseError("unknown mesh format");
}

TriangleMesh load_mesh(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == "off") return load_mesh(path, MeshFormat::Off);
  if (ext == "obj") return load_mesh(path, MeshFormat::Obj);
  if (ext == "ply") return load_mesh(path, MeshFormat::PlyAscii);
  throw ParseError("cannot deduce mesh format from extension: " + path);
}

void save_off(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file: " + path);
  out.precision(17);
  out << "OFF\n" << mesh.n() << ' ' << mesh.num_faces() << " 0\n";
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
    out << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f)
    out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
  if (!out) throw IoError("failed writing mesh file: " + path);
}

Eigen::SparseMatrix<double> LaplacianPair::mass_matrix() const {
  const Eigen::Index n = mass.size();
  Eigen::SparseMatrix<double> m(n, n);
  m.reserve(Eigen::VectorXi::Constant(static_cast<int>(n), 1));
  for (Eigen::Index i = 0; i < n; ++i) m.insert(i, i) = mass[i];
  m.makeCompressed();
  return m;
}

double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
    const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
    const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
    const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

LaplacianPair build_laplacian(const TriangleMesh& mesh) {
  constexpr double kCotClamp = 1e4;  // survives near-degenerate triangles
  const int n = mesh.n();
  const Eigen::Index nf = mesh.faces.rows();

  Eigen::VectorXd face_area(nf);
  for (Eigen::Index f = 0; f < nf; ++f) {
    const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
    const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
    const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
    face_area[f] = 0.5 * (b - a).cross(c - a).norm();
  }
  const double mean_area = face_area.mean();
  if (!(mean_area > 0.0)) throw DegenerateGeometry("all faces are degenerate");
  for (Eigen::Index f = 0; f < nf; ++f)
    if (face_area[f] < 1e-12 * mean_area)
      throw DegenerateGeometry("face " + std::to_string(f) + " area " +
                               std::to_string(face_area[f]) + " below 1e-12 x mean face area");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nf) * 12);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  for (Eigen::Index f = 0; f < nf; ++f) {
    const int vi[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
    const Eigen::Vector3d p[3] = {mesh.vertices.row(vi[0]), mesh.vertices.row(vi[1]),
                                  mesh.vertices.row(vi[2])};
    for (int i : {0, 1, 2}) mass[vi[i]] += face_area[f] / 3.0;
    // cot of the angle at corner opp acting on the opposite edge (a, b)
    for (int opp : {0, 1, 2}) {
      const int a = vi[(opp + 1) % 3], b = vi[(opp + 2) % 3];
      const Eigen::Vector3d u = p[(opp + 1) % 3] - p[opp];
      const Eigen::Vector3d v = p[(opp + 2) % 3] - p[opp];
      double cot = u.dot(v) / u.cross(v).norm();
      cot = std::clamp(cot, -kCotClamp, kCotClamp);
      const double w = 0.5 * cot;
      trip.emplace_back(a, b, -w);
      trip.emplace_back(b, a, -w);
      trip.emplace_back(a, a, w);
      trip.emplace_back(b, b, w);
    }
  }
  LaplacianPair lap;
  lap.W.resize(n, n);
  lap.W.setFromTriplets(trip.begin(), trip.end());
  lap.W.makeCompressed();
  lap.mass = std::move(mass);
  return lap;
}

double cotan_weight(const LaplacianPair& lap, int i, int j) { return -lap.W.coeff(i, j); }

namespace {

struct EdgeGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;
};

EdgeGraph edge_graph(const TriangleMesh& mesh) {
  EdgeGraph g;
  g.adj.resize(static_cast<std::size_t>(mesh.n()));
  auto add = [&](int a, int b) {
    const double len = (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
    g.adj[static_cast<std::size_t>(a)].emplace_back(b, len);
    g.adj[static_cast<std::size_t>(b)].emplace_back(a, len);
  };
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
    add(mesh.faces(f, 0), mesh.faces(f, 1));
    add(mesh.faces(f, 1), mesh.faces(f, 2));
    add(mesh.faces(f, 2), mesh.faces(f, 0));
  }
  // duplicate edges (shared by two faces) are harmless for Dijkstra
  return g;
}

}  // namespace

Eigen::VectorXd geodesic_distances(const TriangleMesh& mesh, int source) {
  const int n = mesh.n();
  if (source < 0 || source >= n)
    throw DimensionMismatch("geodesic source " + std::to_string(source) + " out of range");
  const EdgeGraph g = edge_graph(mesh);
  Eigen::VectorXd dist =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (const auto& [u, len] : g.adj[static_cast<std::size_t>(v)]) {
      const double nd = d + len;
      if (nd < dist[u]) {
        dist[u] = nd;
        pq.emplace(nd, u);
      }
    }
  }
  return dist;
}

bool is_edge_connected(const TriangleMesh& mesh) {
  if (mesh.n() == 0) return true;
  const Eigen::VectorXd d = geodesic_distances(mesh, 0);
  return d.allFinite();
}

std::vector<int> load_correspondence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open correspondence file: " + path);
  std::vector<int> corr;
  std::string line;
  while (next_content_line(in, line)) {
    std::istringstream ls(line);
    long idx;
    if (!(ls >> idx)) throw ParseError("malformed correspondence line: " + line);
    if (idx < 0) throw ParseError("negative correspondence index: " + line);
    corr.push_back(static_cast<int>(idx));
  }
  if (corr.empty()) throw ParseError("empty correspondence file: " + path);
  return corr;
}

void save_correspondence(const std::string& path, const std::vector<int>& corr) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write correspondence file: " + path);
  for (int idx : corr) out << idx << '\n';
  if (!out) throw IoError("failed writing correspondence file: " + path);
}

std::uint64_t mesh_content_hash(const TriangleMesh& mesh) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const unsigned char* p, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
    for (int j = 0; j < 3; ++j) {
      const double v = mesh.vertices(i, j);
      mix(reinterpret_cast<const unsigned char*>(&v), sizeof(v));
    }
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f)
    for (int j = 0; j < 3; ++j) {
      const std::int32_t v = mesh.faces(f, j);
      mix(reinterpret_cast<const unsigned char*>(&v), sizeof(v));
    }
  return h;
}

}  // namespace shapematch
