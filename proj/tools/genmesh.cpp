// Small generator for the bundled test surfaces. All shapes are generic
// (no exact symmetries) so eigenvalue gaps stay open and descriptor rows
// stay distinct.

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <map>
#include <vector>

#include "shapematch/mesh.hpp"

namespace {

using shapematch::TriangleMesh;

TriangleMesh icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Eigen::Vector3i> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
      {5, 11, 4}, {11, 10, 2}, {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
      {3, 2, 6},  {3, 6, 8},  {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10},
      {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) v.normalize();

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d m = (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized();
      verts.push_back(m);
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i];
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) mesh.faces.row(static_cast<Eigen::Index>(i)) = faces[i];
  return mesh;
}

// generic smooth radial deformation; the incommensurate frequencies and
// phases remove all symmetries of the sphere
TriangleMesh blob(int subdivisions) {
  TriangleMesh mesh = icosphere(subdivisions);
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
    const Eigen::Vector3d p = mesh.vertices.row(i);
    const double r = 1.0 + 0.22 * std::sin(2.3 * p.x() + 0.7) * std::cos(1.7 * p.y() - 0.4) +
                     0.17 * std::sin(3.1 * p.z() + 1.9) + 0.11 * std::cos(2.9 * p.x() * p.y() + 0.3);
    mesh.vertices.row(i) = p * r;
  }
  return mesh;
}

TriangleMesh grid(int nx, int ny) {
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(nx) * ny, 3);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      mesh.vertices.row(static_cast<Eigen::Index>(j) * nx + i)
          << static_cast<double>(i) / (nx - 1), static_cast<double>(j) / (ny - 1), 0.0;
  mesh.faces.resize(2 * static_cast<Eigen::Index>(nx - 1) * (ny - 1), 3);
  Eigen::Index f = 0;
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = j * nx + i, b = a + 1, c = a + nx, d = a + nx + 1;
      mesh.faces.row(f++) << a, b, d;
      mesh.faces.row(f++) << a, d, c;
    }
  return mesh;
}

// open surface with boundary: a wavy height field over the unit square
TriangleMesh wave(int nx, int ny) {
  TriangleMesh mesh = grid(nx, ny);
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
    const double x = mesh.vertices(i, 0), y = mesh.vertices(i, 1);
    mesh.vertices(i, 2) = 0.14 * std::sin(4.7 * x + 0.9) * std::cos(3.3 * y + 0.2) +
                          0.09 * std::sin(6.1 * x * y + 1.3) + 0.05 * std::cos(5.3 * y - 0.8);
  }
  return mesh;
}

// genus-1 surface, twisted and bumped so no isometry survives
TriangleMesh twist(int nu, int nv) {
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(nu) * nv, 3);
  const double two_pi = 2.0 * M_PI;
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      const double u = two_pi * i / nu;
      const double v = two_pi * j / nv;
      const double r = 0.34 + 0.05 * std::sin(3.0 * u + 1.1) + 0.04 * std::cos(2.0 * v + 0.5);
      const double R = 1.0 + 0.08 * std::sin(2.0 * u + 0.3);
      const double w = v + 0.35 * std::sin(u + 0.7);
      mesh.vertices.row(static_cast<Eigen::Index>(j) * nu + i)
          << (R + r * std::cos(w)) * std::cos(u), (R + r * std::cos(w)) * std::sin(u),
          r * std::sin(w);
    }
  mesh.faces.resize(2 * static_cast<Eigen::Index>(nu) * nv, 3);
  Eigen::Index f = 0;
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      const int a = j * nu + i;
      const int b = j * nu + (i + 1) % nu;
      const int c = ((j + 1) % nv) * nu + i;
      const int d = ((j + 1) % nv) * nu + (i + 1) % nu;
      mesh.faces.row(f++) << a, b, d;
      mesh.faces.row(f++) << a, d, c;
    }
  return mesh;
}

TriangleMesh octahedron() {
  TriangleMesh mesh;
  mesh.vertices.resize(6, 3);
  mesh.vertices << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  mesh.faces.resize(8, 3);
  mesh.faces << 0, 2, 4, 2, 1, 4, 1, 3, 4, 3, 0, 4, 2, 0, 5, 1, 2, 5, 3, 1, 5, 0, 3, 5;
  return mesh;
}

// seeded smooth displacement field: a sum of low-frequency sinusoids whose
// phases and directions come from the seed; small amplitude keeps the copy
// near-isometric
TriangleMesh deform(const TriangleMesh& base, std::uint64_t seed, double amplitude) {
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ull + 0xbf58476d1ce4e5b9ull;
  auto next = [&state]() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  auto uniform = [&]() { return 2.0 * (static_cast<double>(next() >> 11) * 0x1.0p-53) - 1.0; };

  const double diag = (base.vertices.colwise().maxCoeff() - base.vertices.colwise().minCoeff()).norm();
  TriangleMesh out = base;
  for (int wave_i = 0; wave_i < 4; ++wave_i) {
    Eigen::Vector3d dir(uniform(), uniform(), uniform());
    dir.normalize();
    Eigen::Vector3d freq(uniform(), uniform(), uniform());
    freq *= 3.0 / diag;
    const double phase = 3.14 * uniform();
    const double amp = amplitude * diag * (0.5 + 0.5 * std::abs(uniform()));
    for (Eigen::Index v = 0; v < out.vertices.rows(); ++v) {
      const Eigen::Vector3d p = base.vertices.row(v);
      out.vertices.row(v) += (amp * std::sin(freq.dot(p) + phase)) * dir.transpose();
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bundled mesh generator"};
  std::string kind, output, input;
  int res = 3;
  std::uint64_t seed = 1;
  double amplitude = 0.01;
  app.add_option("kind", kind,
                 "blob | wave | twist | icosphere | grid | octahedron | deform")
      ->required();
  app.add_option("output", output, "output OFF path")->required();
  app.add_option("--res", res, "resolution parameter (subdivisions or grid side)");
  app.add_option("--input", input, "base mesh for deform");
  app.add_option("--seed", seed, "deformation seed");
  app.add_option("--amplitude", amplitude, "deformation amplitude relative to the bbox diagonal");
  CLI11_PARSE(app, argc, argv);

  try {
    TriangleMesh mesh;
    if (kind == "blob")
      mesh = blob(res);
    else if (kind == "wave")
      mesh = wave(res, res);
    else if (kind == "twist")
      mesh = twist(res, std::max(3, (res * 3) / 4));
    else if (kind == "icosphere")
      mesh = icosphere(res);
    else if (kind == "grid")
      mesh = grid(res, res);
    else if (kind == "octahedron")
      mesh = octahedron();
    else if (kind == "deform") {
      if (input.empty()) {
        std::cerr << "deform requires --input\n";
        return 2;
      }
      mesh = deform(shapematch::load_mesh(input), seed, amplitude);
    } else {
      std::cerr << "unknown kind: " << kind << "\n";
      return 2;
    }
    shapematch::validate_mesh(mesh);
    shapematch::save_off(output, mesh);
    std::cout << "wrote " << output << " (" << mesh.n() << " vertices, " << mesh.num_faces()
              << " faces)\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
