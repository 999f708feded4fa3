#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "shapematch/errors.hpp"

namespace shapematch {

/// Immutable triangle mesh. Vertex indices are 0-based everywhere; 1-based
/// OBJ indices are converted at the I/O boundary.
struct TriangleMesh {
  Eigen::MatrixX3d vertices;  // n x 3 positions
  Eigen::MatrixX3i faces;     // f x 3 vertex indices

  int n() const { return static_cast<int>(vertices.rows()); }
  int num_faces() const { return static_cast<int>(faces.rows()); }
};

enum class MeshFormat { Off, Obj, PlyAscii };

/// Load a mesh, deducing the format from the file extension
/// (.off / .obj / .ply).
TriangleMesh load_mesh(const std::string& path);
TriangleMesh load_mesh(const std::string& path, MeshFormat format);

/// Stream-based parsers (positions + faces only; normals/UVs ignored;
/// polygons are fan-triangulated).
TriangleMesh parse_off(std::istream& in);
TriangleMesh parse_obj(std::istream& in);
TriangleMesh parse_ply_ascii(std::istream& in);

void save_off(const std::string& path, const TriangleMesh& mesh);

/// Checks the TriangleMesh invariants; throws DegenerateMesh on violation.
void validate_mesh(const TriangleMesh& mesh);

/// Cotangent stiffness matrix W (positive semi-definite: off-diagonal
/// entries are -w_ij with w_ij = (cot a_ij + cot b_ij)/2, diagonal is the
/// negated off-diagonal row sum) and barycentric lumped vertex masses.
struct LaplacianPair {
  Eigen::SparseMatrix<double> W;  // n x n, symmetric PSD
  Eigen::VectorXd mass;           // n lumped vertex areas, strictly positive

  Eigen::SparseMatrix<double> mass_matrix() const;
};

LaplacianPair build_laplacian(const TriangleMesh& mesh);

/// Positive cotangent edge weight w_ij recovered from W (= -W(i,j)).
double cotan_weight(const LaplacianPair& lap, int i, int j);

double surface_area(const TriangleMesh& mesh);

/// Single-source Dijkstra distances over the edge graph with Euclidean
/// edge lengths. Unreachable vertices get +infinity.
Eigen::VectorXd geodesic_distances(const TriangleMesh& mesh, int source);

bool is_edge_connected(const TriangleMesh& mesh);

/// Ground-truth correspondence files: one 0-based target index per line.
std::vector<int> load_correspondence(const std::string& path);
void save_correspondence(const std::string& path, const std::vector<int>& corr);

/// FNV-1a over vertex and face bytes; keys spectral caches.
std::uint64_t mesh_content_hash(const TriangleMesh& mesh);

}  // namespace shapematch
