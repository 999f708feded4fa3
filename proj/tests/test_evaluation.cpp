#include <doctest.h>

#include <cmath>
#include <fstream>

#include "shapematch/evaluation.hpp"
#include "testutil.hpp"

using namespace shapematch;

namespace {

std::vector<int> identity_map(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return m;
}

}  // namespace

TEST_CASE("perfect map: zero errors, pck one, auc one") {
  const TriangleMesh mesh = testutil::blob_mesh(1);
  const std::vector<int> gt = identity_map(mesh.n());
  const PointMap pred = make_hard_pointmap(gt, mesh.n());
  const EvalResult r = evaluate(pred, gt, mesh, default_pck_thresholds());
  CHECK(r.mean_error == 0.0);
  CHECK(r.per_vertex_error.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& [t, f] : r.pck) CHECK(f == 1.0);
  CHECK(r.auc == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.unreachable_count == 0);
}

TEST_CASE("single wrong vertex one edge away: mean = e / (n sqrt(A))") {
  const TriangleMesh strip = testutil::path_strip(5);
  std::vector<int> gt = identity_map(strip.n());
  std::vector<int> pred = gt;
  pred[0] = 1;  // one edge of length 1 away
  const EvalResult r =
      evaluate(make_hard_pointmap(pred, strip.n()), gt, strip, default_pck_thresholds());
  const double area = surface_area(strip);
  const double expected = 1.0 / (static_cast<double>(strip.n()) * std::sqrt(area));
  CHECK(r.mean_error == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("octahedron planted swap matches hand-enumerated geodesics") {
  const TriangleMesh oct = testutil::octahedron();
  // swap the two poles (vertices 4 and 5): each error is the pole-to-pole
  // distance 2*sqrt(2); all other vertices are correct
  std::vector<int> gt = identity_map(6);
  std::vector<int> pred = gt;
  std::swap(pred[4], pred[5]);
  Eigen::VectorXd thresholds(3);
  thresholds << 0.0, 0.5, 1.5;
  const EvalResult r = evaluate(make_hard_pointmap(pred, 6), gt, oct, thresholds);
  const double area = surface_area(oct);  // 8 faces of area sqrt(3)/2 * ... exact below
  const double pole_dist = 2.0 * std::sqrt(2.0);
  const double expected_err = pole_dist / std::sqrt(area);
  for (int i = 0; i < 4; ++i) CHECK(r.per_vertex_error[i] == 0.0);
  CHECK(r.per_vertex_error[4] == doctest::Approx(expected_err).epsilon(1e-12));
  CHECK(r.per_vertex_error[5] == doctest::Approx(expected_err).epsilon(1e-12));
  CHECK(r.mean_error == doctest::Approx(2.0 * expected_err / 6.0).epsilon(1e-12));
  // octahedron with unit circumradius: 8 equilateral faces of side sqrt(2)
  CHECK(area == doctest::Approx(8.0 * std::sqrt(3.0) / 4.0 * 2.0).epsilon(1e-12));
}

TEST_CASE("pck is monotone and auc lies in [0,1]") {
  const TriangleMesh mesh = testutil::grid_mesh(5, 5, true);
  testutil::Rng rng(3);
  std::vector<int> gt = identity_map(mesh.n());
  std::vector<int> pred(static_cast<std::size_t>(mesh.n()));
  for (int i = 0; i < mesh.n(); ++i) pred[static_cast<std::size_t>(i)] = rng.uniform_int(mesh.n());
  const EvalResult r =
      evaluate(make_hard_pointmap(pred, mesh.n()), gt, mesh, default_pck_thresholds());
  for (std::size_t i = 1; i < r.pck.size(); ++i) CHECK(r.pck[i].second >= r.pck[i - 1].second);
  CHECK(r.auc >= 0.0);
  CHECK(r.auc <= 1.0);
  // auc equals the trapezoidal integral normalized by the range
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < r.pck.size(); ++i)
    area += 0.5 * (r.pck[i].second + r.pck[i + 1].second) * (r.pck[i + 1].first - r.pck[i].first);
  CHECK(r.auc == doctest::Approx(area / 0.2).epsilon(1e-9));
}

TEST_CASE("scaling the mesh leaves normalized errors unchanged") {
  const TriangleMesh mesh = testutil::blob_mesh(1);
  testutil::Rng rng(5);
  std::vector<int> gt = identity_map(mesh.n());
  std::vector<int> pred = gt;
  for (int i = 0; i < 20; ++i) pred[static_cast<std::size_t>(rng.uniform_int(mesh.n()))] =
      rng.uniform_int(mesh.n());
  const EvalResult a =
      evaluate(make_hard_pointmap(pred, mesh.n()), gt, mesh, default_pck_thresholds());
  TriangleMesh scaled = mesh;
  scaled.vertices *= 3.7;
  const EvalResult b =
      evaluate(make_hard_pointmap(pred, mesh.n()), gt, scaled, default_pck_thresholds());
  CHECK((a.per_vertex_error - b.per_vertex_error).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("unreachable vertices are excluded and counted") {
  // two disjoint triangles; ground truth points across components
  TriangleMesh mesh;
  mesh.vertices.resize(6, 3);
  mesh.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 9, 9, 9, 10, 9, 9, 9, 10, 9;
  mesh.faces.resize(2, 3);
  mesh.faces << 0, 1, 2, 3, 4, 5;
  const std::vector<int> gt = {0, 1, 2, 3, 4, 5};
  std::vector<int> pred = {3, 1, 2, 0, 4, 5};  // vertices 0 and 3 map across the gap
  Eigen::VectorXd thresholds(2);
  thresholds << 0.0, 1.0;
  const EvalResult r = evaluate(make_hard_pointmap(pred, 6), gt, mesh, thresholds);
  CHECK(r.unreachable_count == 2);
  CHECK(std::isinf(r.per_vertex_error[0]));
  CHECK(r.mean_error == 0.0);  // the reachable predictions are all exact
}

TEST_CASE("input validation") {
  const TriangleMesh mesh = testutil::octahedron();
  const std::vector<int> gt = identity_map(6);
  CHECK_THROWS_AS(
      evaluate(make_hard_pointmap({0, 1}, 6), gt, mesh, default_pck_thresholds()),
      LengthMismatch);
  Eigen::VectorXd bad(2);
  bad << 0.2, 0.1;
  CHECK_THROWS_AS(evaluate(make_hard_pointmap(gt, 6), gt, mesh, bad), DimensionMismatch);
  const std::vector<int> out_of_range = {0, 1, 2, 3, 4, 6};
  CHECK_THROWS_AS(evaluate(make_hard_pointmap(gt, 6), out_of_range, mesh,
                           default_pck_thresholds()),
                  LengthMismatch);
}

TEST_CASE("eval CSV outputs are written with headers") {
  const TriangleMesh mesh = testutil::octahedron();
  const std::vector<int> gt = identity_map(6);
  const EvalResult r =
      evaluate(make_hard_pointmap(gt, 6), gt, mesh, default_pck_thresholds());
  save_eval_summary_csv("eval_s.csv", "self", r);
  save_eval_per_vertex_csv("eval_v.csv", r);
  save_pck_csv("eval_p.csv", r);
  std::ifstream s("eval_s.csv"), v("eval_v.csv"), p("eval_p.csv");
  std::string line;
  std::getline(s, line);
  CHECK(line == "name,mean_error,auc,unreachable");
  std::getline(v, line);
  CHECK(line == "vertex,error");
  std::getline(p, line);
  CHECK(line == "threshold,fraction");
  for (const char* f : {"eval_s.csv", "eval_v.csv", "eval_p.csv"}) std::remove(f);
}
