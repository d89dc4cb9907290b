#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "support.hpp"

using namespace asfem;

namespace {

double l2_error(const FieldCoefficients& field, const ScalarFunction& f) {
  const Mesh& m = field.space->mesh();
  const auto rule = triangle_quadrature(14);
  const Eigen::MatrixX2d ref = rule.points;
  double s = 0.0;
  for (CellIndex K = 0; K < static_cast<CellIndex>(m.num_cells()); ++K) {
    const CellGeometry g(m, K);
    const Eigen::MatrixX2d x = g.map(ref);
    const Eigen::MatrixXd v = evaluate_on_cell(field, K, ref);
    for (Eigen::Index q = 0; q < ref.rows(); ++q) {
      const double d = v(q, 0) - f(x.row(q).transpose());
      s += rule.weights[q] * std::abs(g.det) * d * d;
    }
  }
  return std::sqrt(s);
}

std::vector<Point> random_points(const Mesh& m, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<CellIndex> pick(0, static_cast<CellIndex>(m.num_cells()) - 1);
  std::vector<Point> out;
  for (int i = 0; i < n; ++i) {
    const auto p = m.cell_points(pick(rng));
    double a = u(rng), b = u(rng);
    if (a + b > 1) {
      a = 1 - a;
      b = 1 - b;
    }
    out.push_back(p[0] + a * (p[1] - p[0]) + b * (p[2] - p[0]));
  }
  return out;
}

}  // namespace

TEST_CASE("DOF counts") {
  auto m1 = testing::share(build_structured_unit_square(1));
  CHECK(build_space(m1, 1, Continuity::Continuous, 1)->num_dofs() == 4);
  CHECK(build_space(m1, 1, Continuity::Broken, 1)->num_dofs() == 6);

  auto m2 = testing::share(build_structured_unit_square(2));
  // Oracle: one node per vertex and one per distinct edge.
  std::set<std::pair<int, int>> edges;
  for (const auto& c : m2->cells())
    for (int e = 0; e < 3; ++e) edges.insert(std::minmax(c[(e + 1) % 3], c[(e + 2) % 3]));
  const int nodes = static_cast<int>(m2->num_vertices() + edges.size());
  CHECK(nodes == 25);
  CHECK(build_space(m2, 2, Continuity::Continuous, 2)->num_dofs() == 2 * nodes);

  for (int k = 0; k <= 4; ++k) {
    const auto s = build_space(m2, k, Continuity::Broken, 2);
    CHECK(s->num_dofs() == static_cast<int>(m2->num_cells()) * (k + 1) * (k + 2) / 2 * 2);
  }
  // Continuous P^k: vertices + (k-1) per edge + (k-1)(k-2)/2 per cell.
  for (int k = 1; k <= 4; ++k) {
    const int expected = static_cast<int>(m2->num_vertices() + (k - 1) * edges.size() +
                                          (k - 1) * (k - 2) / 2 * m2->num_cells());
    CHECK(build_space(m2, k, Continuity::Continuous, 1)->num_dofs() == expected);
  }
}

TEST_CASE("invalid spaces are rejected") {
  auto m = testing::share(build_structured_unit_square(1));
  CHECK_THROWS(build_space(m, 0, Continuity::Continuous, 1));
  CHECK_THROWS(build_space(m, 5, Continuity::Broken, 1));
  CHECK_THROWS(build_space(m, 1, Continuity::Broken, 3));
  const auto s = build_space(m, 1, Continuity::Broken, 1);
  CHECK_THROWS(FieldCoefficients(s, Vector::Zero(3)));
}

TEST_CASE("continuous DOFs agree on shared nodes") {
  auto m = testing::share(testing::random_mesh(4));
  for (int k = 1; k <= 4; ++k) {
    const auto s = build_space(m, k, Continuity::Continuous, 2);
    std::vector<Point> seen(static_cast<std::size_t>(s->num_nodes()), Point::Constant(NAN));
    for (CellIndex K = 0; K < static_cast<CellIndex>(m->num_cells()); ++K) {
      const Eigen::MatrixX2d x = CellGeometry(*m, K).map(s->basis().nodes());
      const auto nodes = s->cell_nodes(K);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        auto& p = seen[nodes[i]];
        const Point here = x.row(static_cast<Eigen::Index>(i)).transpose();
        if (std::isnan(p.x())) p = here;
        CHECK((p - here).norm() < 1e-13);
      }
      const auto dofs = s->cell_dofs(K);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        CHECK(dofs[2 * i] == 2 * nodes[i]);
        CHECK(dofs[2 * i + 1] == 2 * nodes[i] + 1);
      }
    }
  }
}

TEST_CASE("interpolation reproduces polynomials") {
  auto m = testing::share(testing::jittered_square(3, 2));
  const auto s1 = build_space(m, 1, Continuity::Continuous, 1);
  const auto one = interpolate(s1, ScalarFunction([](const Point&) { return 1.0; }));
  CHECK((one.values.array() - 1.0).abs().maxCoeff() == 0.0);

  const ScalarFunction lin = [](const Point& x) { return x.x() + x.y(); };
  const auto fl = interpolate(s1, lin);
  for (const auto& p : random_points(*m, 20, 1)) CHECK(evaluate_at(fl, p)[0] == doctest::Approx(lin(p)).epsilon(1e-13));

  const ScalarFunction cubic = [](const Point& x) { return x.x() * x.x() * x.y(); };
  CHECK(l2_error(interpolate(build_space(m, 3, Continuity::Continuous, 1), cubic), cubic) < 1e-12);

  for (int k = 1; k <= 4; ++k) {
    const ScalarFunction f = [k](const Point& x) { return std::pow(x.x() - 0.3 * x.y(), k) + x.y(); };
    CHECK(l2_error(interpolate(build_space(m, k, Continuity::Continuous, 1), f), f) < 1e-12);
    CHECK(l2_error(interpolate(build_space(m, k, Continuity::Broken, 1), f), f) < 1e-12);
  }
  // Not reproduced one degree higher.
  const ScalarFunction sq = [](const Point& x) { return x.x() * x.x(); };
  CHECK(l2_error(interpolate(s1, sq), sq) > 1e-4);
}

TEST_CASE("vector interpolation interleaves components") {
  auto m = testing::share(build_structured_unit_square(2));
  const auto s = build_space(m, 2, Continuity::Continuous, 2);
  const auto f = interpolate(s, VectorFunction([](const Point& x) { return Eigen::Vector2d(x.x(), -2.0 * x.y()); }));
  for (int n = 0; n < s->num_nodes(); ++n) {
    CHECK(f.values[2 * n] == doctest::Approx(s->node_points()[n].x()));
    CHECK(f.values[2 * n + 1] == doctest::Approx(-2.0 * s->node_points()[n].y()));
  }
  const Eigen::VectorXd v = evaluate_at(f, Point(0.3, 0.7));
  CHECK(v[0] == doctest::Approx(0.3));
  CHECK(v[1] == doctest::Approx(-1.4));
  CHECK_THROWS(evaluate_at(f, Point(2.0, 0.0)));
}

TEST_CASE("gradients of interpolated polynomials") {
  auto m = testing::share(testing::jittered_square(2, 5));
  const auto s = build_space(m, 2, Continuity::Broken, 1);
  const auto f = interpolate(s, ScalarFunction([](const Point& x) { return x.x() * x.y() + 3 * x.x(); }));
  const auto rule = triangle_quadrature(3);
  const Eigen::MatrixX2d ref = rule.points;
  for (CellIndex K = 0; K < static_cast<CellIndex>(m->num_cells()); ++K) {
    const auto g = gradient_on_cell(f, K, ref);
    const Eigen::MatrixX2d x = CellGeometry(*m, K).map(ref);
    for (Eigen::Index q = 0; q < ref.rows(); ++q) {
      CHECK(g[0](q, 0) == doctest::Approx(x(q, 1) + 3));
      CHECK(g[0](q, 1) == doctest::Approx(x(q, 0)));
    }
  }
}

TEST_CASE("face traces, jumps and averages") {
  auto m = testing::share(testing::random_mesh(6));
  const Eigen::VectorXd t = edge_quadrature(5).points.col(0);

  SUBCASE("continuous fields have no interior jumps") {
    for (int k = 1; k <= 4; ++k) {
      const auto s = build_space(m, k, Continuity::Continuous, 2);
      const FieldCoefficients f(s, testing::random_vector(s->num_dofs(), k));
      for (int face : m->faces().interior) CHECK(face_jump(f, face, t).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
  SUBCASE("boundary jump and average equal the trace") {
    const auto s = build_space(m, 2, Continuity::Broken, 1);
    const FieldCoefficients f(s, testing::random_vector(s->num_dofs(), 3));
    for (int face : m->faces().boundary) {
      const auto tr = face_trace(f, face, Side::Plus, t).values;
      CHECK((face_jump(f, face, t) - tr).norm() == 0.0);
      CHECK((face_average(f, face, t) - tr).norm() == 0.0);
      CHECK_THROWS(face_trace(f, face, Side::Minus, t));
    }
  }
  SUBCASE("cell-index field jumps by one between neighbours") {
    auto sq = testing::share(build_structured_unit_square(1));
    const auto s = build_space(sq, 0, Continuity::Broken, 1);
    const FieldCoefficients f(s, Vector::LinSpaced(2, 0, 1));
    const int face = sq->faces().interior[0];
    const Eigen::MatrixXd j = face_jump(f, face, t);
    CHECK(std::abs(std::abs(j(0, 0)) - 1.0) < 1e-14);
    CHECK(j(0, 0) == doctest::Approx(-1.0));  // plus is cell 0
    CHECK((j.array() == j(0, 0)).all());
  }
  SUBCASE("average-jump product identity") {
    const auto s = build_space(m, 3, Continuity::Broken, 1);
    const FieldCoefficients v(s, testing::random_vector(s->num_dofs(), 11));
    const FieldCoefficients w(s, testing::random_vector(s->num_dofs(), 12));
    for (int face : m->faces().interior) {
      const auto vp = face_trace(v, face, Side::Plus, t).values, vm = face_trace(v, face, Side::Minus, t).values;
      const auto wp = face_trace(w, face, Side::Plus, t).values, wm = face_trace(w, face, Side::Minus, t).values;
      const Eigen::ArrayXd lhs = face_average(v, face, t).array() * face_jump(w, face, t).array() +
                                 face_jump(v, face, t).array() * face_average(w, face, t).array();
      const Eigen::ArrayXd rhs = vp.array() * wp.array() - vm.array() * wm.array();
      CHECK((lhs - rhs).abs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("traces agree with point evaluation from each side") {
    const auto s = build_space(m, 2, Continuity::Broken, 2);
    const FieldCoefficients f = interpolate(s, VectorFunction([](const Point& x) {
      return Eigen::Vector2d(x.x() * x.y(), 1.0 - x.y() * x.y());
    }));
    for (int face = 0; face < static_cast<int>(m->num_faces()); ++face) {
      const Eigen::MatrixX2d x = face_points(*m, face, t);
      const auto tr = face_trace(f, face, Side::Plus, t);
      for (Eigen::Index q = 0; q < t.size(); ++q) {
        CHECK(tr.values(q, 0) == doctest::Approx(x(q, 0) * x(q, 1)));
        CHECK(tr.grads[1](q, 1) == doctest::Approx(-2.0 * x(q, 1)));
      }
    }
  }
}

TEST_CASE("mean value") {
  auto m = testing::share(testing::jittered_square(4, 8));
  const auto s = build_space(m, 1, Continuity::Continuous, 1);
  CHECK(mean_value(interpolate(s, ScalarFunction([](const Point&) { return 2.5; }))) == doctest::Approx(2.5));
  CHECK(mean_value(interpolate(s, ScalarFunction([](const Point& x) { return x.x(); }))) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(mean_value(interpolate(s, ScalarFunction([](const Point& x) { return x.x() - 0.5; })))) < 1e-14);
  CHECK_THROWS(mean_value(FieldCoefficients(build_space(m, 1, Continuity::Continuous, 2))));

  const auto p0 = build_space(m, 0, Continuity::Broken, 1);
  const Vector ints = basis_integrals(*p0);
  for (CellIndex K = 0; K < static_cast<CellIndex>(m->num_cells()); ++K) CHECK(ints[K] == doctest::Approx(m->cell_area(K)));
}

TEST_CASE("embedding preserves values") {
  auto m = testing::share(testing::random_mesh(7));
  const auto pts = random_points(*m, 10, 2);
  for (int k = 1; k <= 4; ++k) {
    for (int target_k = k; target_k <= 4; ++target_k) {
      const auto src = build_space(m, k, Continuity::Continuous, 2);
      const auto dst = build_space(m, target_k, Continuity::Broken, 2);
      const FieldCoefficients f(src, testing::random_vector(src->num_dofs(), 100 + k));
      const FieldCoefficients g = embed(f, dst);
      for (const auto& p : pts) CHECK((evaluate_at(f, p) - evaluate_at(g, p)).norm() < 1e-13);
      CHECK((embedding_matrix(*src, *dst) * f.values - g.values).norm() < 1e-13);
    }
  }
  SUBCASE("continuous quadratic embeds without jumps") {
    const auto src = build_space(m, 2, Continuity::Continuous, 1);
    const auto g = embed(interpolate(src, ScalarFunction([](const Point& x) { return x.x() * x.x(); })),
                         build_space(m, 2, Continuity::Broken, 1));
    const Eigen::VectorXd t = edge_quadrature(5).points.col(0);
    for (int face : m->faces().interior) CHECK(face_jump(g, face, t).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("P1 into P2 broken is exact") {
    const auto p1 = build_space(m, 1, Continuity::Continuous, 1);
    const ScalarFunction f = [](const Point& x) { return 2 * x.x() - x.y() + 0.5; };
    const auto g = embed(interpolate(p1, f), build_space(m, 2, Continuity::Broken, 1));
    CHECK(l2_error(g, f) < 1e-13);
  }
  SUBCASE("P0 pressure into P1 broken") {
    const auto p0 = build_space(m, 0, Continuity::Broken, 1);
    const FieldCoefficients f(p0, testing::random_vector(p0->num_dofs(), 5));
    const auto g = embed(f, build_space(m, 1, Continuity::Broken, 1));
    for (const auto& p : pts) CHECK(evaluate_at(f, p)[0] == doctest::Approx(evaluate_at(g, p)[0]));
  }
  SUBCASE("incompatible targets are rejected") {
    const auto src = build_space(m, 2, Continuity::Continuous, 1);
    CHECK_THROWS(embedding_matrix(*src, *build_space(m, 1, Continuity::Broken, 1)));
    CHECK_THROWS(embedding_matrix(*src, *build_space(m, 2, Continuity::Continuous, 1)));
    CHECK_THROWS(embedding_matrix(*src, *build_space(m, 2, Continuity::Broken, 2)));
    auto other = testing::share(build_structured_unit_square(2));
    CHECK_THROWS(embedding_matrix(*src, *build_space(other, 2, Continuity::Broken, 1)));
  }
}
