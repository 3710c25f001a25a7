#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "zerohopf/averaging.hpp"

using namespace zerohopf;
using averaging::AveragedSet;
using Eigen::VectorXd;

namespace {

VectorXd vec1(double x) {
  VectorXd v(1);
  v << x;
  return v;
}

VectorXd vec2(double x, double y) {
  VectorXd v(2);
  v << x, y;
  return v;
}

double fact(int i) {
  double f = 1.0;
  for (int k = 2; k <= i; ++k) f *= k;
  return f;
}

}  // namespace

TEST_CASE("scalar linear field: closed-form recursion") {
  AveragedSet av(testutil::scalar_linear());
  const double z = 2.5;

  SUBCASE("y_i at interior times") {
    CHECK(av.y(1.7, vec1(z), 1)(0) == doctest::Approx(1.7 * z).epsilon(1e-10));
    CHECK(av.y(1.7, vec1(z), 2)(0) ==
          doctest::Approx(1.7 * 1.7 * z).epsilon(1e-10));
  }

  SUBCASE("y_i(0) = 0") {
    for (int i = 1; i <= 5; ++i) CHECK(av.y(0.0, vec1(z), i)(0) == 0.0);
  }

  SUBCASE("g_i = (2pi)^i z / i!") {
    for (int i = 1; i <= 5; ++i) {
      double expect = std::pow(2.0 * M_PI, i) * z / fact(i);
      CHECK(av.g(vec1(z), i)(0) == doctest::Approx(expect).epsilon(1e-10));
    }
  }

  SUBCASE("derivatives") {
    auto d1 = av.g_derivatives(vec1(z), 1, 1);
    CHECK(d1.matrix()(0, 0) == doctest::Approx(2.0 * M_PI).epsilon(1e-10));
    auto d2 = av.g_derivatives(vec1(z), 1, 2);
    CHECK(d2.at(0, {0, 0}) == doctest::Approx(0.0));
    CHECK_THROWS(av.g_derivatives(vec1(z), 4, 2));  // grading limit
    CHECK_THROWS(av.g(vec1(z), 6));
  }
}

TEST_CASE("scalar quadratic field") {
  // exact period map z / (1 - 2 pi eps^2 z)
  AveragedSet av(testutil::scalar_quadratic());
  const double z = 1.5;
  CHECK(av.g(vec1(z), 1)(0) == doctest::Approx(0.0));
  CHECK(av.g(vec1(z), 2)(0) ==
        doctest::Approx(2.0 * M_PI * z * z).epsilon(1e-10));
  CHECK(av.g(vec1(z), 3)(0) == doctest::Approx(0.0));
  CHECK(av.g(vec1(z), 4)(0) ==
        doctest::Approx(4.0 * M_PI * M_PI * z * z * z).epsilon(1e-10));
  CHECK(av.g(vec1(z), 5)(0) == doctest::Approx(0.0));

  auto d = av.g_derivatives(vec1(z), 2, 1);
  CHECK(d.matrix()(0, 0) == doctest::Approx(4.0 * M_PI * z).epsilon(1e-10));
  auto d2 = av.g_derivatives(vec1(z), 2, 2);
  CHECK(d2.at(0, {0, 0}) == doctest::Approx(4.0 * M_PI).epsilon(1e-10));
}

TEST_CASE("zero field: every g_i vanishes") {
  AveragedSet av(testutil::scalar_zero());
  for (int i = 1; i <= 5; ++i)
    CHECK(av.g(vec1(3.0), i)(0) == doctest::Approx(0.0));
}

TEST_CASE("linearity probe: g1 = (integral of A) z") {
  AveragedSet av(testutil::planar_linear_t());
  VectorXd z = vec2(0.7, -1.2);
  VectorXd g1 = av.g(z, 1);
  CHECK(g1(0) == doctest::Approx(2.0 * M_PI * z(1)).epsilon(1e-10));
  CHECK(g1(1) == doctest::Approx(M_PI * z(1)).epsilon(1e-10));

  auto d2 = av.g_derivatives(z, 1, 2);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(d2.at(c, {i, j}) == doctest::Approx(0.0));
}

TEST_CASE("oracle on the scalar linear field") {
  AveragedSet av(testutil::scalar_linear());
  const double z = 1.3;
  auto ghat = av.poincare_expansion_oracle(vec1(z));
  for (int i = 1; i <= 5; ++i) {
    double expect = std::pow(2.0 * M_PI, i) * z / fact(i);
    CHECK(ghat[i - 1](0) == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(av.displacement(vec1(z), 0.0).norm() == 0.0);
}

TEST_CASE("case A averaged fixture") {
  systems::CaseAFamily f;
  f.abar = 1.0;
  f.alpha = 0.0;
  f.beta = 1.0;
  f.gamma = 0.0;
  AveragedSet av(systems::case_a_standard_form(f));
  VectorXd g1 = av.g(vec2(1.0, 1.0), 1);
  CHECK(g1(0) == doctest::Approx(-2.0 * M_PI).epsilon(1e-9));
  CHECK(g1(1) == doctest::Approx(7.0 * M_PI).epsilon(1e-9));
}

TEST_CASE("case B order-1 closed form") {
  systems::CaseBFamily f;
  f.omega = 1.7;
  f.alpha = {0.4, 0.0, 0.0, 0.0, 0.0};
  f.gamma = {-0.3, 0.0, 0.0, 0.0, 0.0};
  AveragedSet av(systems::case_b_standard_form(f));
  const double om = f.omega, a1 = f.alpha[0], g1c = f.gamma[0];
  const double om3 = om * om * om;

  auto gen = testutil::rng(11);
  std::uniform_real_distribution<double> dr(0.2, 3.0), dz(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    double r = dr(gen), z = dz(gen);
    VectorXd g = av.g(vec2(r, z), 1);
    double e1 = M_PI * r * (a1 + g1c * (1.0 - om * om)) / om3;
    double e2 = -2.0 * M_PI * z * (g1c + a1 * (1.0 - om * om)) / om3;
    CHECK(g(0) == doctest::Approx(e1).epsilon(1e-9));
    CHECK(g(1) == doctest::Approx(e2).epsilon(1e-9));
  }
}

TEST_CASE("unperturbed case B family averages to zero at every order") {
  // The raw rhs is nonzero (the model's quadratic term survives the
  // scaling), but all its averages vanish when the parameter perturbation
  // is switched off.
  systems::CaseBFamily f;
  f.omega = 1.7;
  averaging::AveragedSet av(systems::case_b_standard_form(f));
  VectorXd z = vec2(0.9, -0.3);
  for (int i = 1; i <= 5; ++i) {
    VectorXd g = av.g(z, i);
    CHECK(std::abs(g(0)) <= 1e-12);
    CHECK(std::abs(g(1)) <= 1e-12);
  }
}

TEST_CASE("oracle equivalence on the case systems") {
  auto check_point = [](const systems::StandardFormSystem& sys,
                        const VectorXd& z) {
    AveragedSet av(sys);
    auto ghat = av.poincare_expansion_oracle(z);
    for (int i = 1; i <= 5; ++i) {
      VectorXd g = av.g(z, i);
      double tol = (i <= 3 ? 1e-6 : 1e-4);
      for (int c = 0; c < sys.dim; ++c) {
        CHECK(std::abs(g(c) - ghat[i - 1](c)) <=
              tol * (1.0 + std::abs(ghat[i - 1](c))));
      }
    }
  };

  systems::CaseAFamily fa;
  fa.abar = 1.0;
  fa.alpha = 0.2;
  fa.beta = 0.5;
  fa.gamma = -0.1;
  check_point(systems::case_a_standard_form(fa), vec2(1.1, 0.4));

  systems::CaseBFamily fb;
  fb.omega = 1.7;
  fb.alpha = {0.3, 0.1, 0.0, 0.05, 0.0};
  fb.beta = {0.2, 0.0, 0.1, 0.0, 0.0};
  fb.gamma = {-0.25, 0.07, 0.0, 0.0, 0.02};
  check_point(systems::case_b_standard_form(fb), vec2(0.8, -0.5));
}
