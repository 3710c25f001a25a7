#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "zerohopf/jets.hpp"

using namespace zerohopf::jets;

namespace {

SpecPtr eps_spec(int deg) { return JetSpec::make({deg}, deg); }

Jet random_jet(const SpecPtr& spec, std::mt19937& gen, double lo = -1.0,
               double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Jet j(spec);
  for (double& c : j.raw()) c = d(gen);
  return j;
}

double max_abs_diff(const Jet& a, const Jet& b) {
  double m = 0.0;
  for (int s = 0; s < a.spec()->num_slots(); ++s)
    m = std::max(m, std::abs(a.raw()[s] - b.raw()[s]));
  return m;
}

double max_abs(const Jet& a) {
  double m = 0.0;
  for (double c : a.raw()) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

TEST_CASE("addition") {
  auto sp = eps_spec(2);
  Jet e = Jet::variable(sp, 0, 0.0);

  Jet s = (1.0 + e) + (1.0 - e);
  CHECK(s.value() == doctest::Approx(2.0));
  CHECK(s.coeff(std::vector<int>{1}) == doctest::Approx(0.0));

  Jet x = Jet::variable(sp, 0, 0.0);
  Jet sum = x + Jet(sp);
  CHECK(max_abs_diff(sum, x) == 0.0);

  Jet a = e + e * e;        // ε + ε²
  Jet b = e * e;            // ε²
  Jet c = a + b;
  CHECK(c.coeff(std::vector<int>{1}) == doctest::Approx(1.0));
  CHECK(c.coeff(std::vector<int>{2}) == doctest::Approx(2.0));
}

TEST_CASE("multiplication and truncation") {
  auto sp2 = eps_spec(2);
  Jet e = Jet::variable(sp2, 0, 0.0);
  Jet p = (1.0 + e) * (1.0 - e);
  CHECK(p.value() == doctest::Approx(1.0));
  CHECK(p.coeff(std::vector<int>{1}) == doctest::Approx(0.0));
  CHECK(p.coeff(std::vector<int>{2}) == doctest::Approx(-1.0));

  auto spxy = JetSpec::make({2, 2}, 2);
  Jet x = Jet::variable(spxy, 0, 0.0);
  Jet y = Jet::variable(spxy, 1, 0.0);
  Jet q = (x + y) * (x + y);
  CHECK(q.coeff(std::vector<int>{2, 0}) == doctest::Approx(1.0));
  CHECK(q.coeff(std::vector<int>{1, 1}) == doctest::Approx(2.0));
  CHECK(q.coeff(std::vector<int>{0, 2}) == doctest::Approx(1.0));

  auto sp1 = eps_spec(1);
  Jet e1 = Jet::variable(sp1, 0, 0.0);
  CHECK(max_abs(e1 * e1) == 0.0);  // ε² truncated away
}

TEST_CASE("division") {
  auto sp3 = eps_spec(3);
  Jet e = Jet::variable(sp3, 0, 0.0);
  Jet g = Jet::constant(sp3, 1.0) / (1.0 - e);
  for (int k = 0; k <= 3; ++k)
    CHECK(g.coeff(std::vector<int>{k}) == doctest::Approx(1.0));  // geometric

  std::mt19937 gen(7);
  Jet a = random_jet(sp3, gen);
  a.raw()[0] = 1.5;  // unit
  Jet one = a / a;
  CHECK(one.value() == doctest::Approx(1.0));
  for (int k = 1; k <= 3; ++k)
    CHECK(one.coeff(std::vector<int>{k}) == doctest::Approx(0.0).epsilon(1e-12));

  auto sp2 = eps_spec(2);
  Jet e2 = Jet::variable(sp2, 0, 0.0);
  Jet h = e2 / (1.0 + e2);
  CHECK(h.value() == doctest::Approx(0.0));
  CHECK(h.coeff(std::vector<int>{1}) == doctest::Approx(1.0));
  CHECK(h.coeff(std::vector<int>{2}) == doctest::Approx(-1.0));

  Jet zero_const = e2;  // constant term 0
  CHECK_THROWS_AS((void)(Jet::constant(sp2, 1.0) / zero_const),
                  DivisionSingularityError);
}

TEST_CASE("elementary functions") {
  auto sp5 = eps_spec(5);
  Jet e = Jet::variable(sp5, 0, 0.0);

  Jet s = sin(e);
  CHECK(s.coeff(std::vector<int>{1}) == doctest::Approx(1.0));
  CHECK(s.coeff(std::vector<int>{3}) == doctest::Approx(-1.0 / 6.0));
  CHECK(s.coeff(std::vector<int>{5}) == doctest::Approx(1.0 / 120.0));
  CHECK(s.coeff(std::vector<int>{2}) == doctest::Approx(0.0));

  auto sp2 = eps_spec(2);
  Jet e2 = Jet::variable(sp2, 0, 0.0);
  Jet r = sqrt(1.0 + e2);
  CHECK(r.value() == doctest::Approx(1.0));
  CHECK(r.coeff(std::vector<int>{1}) == doctest::Approx(0.5));
  CHECK(r.coeff(std::vector<int>{2}) == doctest::Approx(-0.125));

  Jet c = cos(Jet(sp2));
  CHECK(c.value() == doctest::Approx(1.0));
  CHECK(max_abs(c - 1.0) == 0.0);

  CHECK_THROWS_AS(sqrt(Jet::constant(sp2, -1.0)), ElemDomainError);
  CHECK_THROWS_AS(reciprocal(Jet(sp2)), ElemDomainError);
}

TEST_CASE("ring axioms on random jets") {
  auto sp = JetSpec::make({3, 3}, 4);
  std::mt19937 gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    Jet a = random_jet(sp, gen);
    Jet b = random_jet(sp, gen);
    Jet c = random_jet(sp, gen);
    double scale = std::max({max_abs(a), max_abs(b), max_abs(c), 1.0});
    CHECK(max_abs_diff((a * b) * c, a * (b * c)) <= 1e-13 * scale * scale * scale * 10);
    CHECK(max_abs_diff(a * (b + c), a * b + a * c) <= 1e-13 * scale * scale * 10);
    CHECK(max_abs_diff(a * b, b * a) <= 1e-14 * scale * scale * 10);
  }
}

TEST_CASE("division round trip on random unit jets") {
  auto sp = JetSpec::make({3, 2}, 4);
  std::mt19937 gen(99);
  for (int trial = 0; trial < 50; ++trial) {
    Jet a = random_jet(sp, gen);
    Jet b = random_jet(sp, gen);
    b.raw()[0] = (b.raw()[0] < 0 ? -1.0 : 1.0) * (1.0 + std::abs(b.raw()[0]));
    Jet back = (a / b) * b;
    CHECK(max_abs_diff(back, a) <= 1e-12 * std::max(1.0, max_abs(a)) * 50);
  }
}

TEST_CASE("sin^2 + cos^2 = 1") {
  auto sp = JetSpec::make({4, 4}, 5);
  std::mt19937 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    Jet a = random_jet(sp, gen, -2.0, 2.0);
    Jet pyth = sin(a) * sin(a) + cos(a) * cos(a);
    CHECK(max_abs_diff(pyth, Jet::constant(sp, 1.0)) <= 1e-12 * 100);
  }
}

TEST_CASE("derivative and shift_down") {
  auto sp = JetSpec::make({3, 3}, 4);
  Jet x = Jet::variable(sp, 0, 0.0);
  Jet y = Jet::variable(sp, 1, 0.0);
  Jet f = x * x * y + 2.0 * y;

  Jet fx = f.derivative(0);  // 2xy
  CHECK(fx.coeff(std::vector<int>{1, 1}) == doctest::Approx(2.0));
  CHECK(fx.value() == doctest::Approx(0.0));

  Jet g = f.shift_down(1);  // x² + 2
  CHECK(g.value() == doctest::Approx(2.0));
  CHECK(g.coeff(std::vector<int>{2, 0}) == doctest::Approx(1.0));

  Jet bad = f + 1.0;  // nonzero at y-degree 0
  CHECK_THROWS_AS(bad.shift_down(1), DivisionSingularityError);
}

TEST_CASE("extract_tensor") {
  auto sp = JetSpec::make({3, 3}, 4);
  Jet x = Jet::variable(sp, 0, 0.0);
  Jet y = Jet::variable(sp, 1, 0.0);

  std::vector<int> vars{0, 1};

  // degree-3 monomial x²y: all second derivatives vanish at the origin
  auto t2 = extract_tensor(x * x * y, vars, 2);
  for (double v : t2) CHECK(v == doctest::Approx(0.0));

  // x²: (x,x) entry is 2
  auto t2b = extract_tensor(x * x, vars, 2);
  CHECK(t2b[0] == doctest::Approx(2.0));  // (0,0)
  CHECK(t2b[1] == doctest::Approx(0.0));
  CHECK(t2b[3] == doctest::Approx(0.0));

  // mixed: ∂²(xy) = 1 on the off-diagonal
  auto t2c = extract_tensor(x * y, vars, 2);
  CHECK(t2c[1] == doctest::Approx(1.0));
  CHECK(t2c[2] == doctest::Approx(1.0));
  CHECK(t2c[0] == doctest::Approx(0.0));

  // order-1 tensor of a linear germ
  auto t1 = extract_tensor(x, std::vector<int>{0}, 1);
  CHECK(t1[0] == doctest::Approx(1.0));

  CHECK_THROWS(extract_tensor(x, std::vector<int>{0}, 9));
}

TEST_CASE("spec mismatch is rejected") {
  auto sp1 = eps_spec(2);
  auto sp2 = eps_spec(3);
  Jet a(sp1), b(sp2);
  CHECK_THROWS_AS((void)(a + b), SpecMismatchError);
  CHECK_THROWS_AS((void)(a * b), SpecMismatchError);
}
