#include <doctest.h>

#include <cmath>

#include "crone/plant.hpp"
#include "crone/reset_elements.hpp"

using namespace crone;
using Complex = std::complex<double>;

namespace {
const ResetKind kAllKinds[] = {ResetKind::Integrator, ResetKind::Lag, ResetKind::FirstOrderFilter, ResetKind::Lead};

CroneController design(Generation g) { return synthesize(reference_spec(g), stage_plant()); }

ResetStrategy strat(ResetKind k, double gamma, double p) { return ResetStrategy{k, gamma, p}; }

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

StateSpaced first_order(double a, double b, double c, double d) {
  return StateSpaced(MatrixX<double>::Constant(1, 1, a), MatrixX<double>::Constant(1, 1, b),
                     MatrixX<double>::Constant(1, 1, c), MatrixX<double>::Constant(1, 1, d));
}
}  // namespace

TEST_CASE("strategy names round trip") {
  for (auto k : kAllKinds) CHECK(reset_kind_from_string(to_string(k)) == k);
  CHECK(reset_kind_from_string("first_order_filter") == ResetKind::FirstOrderFilter);
  CHECK_THROWS_AS(reset_kind_from_string("bogus"), ParameterError);
}

TEST_CASE("strategy parameters are confined to the unit interval") {
  CHECK_NOTHROW(strat(ResetKind::Lag, 0.0, 1.0).validate());
  CHECK_THROWS_AS(strat(ResetKind::Lag, -0.1, 0.5).validate(), ParameterError);
  CHECK_THROWS_AS(strat(ResetKind::Lag, 0.5, 1.5).validate(), ParameterError);
  CHECK_THROWS_AS(strat(ResetKind::Lag, NAN, 0.5).validate(), ParameterError);
}

TEST_CASE("reset factors are the printed first-order elements") {
  const auto c = design(Generation::First);
  const auto& s = c.spec;

  const auto integ = realize_reset_factor(decompose(c, ResetKind::Integrator).sigma_r);
  CHECK(integ.states() == 1);
  CHECK(integ.A()(0, 0) == 0.0);
  CHECK(integ.C()(0, 0) * integ.B()(0, 0) == doctest::Approx(s.wi).epsilon(1e-14));
  CHECK(integ.D()(0, 0) == 0.0);

  const auto lag = realize_reset_factor(decompose(c, ResetKind::Lag).sigma_r);
  CHECK(lag.states() == 1);
  CHECK(lag.A()(0, 0) == doctest::Approx(-s.wb).epsilon(1e-14));
  CHECK(lag.D()(0, 0) == doctest::Approx(s.wb / s.wh).epsilon(1e-14));
  for (double w : {1.0, s.wb, s.wcg, s.wh}) {
    const Complex expected = Complex(1, w / s.wh) / Complex(1, w / s.wb);
    CHECK(rel(evaluate_at(lag, w), expected) < 1e-14);
  }

  const auto fof = realize_reset_factor(decompose(c, ResetKind::FirstOrderFilter).sigma_r);
  CHECK(fof.A()(0, 0) == doctest::Approx(-s.wb).epsilon(1e-14));
  CHECK(fof.D()(0, 0) == 0.0);
  CHECK(rel(evaluate_at(fof, s.wb), Complex(1, 0) / Complex(1, 1)) < 1e-14);

  // Observable form: input enters through B, output reads the state directly.
  CHECK(lag.C()(0, 0) == 1.0);
}

TEST_CASE("decompositions preserve the controller response") {
  for (auto g : {Generation::First, Generation::Second}) {
    const auto c = design(g);
    const auto full = c.transfer();
    for (auto k : kAllKinds) {
      const auto d = decompose(c, k);
      CAPTURE(static_cast<int>(g));
      CAPTURE(to_string(k));
      double worst = 0.0;
      for (double w : FrequencyGridd::log_count(0.1, 1e5, 80))
        worst = std::max(worst, rel(d.sigma_r.exact(w) * d.sigma_nr.exact(w), full.exact(w)));
      CHECK(worst < 1e-9);
    }
  }
}

TEST_CASE("integrator reset needs an integrator") {
  auto spec = reference_spec(Generation::First);
  spec.ni = 0;
  const auto c = synthesize(spec, stage_plant());
  CHECK_THROWS_AS(decompose(c, ResetKind::Integrator), DecompositionError);
  CHECK_NOTHROW(decompose(c, ResetKind::Lag));
}

TEST_CASE("block assembly follows the series structure") {
  const auto r = first_order(-2.0, 3.0, 5.0, 7.0);
  const StateSpaced nr((MatrixX<double>(2, 2) << -1, 2, -3, -4).finished(), (MatrixX<double>(2, 1) << 1, -1).finished(),
                       (MatrixX<double>(1, 2) << 0.5, 2).finished(), MatrixX<double>::Constant(1, 1, 0.25));
  const auto m = assemble(r, nr, {ResetKind::Lag, 0.3, 0.0});
  REQUIRE(m.states() == 3);
  CHECK(m.A(0, 0) == -2.0);
  CHECK(m.A.block(0, 1, 1, 2).isZero(0.0));
  CHECK(m.A.block(1, 0, 2, 1) == nr.B() * r.C());
  CHECK(m.A.block(1, 1, 2, 2) == nr.A());
  CHECK(m.B(0, 0) == 3.0);
  CHECK(m.B.block(1, 0, 2, 1) == nr.B() * r.D());
  CHECK(m.C(0, 0) == nr.D()(0, 0) * r.C()(0, 0));
  CHECK(m.C.block(0, 1, 1, 2) == nr.C());
  CHECK(m.D(0, 0) == nr.D()(0, 0) * r.D()(0, 0));
  CHECK(m.A_rho.isApprox((Eigen::Vector3d(0.3, 1, 1)).asDiagonal().toDenseMatrix(), 0.0));
  CHECK(m.reset_indices == std::vector<Eigen::Index>{0});
  CHECK_FALSE(m.identity_jump());

  for (double w : FrequencyGridd::log_count(0.1, 100.0, 10))
    CHECK(rel(evaluate_at(m.base(), w), evaluate_at(r, w) * evaluate_at(nr, w)) < 1e-10);

  CHECK(assemble(r, nr, strat(ResetKind::Lag, 1.0, 0.0)).identity_jump());
  CHECK_THROWS_AS(assemble(r, nr, strat(ResetKind::Lag, 2.0, 0.0)), ParameterError);
  const StateSpaced mimo(MatrixX<double>::Zero(1, 1), MatrixX<double>::Ones(1, 2), MatrixX<double>::Ones(1, 1),
                         MatrixX<double>::Zero(1, 2));
  CHECK_THROWS_AS(assemble(r, mimo, strat(ResetKind::Lag, 0.5, 0.0)), ParameterError);
}

TEST_CASE("jump map has gamma on reset states and ones elsewhere") {
  const auto c = design(Generation::First);
  for (double gamma : {0.0, 0.4, 1.0}) {
    const auto m = build_reset_controller(c, {ResetKind::Lag, gamma, 0.0});
    const Eigen::Index k = m.states() - 1;
    CHECK(m.A_rho.isDiagonal(0.0));
    CHECK(m.A_rho(0, 0) == gamma);
    CHECK(m.A_rho.diagonal().tail(k).isOnes(0.0));
    CHECK(m.identity_jump() == (gamma == 1.0));
  }
}

TEST_CASE("convex combination") {
  const auto r = first_order(-2.0, 3.0, 5.0, 0.0);
  const auto nr = first_order(-1.0, 1.0, 1.0, 0.5);
  const auto core = assemble(r, nr, {ResetKind::FirstOrderFilter, 0.2, 0.0});

  const auto same = convex_combine(core, 0.0);
  CHECK(same.A == core.A);
  CHECK(same.C == core.C);
  CHECK(same.A_rho == core.A_rho);

  const auto linear = convex_combine(core, 1.0);
  CHECK(linear.identity_jump());
  CHECK(linear.A == core.A);

  const double p = 0.3;
  const auto mix = convex_combine(core, p);
  REQUIRE(mix.states() == 3);
  CHECK(mix.augmented());
  CHECK(mix.n_reset_block == 2);
  CHECK(mix.A(0, 0) == -2.0);
  CHECK(mix.A(1, 1) == -2.0);
  CHECK(mix.A(0, 1) == 0.0);
  CHECK(mix.A(1, 0) == 0.0);
  CHECK(mix.B(0, 0) == 3.0);
  CHECK(mix.B(1, 0) == 3.0);
  CHECK(mix.A(2, 0) == doctest::Approx(p * 5.0));
  CHECK(mix.A(2, 1) == doctest::Approx((1 - p) * 5.0));
  CHECK(mix.A_rho(0, 0) == 1.0);
  CHECK(mix.A_rho(1, 1) == 0.2);
  CHECK(mix.A_rho(2, 2) == 1.0);
  CHECK(mix.reset_indices == std::vector<Eigen::Index>{1});
  CHECK(mix.core().A == core.A);

  for (double w : FrequencyGridd::log_count(0.01, 100.0, 12))
    CHECK(rel(evaluate_at(mix.base(), w), evaluate_at(core.base(), w)) < 1e-12);

  CHECK_THROWS_AS(convex_combine(core, 1.5), ParameterError);
  CHECK_THROWS_AS(convex_combine(mix, 0.5), ParameterError);
}

TEST_CASE("base linear response equals the CRONE controller for every strategy") {
  for (auto g : {Generation::First, Generation::Second}) {
    const auto c = design(g);
    const auto reference = c.transfer().approximated(c.spec.N);
    for (auto k : kAllKinds)
      for (double p : {0.0, 0.5, 1.0}) {
        const auto m = build_reset_controller(c, {k, 0.5, p});
        double worst = 0.0;
        for (double w : FrequencyGridd::log_count(0.1, 1e5, 60))
          worst = std::max(worst, rel(evaluate_at(m.base(), w), reference.exact(w)));
        CAPTURE(static_cast<int>(g));
        CAPTURE(to_string(k));
        CAPTURE(p);
        CHECK(worst < 1e-9);
      }
  }
}

TEST_CASE("linear and isolated models") {
  const auto c = design(Generation::First);
  const auto ss = c.realize();
  const auto lin = linear_model(ss);
  CHECK(lin.identity_jump());
  CHECK(lin.reset_indices.empty());
  CHECK(lin.p == 1.0);
  for (double w : FrequencyGridd::log_count(1.0, 1e4, 20)) CHECK(rel(evaluate_at(lin.base(), w), evaluate_at(ss, w)) < 1e-9);

  const auto& s = c.spec;
  const auto clegg = isolated_element(ResetKind::Integrator, s.wb, s.wh, s.wi, {ResetKind::Integrator, 0.0, 0.0});
  CHECK(clegg.states() == 1);
  CHECK(rel(evaluate_at(clegg.base(), 2.0), Complex(0, -s.wi / 2.0)) < 1e-14);
  CHECK(clegg.A_rho(0, 0) == 0.0);
}
