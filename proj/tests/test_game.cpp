#include "test_support.hpp"

#include <aggne/game.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>

using namespace aggne;
using Catch::Matchers::WithinAbs;
using test_support::make_game;

TEST_CASE("aggregate sums strategy blocks") {
  Eigen::MatrixXd x(2, 2);
  x.col(0) << 1.0, 2.0;
  x.col(1) << 3.0, 4.0;
  const Eigen::VectorXd s = aggregate(x);
  REQUIRE(s[0] == 4.0);
  REQUIRE(s[1] == 6.0);

  Eigen::MatrixXd single(3, 1);
  single.col(0) << 5.0, 5.0, 5.0;
  REQUIRE((aggregate(single) - single.col(0)).norm() == 0.0);

  Eigen::MatrixXd cancel(1, 3);
  cancel << 1.0, -1.0, 0.0;
  REQUIRE(aggregate(cancel)[0] == 0.0);
}

TEST_CASE("partial gradient arithmetic") {
  const CournotGame game = make_game({{3.0}, {3.0}}, {10.0}, {1.0}, 2.0, 10.0);
  Eigen::VectorXd x(1), z(1);

  x << 2.0;
  z << 4.0;
  REQUIRE_THAT(game.partial_gradient(0, x, z)[0], WithinAbs(-1.0, 1e-15));

  // all terms cancel when c == d and the operating point is zero
  const CournotGame flat = make_game({{10.0}}, {10.0}, {0.7}, -1.0, 1.0);
  x << 0.0;
  z << 0.0;
  REQUIRE(flat.partial_gradient(0, x, z)[0] == 0.0);

  x << 7.0 / 3.0;
  z << 14.0 / 3.0;
  REQUIRE_THAT(game.partial_gradient(0, x, z)[0], WithinAbs(0.0, 1e-14));

  Eigen::VectorXd bad(2);
  bad << 1.0, 2.0;
  REQUIRE_THROWS_AS(game.partial_gradient(0, bad, z), std::invalid_argument);
  REQUIRE_THROWS_AS(pseudo_gradient(game, Eigen::MatrixXd::Zero(1, 3)), std::invalid_argument);
  REQUIRE_THROWS_AS(pseudo_gradient(game, Eigen::MatrixXd::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("pseudo gradient vanishes at the interior equilibrium of the symmetric pair") {
  const CournotGame game = make_game({{3.0}, {3.0}}, {10.0}, {1.0}, 2.0, 10.0);

  // independent oracle: solve the stationary linear system directly
  const Eigen::VectorXd x_lin = test_support::interior_ne_single_market(game);
  REQUIRE_THAT(x_lin[0], WithinAbs(7.0 / 3.0, 1e-12));
  REQUIRE_THAT(x_lin[1], WithinAbs(7.0 / 3.0, 1e-12));

  Eigen::MatrixXd profile(1, 2);
  profile << x_lin[0], x_lin[1];
  REQUIRE(pseudo_gradient(game, profile).norm() < 1e-12);

  // evaluating twice gives identical output
  REQUIRE(pseudo_gradient(game, profile) == pseudo_gradient(game, profile));
}

TEST_CASE("pseudo gradient at the asymmetric boundary equilibrium") {
  const CournotGame game = make_game({{3.0}, {9.0}}, {10.0}, {1.0}, 2.0, 10.0);
  Eigen::MatrixXd profile(1, 2);
  profile << 2.5, 2.0;
  const Eigen::MatrixXd phi = pseudo_gradient(game, profile);
  REQUIRE_THAT(phi(0, 0), WithinAbs(0.0, 1e-14));
  REQUIRE_THAT(phi(0, 1), WithinAbs(5.5, 1e-14));
}

TEST_CASE("sample gradient is exact with noise disabled") {
  const CournotGame game = make_game({{3.0}, {4.0}}, {10.0}, {1.0}, 2.0, 10.0, false);
  RngStream rng(3);
  Eigen::VectorXd x(1), z(1);
  x << 5.0;
  z << 9.0;
  REQUIRE(game.sample_gradient(0, x, z, rng) == game.partial_gradient(0, x, z));

  // sampling against an explicit noise model matches a game that owns it
  const CournotGame noisy = make_game({{3.0}, {4.0}}, {10.0}, {1.0}, 2.0, 10.0, true);
  RngStream a(11), b(11);
  const Eigen::VectorXd via_free = sample_gradient(game, noisy.noise(), a, 0, x, z);
  REQUIRE(via_free == noisy.sample_gradient(0, x, z, b));
  REQUIRE(via_free != game.partial_gradient(0, x, z));
}

TEST_CASE("sample gradient noise statistics") {
  const CournotGame game = make_game({{3.0}}, {10.0}, {1.0}, 2.0, 10.0, true);
  const GameConstants gc = game.constants();

  // uniform noise on [-a, a] has variance a^2 / 3, summed over components
  REQUIRE_THAT(gc.nu_i[0] * gc.nu_i[0], WithinAbs(109.0 / 192.0, 1e-15));
  REQUIRE_THAT(gc.nu_sq, WithinAbs(109.0 / 192.0, 1e-15));

  Eigen::VectorXd x(1), z(1);
  x << 6.0;
  z << 6.0;
  const Eigen::VectorXd exact = game.partial_gradient(0, x, z);
  RngStream rng = RngStream(77).fork(0);
  const long m = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
  double m2 = 0.0, m4 = 0.0;
  for (long s = 0; s < m; ++s) {
    const Eigen::VectorXd diff = game.sample_gradient(0, x, z, rng) - exact;
    mean += diff;
    const double sq = diff.squaredNorm();
    m2 += sq;
    m4 += sq * sq;
  }
  mean /= static_cast<double>(m);
  m2 /= static_cast<double>(m);
  m4 /= static_cast<double>(m);

  REQUIRE(mean.norm() <= 3.0 * gc.nu_i[0] / std::sqrt(static_cast<double>(m)));
  const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(m));
  REQUIRE(m2 <= gc.nu_sq + 4.0 * se);
}

TEST_CASE("operator constants match an independent eigensolve on the small instance") {
  const CournotGame game = make_game({{3.0}, {3.0}}, {10.0}, {1.0}, 2.0, 10.0);
  const GameConstants gc = game.constants();
  REQUIRE_THAT(gc.mu, WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(gc.lip, WithinAbs(3.0, 1e-15));

  // oracle: eigenvalues of the stacked affine operator's Jacobian
  Eigen::MatrixXd jac(2, 2);
  jac << 2.0, 1.0, 1.0, 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  REQUIRE_THAT(eig.eigenvalues().minCoeff(), WithinAbs(gc.mu, 1e-12));
  REQUIRE_THAT(eig.eigenvalues().maxCoeff(), WithinAbs(gc.lip, 1e-12));
}

TEST_CASE("operator constants on the default instance") {
  const CournotGame game = random_instance(2);
  const GameConstants gc = game.constants();
  REQUIRE(gc.mu >= 0.5);
  REQUIRE(gc.lip <= 21.0);
  REQUIRE(gc.lip >= gc.mu);
  REQUIRE_THAT(gc.m_h, WithinAbs(gc.m_i.sum(), 1e-12));

  // norm bound over the box via corner enumeration
  for (int i = 0; i < game.n_players(); ++i) {
    const auto& f = game.firms()[static_cast<std::size_t>(i)];
    REQUIRE_THAT(gc.m_i[i], WithinAbs(test_support::max_corner_norm(f.lower, f.upper), 1e-12));
  }
  REQUIRE_THAT(gc.m_i[0], WithinAbs(10.0 * std::sqrt(3.0), 1e-12));
}

TEST_CASE("strategy norm bound handles sign-mixed boxes") {
  const CournotGame game = make_game({{1.0, 1.0}}, {5.0, 5.0}, {1.0, 1.0}, 0.0, 1.0);
  // replace the box with a sign-mixed one through explicit construction
  std::vector<FirmParams> firms = game.firms();
  firms[0].lower = Eigen::Vector2d(-3.0, 1.0);
  firms[0].upper = Eigen::Vector2d(2.0, 4.0);
  MarketParams market = game.market();
  const CournotGame mixed(firms, market, default_noise(firms, market, false));
  const GameConstants gc = mixed.constants();
  REQUIRE_THAT(gc.m_i[0], WithinAbs(test_support::max_corner_norm(firms[0].lower, firms[0].upper), 1e-12));
  REQUIRE_THAT(gc.m_i[0], WithinAbs(5.0, 1e-12));
}

TEST_CASE("random instance draws from the documented ranges deterministically") {
  const CournotGame a = random_instance(9);
  const CournotGame b = random_instance(9);
  REQUIRE(a.n_players() == 20);
  REQUIRE(a.n_markets() == 3);
  REQUIRE(a.market().d == b.market().d);
  REQUIRE(a.market().b == b.market().b);
  for (int i = 0; i < a.n_players(); ++i) {
    const auto& fa = a.firms()[static_cast<std::size_t>(i)];
    const auto& fb = b.firms()[static_cast<std::size_t>(i)];
    REQUIRE(fa.c == fb.c);
    REQUIRE((fa.c.array() >= 3.0).all());
    REQUIRE((fa.c.array() <= 4.0).all());
    REQUIRE((fa.lower.array() == 2.0).all());
    REQUIRE((fa.upper.array() == 10.0).all());
  }
  REQUIRE((a.market().d.array() >= 10.0).all());
  REQUIRE((a.market().d.array() <= 10.5).all());
  REQUIRE((a.market().b.array() >= 0.5).all());
  REQUIRE((a.market().b.array() <= 1.0).all());
  REQUIRE(a.noise().cost_halfwidth.col(0) == a.firms()[0].c / 8.0);
  REQUIRE(a.noise().price_halfwidth == a.market().d / 8.0);

  const CournotGame c = random_instance(10);
  REQUIRE(c.market().d != a.market().d);
}

TEST_CASE("pseudo gradient is strongly monotone, lipschitz, and affine") {
  const CournotGame game = random_instance(4);
  const GameConstants gc = game.constants();
  const int n = game.n_players();
  const int m = game.n_markets();
  RngStream rng(55);

  auto random_profile = [&]() {
    Eigen::MatrixXd p(m, n);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < m; ++l) p(l, i) = rng.uniform(2.0, 10.0);
    return p;
  };

  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(m, n);
  const Eigen::MatrixXd phi0 = pseudo_gradient(game, zero);
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::MatrixXd x = random_profile();
    const Eigen::MatrixXd y = random_profile();
    const Eigen::MatrixXd dphi = pseudo_gradient(game, x) - pseudo_gradient(game, y);
    const Eigen::MatrixXd dx = x - y;
    REQUIRE((dphi.array() * dx.array()).sum() >= gc.mu * dx.squaredNorm() - 1e-10);
    REQUIRE(dphi.norm() <= gc.lip * dx.norm() + 1e-10);

    // additivity of the linear part
    const Eigen::MatrixXd lhs = pseudo_gradient(game, x + y) - phi0;
    const Eigen::MatrixXd rhs = (pseudo_gradient(game, x) - phi0) + (pseudo_gradient(game, y) - phi0);
    REQUIRE((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("game serialization round trips") {
  const CournotGame game = random_instance(6, 5, 2);
  const nlohmann::json j = game_to_json(game);
  REQUIRE(j.at("n_players") == 5);
  REQUIRE(j.at("n_markets") == 2);
  REQUIRE(j.at("firms").size() == 5);
  REQUIRE(j.at("firms")[0].contains("c"));
  REQUIRE(j.at("firms")[0].contains("lower"));
  REQUIRE(j.at("firms")[0].contains("upper"));
  REQUIRE(j.at("market").contains("d"));
  REQUIRE(j.at("market").contains("b"));
  REQUIRE(j.at("noise").at("enabled").get<bool>());

  const CournotGame back = game_from_json(j);
  REQUIRE(game_to_json(back) == j);
  REQUIRE(back.market().d == game.market().d);
  REQUIRE(back.firms()[3].c == game.firms()[3].c);
}

TEST_CASE("construction rejects inconsistent instances") {
  REQUIRE_THROWS_AS(make_game({{3.0, 4.0}}, {10.0}, {1.0}, 2.0, 10.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_game({{-1.0}}, {10.0}, {1.0}, 2.0, 10.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_game({{3.0}}, {10.0}, {-1.0}, 2.0, 10.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_game({{3.0}}, {10.0}, {1.0}, 5.0, 5.0), std::invalid_argument);
}
