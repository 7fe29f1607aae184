#pragma once

#include "mirror.hpp"
#include "rng.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aggne {

// Inverse-demand parameters shared by all players: the unit price on market l
// is d_l - b_l * (total supply on l), perturbed by zero-mean noise.
struct MarketParams {
  Eigen::VectorXd d;  // price intercepts, positive
  Eigen::VectorXd b;  // price slopes, positive
};

// Per-firm linear production cost coefficients and capacity box.
struct FirmParams {
  Eigen::VectorXd c;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// Additive uniform gradient noise: per-firm cost perturbations plus
// per-market price perturbations, both centred at zero.
struct NoiseModel {
  Eigen::MatrixXd cost_halfwidth;   // markets x players, column i for firm i
  Eigen::VectorXd price_halfwidth;  // one entry per market
  bool enabled = true;

  // Perturbs a gradient in place: cost components first, then price
  // components. Draws nothing when disabled.
  void apply(Eigen::VectorXd& g, int player, RngStream& rng) const {
    if (!enabled) return;
    const auto col = cost_halfwidth.col(player);
    for (Eigen::Index l = 0; l < g.size(); ++l) g[l] += rng.uniform(-col[l], col[l]);
    for (Eigen::Index l = 0; l < g.size(); ++l)
      g[l] -= rng.uniform(-price_halfwidth[l], price_halfwidth[l]);
  }
};

// Constants of the game operator consumed by step-size schedules and the
// theoretical bound evaluators.
struct GameConstants {
  double mu = 0.0;          // strong monotonicity modulus of the pseudo-gradient
  double lip = 0.0;         // Lipschitz constant of the pseudo-gradient
  Eigen::VectorXd lip_f;    // per-player Lipschitz constants of F_i in the aggregate
  Eigen::VectorXd m_i;      // per-player strategy norm bounds
  double m_h = 0.0;         // sum of the m_i
  Eigen::VectorXd nu_i;     // per-player gradient-noise standard deviation bounds
  double nu_sq = 0.0;       // total gradient-noise variance bound
  Eigen::VectorXd phi_max;  // per-player upper bounds on ||phi_i|| over the box
};

// Linear-quadratic competition over several markets. Firm i picks a
// production vector x_i inside its capacity box and pays
//   (c_i + xi_i)' x_i - (d + zeta - B * S)' x_i
// where S is the market-wise total production. Immutable after construction
// and safe to share across concurrently running trials.
class CournotGame {
 public:
  CournotGame(std::vector<FirmParams> firms, MarketParams market, NoiseModel noise)
      : firms_(std::move(firms)), market_(std::move(market)), noise_(std::move(noise)) {
    if (firms_.empty()) throw std::invalid_argument("CournotGame: needs at least one firm");
    const Eigen::Index m = market_.d.size();
    if (m == 0 || market_.b.size() != m)
      throw std::invalid_argument("CournotGame: inconsistent market parameter sizes");
    if ((market_.d.array() <= 0.0).any() || (market_.b.array() <= 0.0).any())
      throw std::invalid_argument("CournotGame: market parameters must be positive");
    for (const auto& f : firms_) {
      if (f.c.size() != m || f.lower.size() != m || f.upper.size() != m)
        throw std::invalid_argument("CournotGame: firm parameter sizes must match market count");
      if ((f.c.array() <= 0.0).any())
        throw std::invalid_argument("CournotGame: cost coefficients must be positive");
      if (((f.upper - f.lower).array() <= 0.0).any())
        throw std::invalid_argument("CournotGame: requires lower < upper componentwise");
    }
    const auto n = static_cast<Eigen::Index>(firms_.size());
    if (noise_.cost_halfwidth.rows() != m || noise_.cost_halfwidth.cols() != n ||
        noise_.price_halfwidth.size() != m)
      throw std::invalid_argument("CournotGame: noise halfwidth sizes are inconsistent");
    if ((noise_.cost_halfwidth.array() < 0.0).any() ||
        (noise_.price_halfwidth.array() < 0.0).any())
      throw std::invalid_argument("CournotGame: noise halfwidths must be nonnegative");
  }

  int n_players() const { return static_cast<int>(firms_.size()); }
  int n_markets() const { return static_cast<int>(market_.d.size()); }

  const std::vector<FirmParams>& firms() const { return firms_; }
  const MarketParams& market() const { return market_; }
  const NoiseModel& noise() const { return noise_; }

  BoxSet box(int i) const { return BoxSet(firms_.at(i).lower, firms_.at(i).upper); }

  // F_i(x_i, z) = c_i - d + B (z + x_i), the partial gradient of firm i's
  // expected cost evaluated at aggregate estimate z.
  Eigen::VectorXd partial_gradient(int i, const Eigen::Ref<const Eigen::VectorXd>& x_i,
                                   const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (x_i.size() != n_markets() || z.size() != n_markets())
      throw std::invalid_argument("partial_gradient: dimension mismatch");
    const FirmParams& f = firms_[static_cast<std::size_t>(i)];
    return f.c - market_.d + market_.b.cwiseProduct(z + x_i);
  }

  // Unbiased sample of F_i under the instance's own noise model. With noise
  // disabled the exact gradient is returned and the stream is left untouched.
  Eigen::VectorXd sample_gradient(int i, const Eigen::Ref<const Eigen::VectorXd>& x_i,
                                  const Eigen::Ref<const Eigen::VectorXd>& z,
                                  RngStream& rng) const {
    Eigen::VectorXd g = partial_gradient(i, x_i, z);
    noise_.apply(g, i, rng);
    return g;
  }

  // The operator x -> phi(x) is affine with symmetric positive definite
  // Jacobian whose eigenvalues are the slopes b_l scaled by {1, N+1}, which
  // pins mu and lip exactly. Norm bounds over the box follow from
  // sign-directed corner selection per component (see phi_max).
  GameConstants constants() const {
    const int n = n_players();
    const int m = n_markets();
    GameConstants gc;
    gc.mu = market_.b.minCoeff();
    gc.lip = (n + 1) * market_.b.maxCoeff();
    gc.lip_f = Eigen::VectorXd::Constant(n, market_.b.maxCoeff());
    gc.m_i.resize(n);
    gc.nu_i.resize(n);
    gc.phi_max.resize(n);

    Eigen::VectorXd sum_lower = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sum_upper = Eigen::VectorXd::Zero(m);
    for (const auto& f : firms_) {
      sum_lower += f.lower;
      sum_upper += f.upper;
    }

    for (int i = 0; i < n; ++i) {
      const FirmParams& f = firms_[static_cast<std::size_t>(i)];
      gc.m_i[i] = f.lower.cwiseAbs().cwiseMax(f.upper.cwiseAbs()).norm();

      double var = 0.0;
      if (noise_.enabled) {
        for (int l = 0; l < m; ++l) {
          const double cw = noise_.cost_halfwidth(l, i);
          const double pw = noise_.price_halfwidth[l];
          var += (cw * cw + pw * pw) / 3.0;
        }
      }
      gc.nu_i[i] = std::sqrt(var);

      double norm_sq = 0.0;
      for (int l = 0; l < m; ++l) {
        const double base = f.c[l] - market_.d[l];
        const double t_lo = sum_lower[l] + f.lower[l];
        const double t_hi = sum_upper[l] + f.upper[l];
        const double worst =
            std::max(std::abs(base + market_.b[l] * t_lo), std::abs(base + market_.b[l] * t_hi));
        norm_sq += worst * worst;
      }
      gc.phi_max[i] = std::sqrt(norm_sq);
    }
    gc.m_h = gc.m_i.sum();
    gc.nu_sq = gc.nu_i.squaredNorm();
    return gc;
  }

 private:
  std::vector<FirmParams> firms_;
  MarketParams market_;
  NoiseModel noise_;
};

// Requirements on a pluggable game: box-constrained players, an exact partial
// gradient against an aggregate estimate, a sampling oracle, and the operator
// constants. CournotGame is the shipped model.
template <typename G>
concept aggregative_game = requires(const G& g, int i, const Eigen::VectorXd& v, RngStream& rng) {
  { g.n_players() } -> std::convertible_to<int>;
  { g.n_markets() } -> std::convertible_to<int>;
  { g.box(i) } -> std::convertible_to<BoxSet>;
  { g.partial_gradient(i, v, v) } -> std::convertible_to<Eigen::VectorXd>;
  { g.sample_gradient(i, v, v, rng) } -> std::convertible_to<Eigen::VectorXd>;
  { g.constants() } -> std::convertible_to<GameConstants>;
};

static_assert(aggregative_game<CournotGame>);

// Strategy profiles are stored one player per column (markets x players), so
// the blockwise sum over players is a row-wise reduction.
inline Eigen::VectorXd aggregate(const Eigen::MatrixXd& profile) {
  if (profile.size() == 0) throw std::invalid_argument("aggregate: empty profile");
  return profile.rowwise().sum();
}

template <aggregative_game G>
Eigen::MatrixXd pseudo_gradient(const G& game, const Eigen::MatrixXd& profile) {
  if (profile.rows() != game.n_markets() || profile.cols() != game.n_players())
    throw std::invalid_argument("pseudo_gradient: profile does not match game dimensions");
  const Eigen::VectorXd agg = aggregate(profile);
  Eigen::MatrixXd out(profile.rows(), profile.cols());
  for (int i = 0; i < game.n_players(); ++i)
    out.col(i) = game.partial_gradient(i, profile.col(i), agg);
  return out;
}

inline Eigen::VectorXd partial_gradient(const CournotGame& game, int i,
                                        const Eigen::Ref<const Eigen::VectorXd>& x_i,
                                        const Eigen::Ref<const Eigen::VectorXd>& z) {
  return game.partial_gradient(i, x_i, z);
}

// Sampling against an explicit noise model; the member function uses the
// game's own.
inline Eigen::VectorXd sample_gradient(const CournotGame& game, const NoiseModel& noise,
                                       RngStream& rng, int i,
                                       const Eigen::Ref<const Eigen::VectorXd>& x_i,
                                       const Eigen::Ref<const Eigen::VectorXd>& z) {
  Eigen::VectorXd g = game.partial_gradient(i, x_i, z);
  noise.apply(g, i, rng);
  return g;
}

inline GameConstants game_constants(const CournotGame& game) { return game.constants(); }

// Noise halfwidths follow the instance parameters: an eighth of the cost
// coefficients and price intercepts.
inline NoiseModel default_noise(const std::vector<FirmParams>& firms, const MarketParams& market,
                                bool enabled) {
  const auto n = static_cast<Eigen::Index>(firms.size());
  const Eigen::Index m = market.d.size();
  NoiseModel noise;
  noise.cost_halfwidth.resize(m, n);
  for (Eigen::Index i = 0; i < n; ++i)
    noise.cost_halfwidth.col(i) = firms[static_cast<std::size_t>(i)].c / 8.0;
  noise.price_halfwidth = market.d / 8.0;
  noise.enabled = enabled;
  return noise;
}

// Random instance: cost coefficients uniform on [3, 4], price intercepts on
// [10, 10.5], slopes on [0.5, 1], capacities fixed to [2, 10] per market.
// Identical seeds give identical instances.
inline CournotGame random_instance(std::uint64_t seed, int n_players = 20, int n_markets = 3,
                                   bool noise_enabled = true) {
  if (n_players < 1 || n_markets < 1)
    throw std::invalid_argument("random_instance: dimensions must be positive");
  RngStream rng(seed);
  std::vector<FirmParams> firms(static_cast<std::size_t>(n_players));
  for (auto& f : firms) {
    f.c.resize(n_markets);
    for (int l = 0; l < n_markets; ++l) f.c[l] = rng.uniform(3.0, 4.0);
    f.lower = Eigen::VectorXd::Constant(n_markets, 2.0);
    f.upper = Eigen::VectorXd::Constant(n_markets, 10.0);
  }
  MarketParams market;
  market.d.resize(n_markets);
  market.b.resize(n_markets);
  for (int l = 0; l < n_markets; ++l) market.d[l] = rng.uniform(10.0, 10.5);
  for (int l = 0; l < n_markets; ++l) market.b[l] = rng.uniform(0.5, 1.0);
  NoiseModel noise = default_noise(firms, market, noise_enabled);
  return CournotGame(std::move(firms), std::move(market), std::move(noise));
}

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline nlohmann::json game_to_json(const CournotGame& game) {
  nlohmann::json j;
  j["n_players"] = game.n_players();
  j["n_markets"] = game.n_markets();
  j["firms"] = nlohmann::json::array();
  for (const auto& f : game.firms()) {
    j["firms"].push_back({{"c", detail::to_std(f.c)},
                          {"lower", detail::to_std(f.lower)},
                          {"upper", detail::to_std(f.upper)}});
  }
  j["market"] = {{"d", detail::to_std(game.market().d)}, {"b", detail::to_std(game.market().b)}};
  j["noise"] = {{"enabled", game.noise().enabled}};
  return j;
}

inline CournotGame game_from_json(const nlohmann::json& j) {
  const int n = j.at("n_players").get<int>();
  const int m = j.at("n_markets").get<int>();
  std::vector<FirmParams> firms;
  for (const auto& jf : j.at("firms")) {
    FirmParams f;
    f.c = detail::to_eigen(jf.at("c").get<std::vector<double>>());
    f.lower = detail::to_eigen(jf.at("lower").get<std::vector<double>>());
    f.upper = detail::to_eigen(jf.at("upper").get<std::vector<double>>());
    firms.push_back(std::move(f));
  }
  if (static_cast<int>(firms.size()) != n)
    throw std::invalid_argument("game_from_json: firm count does not match n_players");
  MarketParams market;
  market.d = detail::to_eigen(j.at("market").at("d").get<std::vector<double>>());
  market.b = detail::to_eigen(j.at("market").at("b").get<std::vector<double>>());
  if (market.d.size() != m)
    throw std::invalid_argument("game_from_json: market size does not match n_markets");
  const bool enabled = j.at("noise").at("enabled").get<bool>();
  NoiseModel noise = default_noise(firms, market, enabled);
  return CournotGame(std::move(firms), std::move(market), std::move(noise));
}

}  // namespace aggne
