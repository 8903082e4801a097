#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hetsca/linalg.hpp"
#include "hetsca/random.hpp"

namespace hetsca {

enum class Scenario { Ibc, IbcZf, CompFull, CompPartialFixed, CompSparse };
enum class UtilityKind { WeightedSumRate, LogOnePlusRate };

std::string_view to_string(Scenario s) noexcept;
std::string_view to_string(UtilityKind u) noexcept;
/// Throws ValidationError (key "scenario" / "utility") on unknown names.
Scenario parse_scenario(std::string_view name);
UtilityKind parse_utility(std::string_view name);

/// Per-BS power constraints (ComP family) versus one sum-power constraint
/// per cell (IBC family, where the cell's BSs act as one virtual BS).
bool uses_per_bs_power(Scenario s) noexcept;

/// Problem dimensions and scenario. Per-user vectors are laid out
/// cell-major: users of cell 0 first, then cell 1, ...
struct NetworkConfig {
  int num_cells = 1;
  std::vector<int> bs_per_cell{1};
  std::vector<int> users_per_cell{1};
  int tx_antennas = 1;
  int rx_antennas = 1;
  std::vector<int> streams{1};
  double cell_spacing = 500.0;
  std::vector<double> total_cell_power{100.0};  // watts
  std::vector<double> noise_power{1.0};
  std::uint64_t rng_seed = 0;
  Scenario scenario = Scenario::CompFull;
  UtilityKind utility = UtilityKind::WeightedSumRate;
  std::vector<double> weights{1.0};
  /// Serving cluster size for COMP-PARTIAL-FIXED (strongest BSs per user).
  int serving_cluster_size = 2;

  int total_users() const noexcept;

  /// Uniform topology with the documented defaults for everything else.
  static NetworkConfig uniform(int cells, int bs, int users, int m, int n, int d = 1);

  bool operator==(const NetworkConfig&) const = default;
};

/// Throws ValidationError naming the offending key.
void validate(const NetworkConfig& cfg);

/// JSON (de)serialization. Keys are the snake_case field names above, plus
/// `total_cell_power_db` as an alternative to `total_cell_power`. Scalars
/// broadcast to per-cell / per-user vectors. Unknown keys are rejected; the
/// `solver` key is reserved for run settings and skipped here.
NetworkConfig parse_config(std::string_view json_text);
NetworkConfig load_config(const std::filesystem::path& path);
std::string to_json(const NetworkConfig& cfg);
void save_config(const NetworkConfig& cfg, const std::filesystem::path& path);

/// Returns cfg with one top-level key replaced by a JSON-encoded value
/// (e.g. with_field(cfg, "num_cells", "3")).
NetworkConfig with_field(const NetworkConfig& cfg, std::string_view key, std::string_view json_value);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Immutable problem data: every BS-to-user channel, budgets and noise.
class ChannelSet {
 public:
  /// links[u][cell][bs] is the N x M channel from BS `bs` of `cell` to user u.
  /// bs_budgets[cell][bs] in watts.
  ChannelSet(NetworkConfig cfg,
             std::vector<std::vector<std::vector<CMatrix>>> links,
             std::vector<std::vector<double>> bs_budgets,
             std::vector<std::vector<Point2>> bs_positions = {},
             std::vector<Point2> user_positions = {});

  const NetworkConfig& config() const noexcept { return cfg_; }

  std::size_t num_cells() const noexcept { return first_user_.size() - 1; }
  std::size_t num_users() const noexcept { return cell_of_.size(); }
  std::size_t cell_of(std::size_t user) const { return cell_of_.at(user); }
  std::size_t first_user(std::size_t cell) const { return first_user_.at(cell); }
  std::size_t end_user(std::size_t cell) const { return first_user_.at(cell + 1); }
  std::size_t users_in_cell(std::size_t cell) const { return end_user(cell) - first_user(cell); }
  int bs_count(std::size_t cell) const { return cfg_.bs_per_cell.at(cell); }
  int tx_antennas() const noexcept { return cfg_.tx_antennas; }
  int rx_antennas() const noexcept { return cfg_.rx_antennas; }
  int streams(std::size_t user) const { return cfg_.streams.at(user); }
  /// Rows of a stacked precoder for a user of this cell: M * Q_cell.
  Eigen::Index tx_dim(std::size_t cell) const { return Eigen::Index(cfg_.tx_antennas) * bs_count(cell); }

  /// H^{q}_{u}: N x M channel from BS q of `cell` to user u.
  const CMatrix& link(std::size_t user, std::size_t cell, std::size_t bs) const {
    return links_.at(user).at(cell).at(bs);
  }
  /// H^{cell}_{u}: N x (M Q_cell) column concatenation of the per-BS links.
  const CMatrix& stacked(std::size_t user, std::size_t cell) const { return stacked_.at(user).at(cell); }

  double noise(std::size_t user) const { return cfg_.noise_power.at(user); }
  double weight(std::size_t user) const { return cfg_.weights.at(user); }
  double bs_budget(std::size_t cell, std::size_t bs) const { return bs_budgets_.at(cell).at(bs); }
  double cell_budget(std::size_t cell) const;

  const std::vector<std::vector<Point2>>& bs_positions() const noexcept { return bs_positions_; }
  const std::vector<Point2>& user_positions() const noexcept { return user_positions_; }

 private:
  NetworkConfig cfg_;
  std::vector<std::size_t> cell_of_;
  std::vector<std::size_t> first_user_;
  std::vector<std::vector<std::vector<CMatrix>>> links_;
  std::vector<std::vector<CMatrix>> stacked_;
  std::vector<std::vector<double>> bs_budgets_;
  std::vector<std::vector<Point2>> bs_positions_;
  std::vector<Point2> user_positions_;
};

inline constexpr double kMinLinkDistance = 20.0;   // meters
inline constexpr double kShadowingStdDb = 8.0;     // 10 log10(L) ~ N(0, 64)
inline constexpr double kReferenceDistance = 200.0;

/// Per-dimension variance (200 / y)^3 * L, with y floored at 20 m.
double link_variance(double distance, double shadowing) noexcept;

/// One N x M channel block with iid entries of the given per-dimension variance.
CMatrix draw_link(RandomStream& rng, int n, int m, double variance_per_dim);

/// Cells on a square grid with `cell_spacing` pitch; BSs and users uniform in
/// each cell's disc of radius spacing/2; path loss and log-normal shadowing
/// per link; per-BS budgets uniform then rescaled to the cell total.
/// Pure function of cfg (including rng_seed). Throws InfeasibleZF for an
/// IBC-ZF config with I_k * N > M * Q_k.
ChannelSet generate_instance(const NetworkConfig& cfg);

}  // namespace hetsca
