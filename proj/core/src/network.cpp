#include "hetsca/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hetsca/errors.hpp"

namespace hetsca {

using nlohmann::json;

namespace {

Error invalid(const std::string& key, const std::string& why) {
  return Error(Errc::ValidationError, key + ": " + why, key);
}

template <class T>
T get_scalar(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw invalid(key, std::string("wrong type: ") + e.what());
  }
}

// A scalar broadcasts to `size` entries; an array must have exactly `size`.
template <class T>
std::vector<T> get_vector(const json& j, const std::string& key, std::size_t size) {
  if (j.is_array()) {
    if (j.size() != size) {
      throw invalid(key, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
    }
    std::vector<T> out;
    out.reserve(size);
    for (const auto& item : j) out.push_back(get_scalar<T>(item, key));
    return out;
  }
  return std::vector<T>(size, get_scalar<T>(j, key));
}

template <class T>
json compact(const std::vector<T>& v) {
  if (!v.empty() && std::all_of(v.begin(), v.end(), [&](const T& x) { return x == v.front(); })) {
    return json(v.front());
  }
  return json(v);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "num_cells",  "bs_per_cell",      "users_per_cell",      "tx_antennas", "rx_antennas",
      "streams",    "cell_spacing",     "total_cell_power",    "total_cell_power_db",
      "noise_power", "rng_seed",        "scenario",            "utility",
      "weights",    "serving_cluster_size", "solver"};
  return keys;
}

NetworkConfig from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "configuration must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().contains(key)) throw invalid(key, "unknown key");
  }
  for (const char* required : {"num_cells", "bs_per_cell", "users_per_cell", "tx_antennas", "rx_antennas"}) {
    if (!j.contains(required)) throw invalid(required, "required key missing");
  }

  NetworkConfig cfg;
  cfg.num_cells = get_scalar<int>(j.at("num_cells"), "num_cells");
  if (cfg.num_cells < 1) throw invalid("num_cells", "must be >= 1");
  const auto cells = static_cast<std::size_t>(cfg.num_cells);
  cfg.bs_per_cell = get_vector<int>(j.at("bs_per_cell"), "bs_per_cell", cells);
  cfg.users_per_cell = get_vector<int>(j.at("users_per_cell"), "users_per_cell", cells);
  for (int q : cfg.bs_per_cell)
    if (q < 1) throw invalid("bs_per_cell", "must be >= 1");
  for (int i : cfg.users_per_cell)
    if (i < 1) throw invalid("users_per_cell", "must be >= 1");
  cfg.tx_antennas = get_scalar<int>(j.at("tx_antennas"), "tx_antennas");
  cfg.rx_antennas = get_scalar<int>(j.at("rx_antennas"), "rx_antennas");
  const auto users = static_cast<std::size_t>(cfg.total_users());

  cfg.streams = j.contains("streams") ? get_vector<int>(j.at("streams"), "streams", users) : std::vector<int>(users, 1);
  if (j.contains("cell_spacing")) cfg.cell_spacing = get_scalar<double>(j.at("cell_spacing"), "cell_spacing");

  if (j.contains("total_cell_power") && j.contains("total_cell_power_db")) {
    throw invalid("total_cell_power_db", "give either total_cell_power or total_cell_power_db, not both");
  }
  if (j.contains("total_cell_power")) {
    cfg.total_cell_power = get_vector<double>(j.at("total_cell_power"), "total_cell_power", cells);
  } else {
    const auto db = j.contains("total_cell_power_db")
                        ? get_vector<double>(j.at("total_cell_power_db"), "total_cell_power_db", cells)
                        : std::vector<double>(cells, 20.0);
    cfg.total_cell_power.clear();
    for (double x : db) cfg.total_cell_power.push_back(std::pow(10.0, x / 10.0));
  }
  cfg.noise_power = j.contains("noise_power") ? get_vector<double>(j.at("noise_power"), "noise_power", users)
                                              : std::vector<double>(users, 1.0);
  if (j.contains("rng_seed")) cfg.rng_seed = get_scalar<std::uint64_t>(j.at("rng_seed"), "rng_seed");
  if (j.contains("scenario")) cfg.scenario = parse_scenario(get_scalar<std::string>(j.at("scenario"), "scenario"));
  if (j.contains("utility")) cfg.utility = parse_utility(get_scalar<std::string>(j.at("utility"), "utility"));
  cfg.weights = j.contains("weights") ? get_vector<double>(j.at("weights"), "weights", users)
                                      : std::vector<double>(users, 1.0);
  if (j.contains("serving_cluster_size")) {
    cfg.serving_cluster_size = get_scalar<int>(j.at("serving_cluster_size"), "serving_cluster_size");
  }
  validate(cfg);
  return cfg;
}

json to_json_value(const NetworkConfig& cfg) {
  json j;
  j["num_cells"] = cfg.num_cells;
  j["bs_per_cell"] = compact(cfg.bs_per_cell);
  j["users_per_cell"] = compact(cfg.users_per_cell);
  j["tx_antennas"] = cfg.tx_antennas;
  j["rx_antennas"] = cfg.rx_antennas;
  j["streams"] = compact(cfg.streams);
  j["cell_spacing"] = cfg.cell_spacing;
  j["total_cell_power"] = compact(cfg.total_cell_power);
  j["noise_power"] = compact(cfg.noise_power);
  j["rng_seed"] = cfg.rng_seed;
  j["scenario"] = std::string(to_string(cfg.scenario));
  j["utility"] = std::string(to_string(cfg.utility));
  j["weights"] = compact(cfg.weights);
  j["serving_cluster_size"] = cfg.serving_cluster_size;
  return j;
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

Point2 uniform_in_disc(RandomStream& rng, Point2 center, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return {center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::Ibc: return "IBC";
    case Scenario::IbcZf: return "IBC-ZF";
    case Scenario::CompFull: return "COMP-FULL";
    case Scenario::CompPartialFixed: return "COMP-PARTIAL-FIXED";
    case Scenario::CompSparse: return "COMP-SPARSE";
  }
  return "?";
}

std::string_view to_string(UtilityKind u) noexcept {
  switch (u) {
    case UtilityKind::WeightedSumRate: return "WEIGHTED-SUM-RATE";
    case UtilityKind::LogOnePlusRate: return "LOG-ONE-PLUS-RATE";
  }
  return "?";
}

Scenario parse_scenario(std::string_view name) {
  for (auto s : {Scenario::Ibc, Scenario::IbcZf, Scenario::CompFull, Scenario::CompPartialFixed,
                 Scenario::CompSparse}) {
    if (to_string(s) == name) return s;
  }
  throw invalid("scenario", "unknown scenario '" + std::string(name) + "'");
}

UtilityKind parse_utility(std::string_view name) {
  for (auto u : {UtilityKind::WeightedSumRate, UtilityKind::LogOnePlusRate}) {
    if (to_string(u) == name) return u;
  }
  throw invalid("utility", "unknown utility '" + std::string(name) + "'");
}

bool uses_per_bs_power(Scenario s) noexcept { return s != Scenario::Ibc && s != Scenario::IbcZf; }

int NetworkConfig::total_users() const noexcept {
  return std::accumulate(users_per_cell.begin(), users_per_cell.end(), 0);
}

NetworkConfig NetworkConfig::uniform(int cells, int bs, int users, int m, int n, int d) {
  NetworkConfig cfg;
  cfg.num_cells = cells;
  cfg.bs_per_cell.assign(cells, bs);
  cfg.users_per_cell.assign(cells, users);
  cfg.tx_antennas = m;
  cfg.rx_antennas = n;
  const auto total = static_cast<std::size_t>(cells) * users;
  cfg.streams.assign(total, d);
  cfg.total_cell_power.assign(cells, 100.0);
  cfg.noise_power.assign(total, 1.0);
  cfg.weights.assign(total, 1.0);
  return cfg;
}

void validate(const NetworkConfig& cfg) {
  if (cfg.num_cells < 1) throw invalid("num_cells", "must be >= 1");
  const auto cells = static_cast<std::size_t>(cfg.num_cells);
  if (cfg.bs_per_cell.size() != cells) throw invalid("bs_per_cell", "one entry per cell required");
  if (cfg.users_per_cell.size() != cells) throw invalid("users_per_cell", "one entry per cell required");
  for (int q : cfg.bs_per_cell)
    if (q < 1) throw invalid("bs_per_cell", "must be >= 1");
  for (int i : cfg.users_per_cell)
    if (i < 1) throw invalid("users_per_cell", "must be >= 1");
  if (cfg.tx_antennas < 1) throw invalid("tx_antennas", "must be >= 1");
  if (cfg.rx_antennas < 1) throw invalid("rx_antennas", "must be >= 1");
  const auto users = static_cast<std::size_t>(cfg.total_users());
  if (cfg.streams.size() != users) throw invalid("streams", "one entry per user required");
  const int dmax = std::min(cfg.tx_antennas, cfg.rx_antennas);
  for (int d : cfg.streams) {
    if (d < 1 || d > dmax) throw invalid("streams", "need 1 <= d <= min(M, N) = " + std::to_string(dmax));
  }
  if (!(cfg.cell_spacing > 0.0)) throw invalid("cell_spacing", "must be > 0");
  if (cfg.total_cell_power.size() != cells) throw invalid("total_cell_power", "one entry per cell required");
  for (double p : cfg.total_cell_power)
    if (!(p > 0.0) || !std::isfinite(p)) throw invalid("total_cell_power", "must be > 0");
  if (cfg.noise_power.size() != users) throw invalid("noise_power", "one entry per user required");
  for (double s : cfg.noise_power)
    if (!(s > 0.0) || !std::isfinite(s)) throw invalid("noise_power", "must be > 0");
  if (cfg.weights.size() != users) throw invalid("weights", "one entry per user required");
  for (double w : cfg.weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw invalid("weights", "must be >= 0");
  if (cfg.serving_cluster_size < 1) throw invalid("serving_cluster_size", "must be >= 1");
}

NetworkConfig parse_config(std::string_view json_text) { return from_json(parse_text(json_text)); }

NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const NetworkConfig& cfg) { return to_json_value(cfg).dump(2); }

void save_config(const NetworkConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << to_json(cfg) << '\n';
}

NetworkConfig with_field(const NetworkConfig& cfg, std::string_view key, std::string_view json_value) {
  const std::string k(key);
  if (!known_keys().contains(k) || k == "solver") throw invalid(k, "not a network configuration field");
  json j = to_json_value(cfg);
  if (k == "total_cell_power_db") j.erase("total_cell_power");
  j[k] = parse_text(json_value);
  return from_json(j);
}

ChannelSet::ChannelSet(NetworkConfig cfg, std::vector<std::vector<std::vector<CMatrix>>> links,
                       std::vector<std::vector<double>> bs_budgets, std::vector<std::vector<Point2>> bs_positions,
                       std::vector<Point2> user_positions)
    : cfg_(std::move(cfg)),
      links_(std::move(links)),
      bs_budgets_(std::move(bs_budgets)),
      bs_positions_(std::move(bs_positions)),
      user_positions_(std::move(user_positions)) {
  validate(cfg_);
  const auto cells = static_cast<std::size_t>(cfg_.num_cells);
  first_user_.assign(1, 0);
  for (std::size_t k = 0; k < cells; ++k) {
    const auto n = static_cast<std::size_t>(cfg_.users_per_cell[k]);
    for (std::size_t i = 0; i < n; ++i) cell_of_.push_back(k);
    first_user_.push_back(first_user_.back() + n);
  }
  const Eigen::Index n_rx = cfg_.rx_antennas;
  const Eigen::Index m_tx = cfg_.tx_antennas;
  if (links_.size() != num_users()) throw Error(Errc::ShapeMismatch, "links must have one entry per user");
  if (bs_budgets_.size() != cells) throw Error(Errc::ShapeMismatch, "bs_budgets must have one entry per cell");
  for (std::size_t k = 0; k < cells; ++k) {
    if (bs_budgets_[k].size() != static_cast<std::size_t>(bs_count(k))) {
      throw Error(Errc::ShapeMismatch, "bs_budgets for cell " + std::to_string(k) + " has wrong length");
    }
    for (double p : bs_budgets_[k])
      if (!(p > 0.0)) throw Error(Errc::ValidationError, "per-BS budgets must be > 0", "total_cell_power");
  }
  stacked_.resize(num_users());
  for (std::size_t u = 0; u < num_users(); ++u) {
    if (links_[u].size() != cells) throw Error(Errc::ShapeMismatch, "user links must cover every cell");
    for (std::size_t l = 0; l < cells; ++l) {
      const auto q_count = static_cast<std::size_t>(bs_count(l));
      if (links_[u][l].size() != q_count) throw Error(Errc::ShapeMismatch, "user links must cover every BS");
      CMatrix stack(n_rx, m_tx * static_cast<Eigen::Index>(q_count));
      for (std::size_t q = 0; q < q_count; ++q) {
        const CMatrix& h = links_[u][l][q];
        if (h.rows() != n_rx || h.cols() != m_tx) {
          throw Error(Errc::ShapeMismatch, "link must be N x M");
        }
        if (!linalg::all_finite(h)) throw Error(Errc::ValidationError, "non-finite channel entry", "links");
        stack.middleCols(static_cast<Eigen::Index>(q) * m_tx, m_tx) = h;
      }
      stacked_[u].push_back(std::move(stack));
    }
  }
}

double ChannelSet::cell_budget(std::size_t cell) const {
  const auto& b = bs_budgets_.at(cell);
  return std::accumulate(b.begin(), b.end(), 0.0);
}

double link_variance(double distance, double shadowing) noexcept {
  const double y = std::max(distance, kMinLinkDistance);
  return std::pow(kReferenceDistance / y, 3) * shadowing;
}

CMatrix draw_link(RandomStream& rng, int n, int m, double variance_per_dim) {
  return rng.complex_gaussian(n, m, variance_per_dim);
}

ChannelSet generate_instance(const NetworkConfig& cfg) {
  validate(cfg);
  const auto cells = static_cast<std::size_t>(cfg.num_cells);
  if (cfg.scenario == Scenario::IbcZf) {
    for (std::size_t k = 0; k < cells; ++k) {
      if (cfg.users_per_cell[k] * cfg.rx_antennas > cfg.tx_antennas * cfg.bs_per_cell[k]) {
        throw Error(Errc::InfeasibleZF, "cell " + std::to_string(k) + ": I_k * N exceeds transmit dimension");
      }
    }
  }

  const int columns = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cells))));
  const double radius = cfg.cell_spacing / 2.0;
  RandomStream pos_rng(cfg.rng_seed, streams::kPositions);
  std::vector<std::vector<Point2>> bs_pos(cells);
  std::vector<Point2> user_pos;
  for (std::size_t k = 0; k < cells; ++k) {
    const Point2 center{static_cast<double>(static_cast<int>(k) % columns) * cfg.cell_spacing,
                        static_cast<double>(static_cast<int>(k) / columns) * cfg.cell_spacing};
    for (int q = 0; q < cfg.bs_per_cell[k]; ++q) bs_pos[k].push_back(uniform_in_disc(pos_rng, center, radius));
    for (int i = 0; i < cfg.users_per_cell[k]; ++i) user_pos.push_back(uniform_in_disc(pos_rng, center, radius));
  }

  RandomStream shadow_rng(cfg.rng_seed, streams::kShadowing);
  RandomStream chan_rng(cfg.rng_seed, streams::kChannels);
  const auto users = user_pos.size();
  std::vector<std::vector<std::vector<CMatrix>>> links(users);
  for (std::size_t u = 0; u < users; ++u) {
    links[u].resize(cells);
    for (std::size_t l = 0; l < cells; ++l) {
      for (std::size_t q = 0; q < bs_pos[l].size(); ++q) {
        const double dx = user_pos[u].x - bs_pos[l][q].x;
        const double dy = user_pos[u].y - bs_pos[l][q].y;
        const double shadow = std::pow(10.0, kShadowingStdDb * shadow_rng.normal() / 10.0);
        const double var = link_variance(std::hypot(dx, dy), shadow);
        links[u][l].push_back(draw_link(chan_rng, cfg.rx_antennas, cfg.tx_antennas, var));
      }
    }
  }

  RandomStream budget_rng(cfg.rng_seed, streams::kBudgets);
  std::vector<std::vector<double>> budgets(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    std::vector<double> draws;
    for (int q = 0; q < cfg.bs_per_cell[k]; ++q) draws.push_back(budget_rng.uniform_open_closed());
    const double total = std::accumulate(draws.begin(), draws.end(), 0.0);
    for (double x : draws) budgets[k].push_back(cfg.total_cell_power[k] * x / total);
  }
  return ChannelSet(cfg, std::move(links), std::move(budgets), std::move(bs_pos), std::move(user_pos));
}

}  // namespace hetsca
