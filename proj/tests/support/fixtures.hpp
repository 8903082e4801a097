#pragma once

#include <cstdint>

#include <hetsca/network.hpp>
#include <hetsca/random.hpp>
#include <hetsca/rate.hpp>

namespace hetsca::fixtures {

/// One cell, one BS, one user, all dimensions 1.
inline ChannelSet scalar_link(Complex h, double noise, double budget,
                              UtilityKind utility = UtilityKind::WeightedSumRate) {
  NetworkConfig cfg = NetworkConfig::uniform(1, 1, 1, 1, 1);
  cfg.noise_power = {noise};
  cfg.total_cell_power = {budget};
  cfg.utility = utility;
  cfg.scenario = Scenario::Ibc;
  CMatrix link(1, 1);
  link(0, 0) = h;
  return ChannelSet(cfg, {{{link}}}, {{budget}});
}

/// Every link iid CN(0, 1) per complex entry (variance 1/2 per dimension);
/// per-BS budgets split the cell total equally.
inline ChannelSet unit_gain(NetworkConfig cfg, std::uint64_t seed) {
  RandomStream rng(seed, 7);
  std::vector<std::vector<std::vector<CMatrix>>> links(static_cast<std::size_t>(cfg.total_users()));
  for (auto& per_cell : links) {
    per_cell.resize(static_cast<std::size_t>(cfg.num_cells));
    for (int l = 0; l < cfg.num_cells; ++l) {
      for (int q = 0; q < cfg.bs_per_cell[l]; ++q) {
        per_cell[l].push_back(rng.complex_gaussian(cfg.rx_antennas, cfg.tx_antennas, 0.5));
      }
    }
  }
  std::vector<std::vector<double>> budgets;
  for (int k = 0; k < cfg.num_cells; ++k) {
    budgets.emplace_back(cfg.bs_per_cell[k], cfg.total_cell_power[k] / cfg.bs_per_cell[k]);
  }
  return ChannelSet(cfg, std::move(links), std::move(budgets));
}

inline PrecoderSet random_precoders(const ChannelSet& ch, RandomStream& rng, double scale = 1.0) {
  PrecoderSet v = PrecoderSet::zeros(ch);
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    v[u] = rng.complex_gaussian(v[u].rows(), v[u].cols(), 0.5 * scale * scale);
  }
  return v;
}

}  // namespace hetsca::fixtures
