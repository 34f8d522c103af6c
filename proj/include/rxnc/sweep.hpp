#pragma once

#include <cstdint>
#include <vector>

#include "rxnc/rx_data.hpp"

namespace rxnc {

/// Cheap pre-filter for half RX-difference candidates: excess collision
/// rate of the right-branch RX-difference after `rounds` rounds,
///   2^16 * P[Delta_R(x) == Delta_R(y)] - 1
/// estimated without bias from n_samples pairs under fresh related keys.
/// 0 for a uniform output difference; larger means a more skewed one.
double collision_advantage(CipherId cipher, const HalfRxDifference& d, int rounds, std::size_t n_samples,
                           std::uint64_t seed);

struct SweepEntry {
    HalfRxDifference d;
    double proxy = 0.0;
};

/// Scores every candidate with collision_advantage and sorts best first
/// (ties keep candidate order). Candidate i uses seed stream i.
std::vector<SweepEntry> rank_by_proxy(CipherId cipher, const std::vector<HalfRxDifference>& candidates, int rounds,
                                      std::size_t n_samples, std::uint64_t seed, int workers = 1);

}  // namespace rxnc
