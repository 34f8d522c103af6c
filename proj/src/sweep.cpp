#include "rxnc/sweep.hpp"

#include <algorithm>
#include <stdexcept>

#include "rxnc/parallel.hpp"
#include "rxnc/random.hpp"

namespace rxnc {

double collision_advantage(CipherId cipher, const HalfRxDifference& d, int rounds, std::size_t n_samples,
                           std::uint64_t seed) {
    d.validate();
    if (rounds < 1) throw std::invalid_argument("collision_advantage: rounds must be >= 1");
    if (n_samples < 2) throw std::invalid_argument("collision_advantage: need at least 2 samples");
    std::vector<std::uint32_t> hist(1u << 16, 0);
    CounterRng rng(seed, 0);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const RxKeyPair kp = RxKeyPair::from_key(rng.master_key(), d.lambda);
        const RoundKeys rk = key_schedule(cipher, kp.k, rounds);
        const RoundKeys rkp = key_schedule(cipher, kp.k_prime, rounds);
        const Block p = rng.block();
        const Block c = encrypt(cipher, p, rk);
        const Block cp = encrypt(cipher, make_rx_plaintext_pair(p, d), rkp);
        ++hist[static_cast<Word>(rotl(c.right, d.lambda) ^ cp.right)];
    }
    double pairs = 0.0;
    for (std::uint32_t h : hist) pairs += static_cast<double>(h) * (static_cast<double>(h) - 1.0);
    const double n = static_cast<double>(n_samples);
    return pairs / (n * (n - 1.0)) * 65536.0 - 1.0;
}

std::vector<SweepEntry> rank_by_proxy(CipherId cipher, const std::vector<HalfRxDifference>& candidates, int rounds,
                                      std::size_t n_samples, std::uint64_t seed, int workers) {
    std::vector<SweepEntry> out(candidates.size());
    parallel_for(candidates.size(), workers, [&](std::size_t i) {
        out[i] = {candidates[i], collision_advantage(cipher, candidates[i], rounds, n_samples, derive_seed(seed, i))};
    });
    std::stable_sort(out.begin(), out.end(), [](const SweepEntry& a, const SweepEntry& b) { return a.proxy > b.proxy; });
    return out;
}

}  // namespace rxnc
