#include "rxnc/keyrank.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "rxnc/binary_io.hpp"
#include "rxnc/distinguisher.hpp"
#include "rxnc/parallel.hpp"
#include "rxnc/random.hpp"

namespace rxnc {

double loglik(double v) {
    const double q = std::clamp(v, kScoreEps, 1.0 - kScoreEps);
    return std::log2(q / (1.0 - q));
}

std::uint32_t project_bits(Word x, const std::vector<int>& positions) {
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) out |= static_cast<std::uint32_t>((x >> positions[i]) & 1) << i;
    return out;
}

Word expand_bits(std::uint32_t idx, const std::vector<int>& positions) {
    Word out = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) out |= static_cast<Word>(((idx >> i) & 1u) << positions[i]);
    return out;
}

namespace {

std::uint8_t hint_of(std::uint32_t distance) { return static_cast<std::uint8_t>(std::min<std::uint32_t>(distance, 254)); }

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

Moments moments(std::span<const double> v) {
    Moments m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size()));
    return m;
}

void check_profile_inputs(const GroupScorer& scorer, const DataFormatSpec& spec, const HalfRxDifference& d,
                          const ProfileOptions& opt) {
    spec.validate();
    d.validate();
    if (opt.samples < 1) throw std::invalid_argument("profile: samples per delta must be >= 1");
    if (scorer.pairs_per_group() != spec.pairs_per_sample) {
        throw std::invalid_argument("profile: scorer group size differs from the data format's");
    }
    if (scorer.rounds() != 0 && scorer.rounds() != spec.rounds) {
        throw std::invalid_argument("profile: scorer rounds differ from the data format's");
    }
}

/// Mean/std of the scorer over fresh real groups whose last round is peeled
/// with (true subkeys ^ (da, db)). extra_mask, when set, adds per-group random
/// bits outside the given masks.
Moments response(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d, const DataFormatSpec& spec,
                 std::size_t samples, std::uint64_t seed, Word da, Word db, std::uint8_t hint,
                 std::optional<std::pair<Word, Word>> free_bits = std::nullopt) {
    const RealGroups groups = generate_real_groups(cipher, d, spec.rounds + 1, spec.pairs_per_sample, samples, seed);
    const auto k = static_cast<std::size_t>(spec.pairs_per_sample);
    const auto r = static_cast<std::size_t>(spec.rounds);
    std::vector<BlockPair> dec(groups.pairs.pairs.size());
    CounterRng rng(seed, 0x6A6F696EULL);
    for (std::size_t g = 0; g < samples; ++g) {
        Word xa = da, xb = db;
        if (free_bits) {
            xa ^= static_cast<Word>(rng.word() & free_bits->first);
            xb ^= static_cast<Word>(rng.word() & free_bits->second);
        }
        const Word ka = static_cast<Word>(groups.keys[g].keys[r] ^ xa);
        const Word kb = static_cast<Word>(groups.keys_prime[g].keys[r] ^ xb);
        for (std::size_t j = 0; j < k; ++j) {
            const BlockPair& c = groups.pairs.pairs[g * k + j];
            dec[g * k + j] = {decrypt_round(cipher, c.first, ka), decrypt_round(cipher, c.second, kb)};
        }
    }
    std::vector<double> scores(samples);
    const std::vector<std::uint8_t> hints(samples, hint);
    scorer.score_groups(dec, hints, scores);
    return moments(scores);
}

void check_sensitive_set(const std::vector<int>& s, const char* name) {
    if (s.empty()) throw std::invalid_argument(std::string("joint profile: ") + name + " is empty");
    std::vector<int> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument(std::string("joint profile: ") + name + " has duplicate positions");
    }
    for (int p : s) {
        if (p < 0 || p > 15) throw std::invalid_argument(std::string("joint profile: ") + name + " position out of range");
    }
}

void check_joint_size(std::size_t a, std::size_t b) {
    if (a + b > kMaxJointBits) {
        throw std::invalid_argument("joint profile: " + std::to_string(a + b) + " sensitive bits exceed the limit of " +
                                    std::to_string(kMaxJointBits));
    }
}

Word mask_of(const std::vector<int>& positions) { return expand_bits((1u << positions.size()) - 1, positions); }

}  // namespace

WkrProfile wkr_profile(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                       const DataFormatSpec& spec, const ProfileOptions& opt) {
    check_profile_inputs(scorer, spec, d, opt);
    WkrProfile p;
    p.mu.assign(1u << 16, 0.0);
    p.sigma.assign(1u << 16, 0.0);
    p.distinguisher = scorer.name();
    p.cipher = std::string(cipher_name(cipher));
    p.lambda = d.lambda;
    p.rounds = spec.rounds;
    p.samples_per_delta = opt.samples;
    parallel_for(std::size_t{1} << 16, opt.workers, [&](std::size_t delta) {
        const auto dw = static_cast<Word>(delta);
        const Moments m = response(scorer, cipher, d, spec, opt.samples, derive_seed(opt.seed, delta), dw,
                                   rotl(dw, d.lambda), hint_of(static_cast<std::uint32_t>(std::popcount(dw))));
        p.mu[delta] = m.mean;
        p.sigma[delta] = m.sd;
    });
    return p;
}

JwkrProfile jwkr_profile(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                         const DataFormatSpec& spec, const std::vector<int>& sens_a, const std::vector<int>& sens_b,
                         const ProfileOptions& opt) {
    check_sensitive_set(sens_a, "sens_a");
    check_sensitive_set(sens_b, "sens_b");
    check_joint_size(sens_a.size(), sens_b.size());
    check_profile_inputs(scorer, spec, d, opt);
    JwkrProfile p;
    p.sens_a = sens_a;
    p.sens_b = sens_b;
    const std::size_t cells = std::size_t{1} << (sens_a.size() + sens_b.size());
    p.mu.assign(cells, 0.0);
    p.sigma.assign(cells, 0.0);
    p.distinguisher = scorer.name();
    p.cipher = std::string(cipher_name(cipher));
    p.lambda = d.lambda;
    p.rounds = spec.rounds;
    p.samples_per_cell = opt.samples;
    p.randomized_insensitive = opt.randomize_insensitive;
    const auto free_bits = opt.randomize_insensitive
                               ? std::optional<std::pair<Word, Word>>{{static_cast<Word>(~mask_of(sens_a)),
                                                                      static_cast<Word>(~mask_of(sens_b))}}
                               : std::nullopt;
    const std::size_t nb = sens_b.size();
    parallel_for(cells, opt.workers, [&](std::size_t cell) {
        const auto ia = static_cast<std::uint32_t>(cell >> nb);
        const auto ib = static_cast<std::uint32_t>(cell & ((std::size_t{1} << nb) - 1));
        const Moments m = response(scorer, cipher, d, spec, opt.samples, derive_seed(opt.seed, cell),
                                   expand_bits(ia, sens_a), expand_bits(ib, sens_b),
                                   hint_of(static_cast<std::uint32_t>(std::popcount(cell))), free_bits);
        p.mu[cell] = m.mean;
        p.sigma[cell] = m.sd;
    });
    return p;
}

CiphertextStructure make_structure(CipherId cipher, const HalfRxDifference& d, int rounds, std::size_t m, int k,
                                   const MasterKey& key, std::uint64_t seed) {
    d.validate();
    if (rounds < 1) throw std::invalid_argument("make_structure: rounds must be >= 1");
    if (k < 1) throw std::invalid_argument("make_structure: k must be >= 1");
    const RxKeyPair keys = RxKeyPair::from_key(key, d.lambda);
    CiphertextStructure cs;
    cs.cipher = cipher;
    cs.lambda = d.lambda;
    cs.rounds = rounds;
    cs.pairs_per_group = k;
    cs.pairs = generate_pair_set(cipher, keys, d, rounds, m * static_cast<std::size_t>(k), seed);
    return cs;
}

CiphertextStructure decrypt_structure(const CiphertextStructure& cs, Word ka, Word kb) {
    if (cs.rounds < 1) throw std::invalid_argument("decrypt_structure: structure has no rounds left");
    CiphertextStructure out = cs;
    out.rounds = cs.rounds - 1;
    for (auto& p : out.pairs) p = {decrypt_round(cs.cipher, p.first, ka), decrypt_round(cs.cipher, p.second, kb)};
    return out;
}

Word companion_subkey(const CiphertextStructure& cs, Word key) {
    if (cs.cipher != CipherId::Simon32_64) {
        throw std::invalid_argument("single-key guessing needs a linear key schedule; use the joint search for " +
                                    std::string(cipher_name(cs.cipher)));
    }
    const auto offsets = simon_rx_subkey_offsets(cs.lambda, cs.rounds);
    return static_cast<Word>(rotl(key, cs.lambda) ^ offsets.back());
}

const KeyCandidate& KeyCandidateList::best() const {
    if (entries.empty()) throw std::logic_error("empty candidate list");
    return *std::max_element(entries.begin(), entries.end(),
                             [](const KeyCandidate& a, const KeyCandidate& b) { return a.score < b.score; });
}

CandidateScore score_candidate(const CiphertextStructure& cs, const GroupScorer& scorer, Word ka, Word kb,
                               std::uint8_t hint) {
    if (scorer.pairs_per_group() != cs.pairs_per_group) {
        throw std::invalid_argument("scorer group size differs from the structure's");
    }
    const std::size_t m = cs.groups();
    std::vector<BlockPair> dec(cs.pairs.size());
    for (std::size_t i = 0; i < dec.size(); ++i) {
        dec[i] = {decrypt_round(cs.cipher, cs.pairs[i].first, ka), decrypt_round(cs.cipher, cs.pairs[i].second, kb)};
    }
    std::vector<double> v(m);
    const std::vector<std::uint8_t> hints(m, hint);
    scorer.score_groups(dec, hints, v);
    CandidateScore out;
    for (double x : v) {
        out.score += loglik(x);
        out.mean_response += x;
    }
    out.mean_response /= static_cast<double>(m);
    return out;
}

namespace {

struct SearchSpace {
    std::size_t size = 0;
    std::function<std::pair<Word, Word>(std::uint32_t)> keys;
    const std::vector<double>* mu = nullptr;
    const std::vector<double>* sigma = nullptr;
    std::optional<std::uint32_t> true_index;
};

void check_search_inputs(const CiphertextStructure& cs, const GroupScorer& scorer, const SearchParams& p,
                         int profile_rounds) {
    if (cs.pairs.empty() || cs.groups() == 0) throw std::invalid_argument("key search: empty ciphertext structure");
    if (cs.pairs.size() % static_cast<std::size_t>(cs.pairs_per_group) != 0) {
        throw std::invalid_argument("key search: structure size is not a multiple of the group size");
    }
    if (p.n < 1 || p.l < 1) throw std::invalid_argument("key search: n and l must be >= 1");
    if (scorer.pairs_per_group() != cs.pairs_per_group) {
        throw std::invalid_argument("key search: scorer group size differs from the structure's");
    }
    if (profile_rounds != cs.rounds - 1) {
        throw std::invalid_argument("key search: profile is for " + std::to_string(profile_rounds) +
                                    "-round responses but the structure has " + std::to_string(cs.rounds) + " rounds");
    }
    if (scorer.rounds() != 0 && scorer.rounds() != cs.rounds - 1) {
        throw std::invalid_argument("key search: scorer rounds must be the structure rounds - 1");
    }
}

KeyCandidateList run_search(const CiphertextStructure& cs, const GroupScorer& scorer, const SearchSpace& space,
                            const SearchParams& p) {
    const std::size_t N = space.size;
    const auto n = static_cast<std::size_t>(p.n);
    std::vector<double> inv_var(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double s = std::max((*space.sigma)[i], kSigmaFloor);
        inv_var[i] = 1.0 / (s * s);
    }

    CounterRng rng(p.seed, 0);
    std::vector<std::uint8_t> tried(N, 0);
    std::vector<std::uint32_t> batch;
    batch.reserve(n);
    // Initial batch: uniform without replacement; cycles through the space if it is smaller than n.
    {
        std::vector<std::uint32_t> perm;
        if (N <= 4 * n) {
            perm.resize(N);
            std::iota(perm.begin(), perm.end(), 0u);
            for (std::size_t i = N; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        } else {
            std::vector<std::uint8_t> seen(N, 0);
            while (perm.size() < n) {
                const auto c = static_cast<std::uint32_t>(rng.below(N));
                if (!seen[c]) {
                    seen[c] = 1;
                    perm.push_back(c);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) batch.push_back(perm[i % perm.size()]);
    }

    KeyCandidateList out;
    out.l = p.l;
    out.n = p.n;
    out.entries.reserve(static_cast<std::size_t>(p.l) * n);
    std::vector<double> lam(N);
    std::vector<std::uint32_t> order(N);

    for (int it = 0; it < p.l; ++it) {
        std::vector<KeyCandidate> results(n);
        parallel_for(n, p.workers, [&](std::size_t i) {
            const std::uint32_t idx = batch[i];
            const auto [ka, kb] = space.keys(idx);
            const std::uint8_t hint = space.true_index
                                          ? hint_of(static_cast<std::uint32_t>(std::popcount(idx ^ *space.true_index)))
                                          : kNoHint;
            const CandidateScore s = score_candidate(cs, scorer, ka, kb, hint);
            results[i] = {ka, kb, s.score, s.mean_response, it};
        });
        for (std::size_t i = 0; i < n; ++i) {
            tried[batch[i]] = 1;
            out.entries.push_back(results[i]);
        }
        if (it + 1 == p.l) break;

        std::fill(lam.begin(), lam.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = batch[i];
            const double mc = results[i].mean_response;
            for (std::size_t k = 0; k < N; ++k) {
                const std::size_t cell = c ^ k;
                const double diff = mc - (*space.mu)[cell];
                lam[k] += diff * diff * inv_var[cell];
            }
        }
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return lam[a] < lam[b]; });
        std::vector<std::uint32_t> next;
        next.reserve(n);
        for (std::uint32_t k : order) {
            if (next.size() == n) break;
            if (!tried[k]) next.push_back(k);
        }
        // Too few untried keys left: reuse the best-ranked tried ones.
        for (std::uint32_t k : order) {
            if (next.size() == n) break;
            if (tried[k] && std::find(next.begin(), next.end(), k) == next.end()) next.push_back(k);
        }
        // A space smaller than n repeats candidates.
        for (std::size_t j = 0; next.size() < n; ++j) next.push_back(order[j % N]);
        batch = std::move(next);
    }
    return out;
}

}  // namespace

KeyCandidateList bayesian_key_search(const CiphertextStructure& cs, const GroupScorer& scorer,
                                     const WkrProfile& profile, const SearchParams& p,
                                     const std::optional<KeyTruth>& truth) {
    check_search_inputs(cs, scorer, p, profile.rounds);
    if (profile.mu.size() != (1u << 16) || profile.sigma.size() != (1u << 16)) {
        throw std::invalid_argument("key search: WKR profile must have 65536 cells");
    }
    if (profile.lambda != cs.lambda) throw std::invalid_argument("key search: profile lambda differs from the structure's");
    const Word offset = companion_subkey(cs, 0);
    SearchSpace space;
    space.size = std::size_t{1} << 16;
    const int lambda = cs.lambda;
    space.keys = [lambda, offset](std::uint32_t idx) {
        const auto k = static_cast<Word>(idx);
        return std::pair<Word, Word>{k, static_cast<Word>(rotl(k, lambda) ^ offset)};
    };
    space.mu = &profile.mu;
    space.sigma = &profile.sigma;
    if (truth) space.true_index = truth->key_a;
    return run_search(cs, scorer, space, p);
}

KeyCandidateList joint_bayesian_key_search(const CiphertextStructure& cs, const GroupScorer& scorer,
                                           const JwkrProfile& profile, const SearchParams& p,
                                           const std::optional<KeyTruth>& truth) {
    check_search_inputs(cs, scorer, p, profile.rounds);
    check_joint_size(profile.sens_a.size(), profile.sens_b.size());
    const std::size_t cells = std::size_t{1} << (profile.sens_a.size() + profile.sens_b.size());
    if (profile.mu.size() != cells || profile.sigma.size() != cells) {
        throw std::invalid_argument("key search: JWKR table size does not match its sensitive sets");
    }
    if (profile.lambda != cs.lambda) throw std::invalid_argument("key search: profile lambda differs from the structure's");
    SearchSpace space;
    space.size = cells;
    const std::size_t nb = profile.sens_b.size();
    const std::vector<int> sa = profile.sens_a, sb = profile.sens_b;
    space.keys = [sa, sb, nb](std::uint32_t idx) {
        return std::pair<Word, Word>{expand_bits(idx >> nb, sa), expand_bits(idx & ((1u << nb) - 1), sb)};
    };
    space.mu = &profile.mu;
    space.sigma = &profile.sigma;
    if (truth) {
        space.true_index = static_cast<std::uint32_t>((project_bits(truth->key_a, sa) << nb) | project_bits(truth->key_b, sb));
    }
    return run_search(cs, scorer, space, p);
}

namespace {

constexpr std::string_view kWkrMagic = "RXWK";
constexpr std::uint32_t kWkrVersion = 1;

void write_header(io::Writer& w, std::uint8_t kind, const std::string& cipher, const std::string& distinguisher,
                  int lambda, int rounds, std::size_t samples, std::uint64_t config_hash,
                  const std::vector<int>& sa, const std::vector<int>& sb, bool randomized) {
    w.magic(kWkrMagic);
    w.put<std::uint32_t>(kWkrVersion);
    w.put<std::uint8_t>(kind);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(parse_cipher(cipher)));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(lambda));
    w.put<std::uint8_t>(randomized ? 1 : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rounds));
    w.put<std::uint64_t>(samples);
    w.put<std::uint64_t>(config_hash);
    w.string(distinguisher);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(sa.size()));
    for (int x : sa) w.put<std::uint8_t>(static_cast<std::uint8_t>(x));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(sb.size()));
    for (int x : sb) w.put<std::uint8_t>(static_cast<std::uint8_t>(x));
}

struct Header {
    std::uint8_t kind = 0;
    std::string cipher;
    int lambda = 0;
    bool randomized = false;
    int rounds = 0;
    std::size_t samples = 0;
    std::string distinguisher;
    std::vector<int> sa, sb;
};

Header read_header(io::Reader& r) {
    r.expect_magic(kWkrMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kWkrVersion) {
        throw std::runtime_error("'" + r.path() + "': unsupported profile version " + std::to_string(version));
    }
    Header h;
    h.kind = r.get<std::uint8_t>();
    const auto c = r.get<std::uint8_t>();
    if (c > 1) throw std::runtime_error("'" + r.path() + "': unknown cipher id");
    h.cipher = std::string(cipher_name(static_cast<CipherId>(c)));
    h.lambda = r.get<std::uint8_t>();
    h.randomized = r.get<std::uint8_t>() != 0;
    h.rounds = static_cast<int>(r.get<std::uint32_t>());
    h.samples = r.get<std::uint64_t>();
    r.get<std::uint64_t>();  // config hash
    h.distinguisher = r.string(1u << 16);
    const auto na = r.get<std::uint8_t>();
    for (int i = 0; i < na; ++i) h.sa.push_back(r.get<std::uint8_t>());
    const auto nb = r.get<std::uint8_t>();
    for (int i = 0; i < nb; ++i) h.sb.push_back(r.get<std::uint8_t>());
    return h;
}

void write_table(io::Writer& w, const std::vector<double>& mu, const std::vector<double>& sigma) {
    w.put<std::uint64_t>(mu.size());
    for (double x : mu) w.put<double>(x);
    for (double x : sigma) w.put<double>(x);
}

void read_table(io::Reader& r, std::size_t expected, std::vector<double>& mu, std::vector<double>& sigma) {
    const auto n = r.get<std::uint64_t>();
    if (n != expected) throw std::runtime_error("'" + r.path() + "': table size disagrees with header");
    mu.resize(n);
    sigma.resize(n);
    for (auto& x : mu) x = r.get<double>();
    for (auto& x : sigma) x = r.get<double>();
    if (!r.at_eof()) throw std::runtime_error("'" + r.path() + "': trailing bytes after table");
}

}  // namespace

void save_wkr(const WkrProfile& p, const std::string& path, std::uint64_t config_hash) {
    io::Writer w(path);
    write_header(w, 0, p.cipher, p.distinguisher, p.lambda, p.rounds, p.samples_per_delta, config_hash, {}, {}, false);
    write_table(w, p.mu, p.sigma);
    w.close();
}

WkrProfile load_wkr(const std::string& path) {
    io::Reader r(path);
    const Header h = read_header(r);
    if (h.kind != 0) throw std::runtime_error("'" + path + "': not a single-key profile");
    WkrProfile p;
    p.cipher = h.cipher;
    p.distinguisher = h.distinguisher;
    p.lambda = h.lambda;
    p.rounds = h.rounds;
    p.samples_per_delta = h.samples;
    read_table(r, 1u << 16, p.mu, p.sigma);
    return p;
}

void save_jwkr(const JwkrProfile& p, const std::string& path, std::uint64_t config_hash) {
    io::Writer w(path);
    write_header(w, 1, p.cipher, p.distinguisher, p.lambda, p.rounds, p.samples_per_cell, config_hash, p.sens_a,
                 p.sens_b, p.randomized_insensitive);
    write_table(w, p.mu, p.sigma);
    w.close();
}

JwkrProfile load_jwkr(const std::string& path) {
    io::Reader r(path);
    const Header h = read_header(r);
    if (h.kind != 1) throw std::runtime_error("'" + path + "': not a joint profile");
    if (h.sa.size() + h.sb.size() > kMaxJointBits) throw std::runtime_error("'" + path + "': sensitive sets too large");
    JwkrProfile p;
    p.cipher = h.cipher;
    p.distinguisher = h.distinguisher;
    p.lambda = h.lambda;
    p.rounds = h.rounds;
    p.samples_per_cell = h.samples;
    p.randomized_insensitive = h.randomized;
    p.sens_a = h.sa;
    p.sens_b = h.sb;
    read_table(r, std::size_t{1} << (h.sa.size() + h.sb.size()), p.mu, p.sigma);
    return p;
}

void save_wkr_csv(const WkrProfile& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "delta,mu,sigma\n";
    for (std::size_t i = 0; i < p.mu.size(); ++i) out << i << ',' << p.mu[i] << ',' << p.sigma[i] << '\n';
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

void save_jwkr_csv(const JwkrProfile& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "a,b,delta_a,delta_b,mu,sigma\n";
    const std::size_t nb = p.sens_b.size();
    for (std::size_t i = 0; i < p.mu.size(); ++i) {
        const auto a = static_cast<std::uint32_t>(i >> nb);
        const auto b = static_cast<std::uint32_t>(i & ((std::size_t{1} << nb) - 1));
        out << a << ',' << b << ',' << expand_bits(a, p.sens_a) << ',' << expand_bits(b, p.sens_b) << ',' << p.mu[i]
            << ',' << p.sigma[i] << '\n';
    }
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

}  // namespace rxnc
