#include "rxnc/rx_data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <stdexcept>

#include "rxnc/binary_io.hpp"
#include "rxnc/parallel.hpp"
#include "rxnc/random.hpp"

namespace rxnc {

namespace {

using C = Component;

constexpr std::array kD1{C::DeltaL,    C::DeltaR,     C::LeftRot,    C::RightRot,
                         C::LeftPrime, C::RightPrime, C::DeltaRPrev, C::DeltaRPrev2};
constexpr std::array kD2{C::LeftRot, C::RightRot, C::LeftPrime, C::RightPrime};
constexpr std::array kD3{C::DeltaR, C::RightRot, C::RightPrime, C::DeltaRPrev, C::DeltaRPrev2};
constexpr std::array kD4{C::RightRot, C::RightPrime};
constexpr std::array kD5{C::DeltaR, C::DeltaRPrev, C::DeltaRPrev2};
constexpr std::array kD6{C::DeltaRPrev, C::DeltaRPrev2};
constexpr std::array kD7{C::DeltaR, C::DeltaRPrev};
constexpr std::array kD8{C::DeltaR, C::DeltaRPrev2};

// Stream ids above any sample index.
constexpr std::uint64_t kShuffleStream = ~0ULL;

}  // namespace

void HalfRxDifference::validate() const {
    if (lambda < 1 || lambda > 15) throw std::invalid_argument("half RX-difference: lambda must be in 1..15");
}

std::string to_string(const HalfRxDifference& d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "[%d, 0x%x]", d.lambda, d.delta_r);
    return buf;
}

RxKeyPair RxKeyPair::from_key(const MasterKey& k, int lambda) {
    RxKeyPair p{k, k, lambda};
    for (auto& w : p.k_prime.words) w = rotl(w, lambda);
    return p;
}

std::string_view component_name(Component c) {
    switch (c) {
        case C::DeltaL: return "dL_r";
        case C::DeltaR: return "dR_r";
        case C::LeftRot: return "CL_rot";
        case C::RightRot: return "CR_rot";
        case C::LeftPrime: return "CL_prime";
        case C::RightPrime: return "CR_prime";
        case C::DeltaRPrev: return "dR_r-1";
        case C::DeltaRPrev2: return "dR_r-2";
    }
    return "?";
}

std::string_view format_name(BaseFormat f) {
    static constexpr std::array<std::string_view, 8> names{"D1", "D2", "D3", "D4", "D5", "D6", "D7", "D8"};
    return names[static_cast<std::size_t>(f) - 1];
}

BaseFormat parse_format(std::string_view name) {
    if (name.size() == 2 && (name[0] == 'D' || name[0] == 'd') && name[1] >= '1' && name[1] <= '8') {
        return static_cast<BaseFormat>(name[1] - '0');
    }
    throw std::invalid_argument("unknown data format '" + std::string(name) + "' (expected D1..D8)");
}

std::span<const Component> format_components(BaseFormat f) {
    switch (f) {
        case BaseFormat::D1: return kD1;
        case BaseFormat::D2: return kD2;
        case BaseFormat::D3: return kD3;
        case BaseFormat::D4: return kD4;
        case BaseFormat::D5: return kD5;
        case BaseFormat::D6: return kD6;
        case BaseFormat::D7: return kD7;
        case BaseFormat::D8: return kD8;
    }
    throw std::invalid_argument("invalid base format");
}

void DataFormatSpec::validate() const {
    const auto b = static_cast<int>(base);
    if (b < 1 || b > 8) throw std::invalid_argument("data format: base must be D1..D8");
    if (pairs_per_sample < 1) throw std::invalid_argument("data format: pairs_per_sample must be >= 1");
    if (lambda < 1 || lambda > 15) throw std::invalid_argument("data format: lambda must be in 1..15");
    if (rounds < 1) throw std::invalid_argument("data format: rounds must be >= 1");
}

std::size_t Dataset::count_label(std::uint8_t label) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.label == label; }));
}

Block make_rx_plaintext_pair(Block p, const HalfRxDifference& d) noexcept {
    return {rotl(p.left, d.lambda), static_cast<Word>(rotl(p.right, d.lambda) ^ d.delta_r)};
}

RxDiff rx_difference(Block x, Block x_prime, int lambda) {
    if (lambda < 1 || lambda > 15) throw std::invalid_argument("rx_difference: lambda must be in 1..15");
    return {static_cast<Word>(rotl(x.left, lambda) ^ x_prime.left),
            static_cast<Word>(rotl(x.right, lambda) ^ x_prime.right)};
}

std::vector<HalfRxDifference> enumerate_half_rxd(int max_hw) {
    if (max_hw != 1 && max_hw != 2) throw std::invalid_argument("enumerate_half_rxd: max_hw must be 1 or 2");
    std::vector<HalfRxDifference> out;
    for (int lambda = 1; lambda <= 15; ++lambda) {
        for (std::uint32_t v = 1; v <= 0xFFFF; ++v) {
            if (std::popcount(v) <= max_hw) out.push_back({lambda, static_cast<Word>(v)});
        }
    }
    return out;
}

std::vector<BlockPair> generate_pair_set(CipherId cipher, const RxKeyPair& keys, const HalfRxDifference& d,
                                         int rounds, std::size_t n_pairs, std::uint64_t seed) {
    if (rounds < 1) throw std::invalid_argument("generate_pair_set: rounds must be >= 1");
    d.validate();
    const RoundKeys rk = key_schedule(cipher, keys.k, rounds);
    const RoundKeys rkp = key_schedule(cipher, keys.k_prime, rounds);
    CounterRng rng(seed, 0);
    std::vector<BlockPair> out(n_pairs);
    for (auto& pr : out) {
        const Block p = rng.block();
        pr = {encrypt(cipher, p, rk), encrypt(cipher, make_rx_plaintext_pair(p, d), rkp)};
    }
    return out;
}

void pair_components(CipherId cipher, BaseFormat base, int lambda, const BlockPair& ct, std::span<Word> out) {
    const Block& c = ct.first;
    const Block& cp = ct.second;
    Block prev{}, prev_p{}, prev2{}, prev2_p{};
    bool have_prev = false, have_prev2 = false;
    const auto comps = format_components(base);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        Word v = 0;
        switch (comps[i]) {
            case C::DeltaL: v = static_cast<Word>(rotl(c.left, lambda) ^ cp.left); break;
            case C::DeltaR: v = static_cast<Word>(rotl(c.right, lambda) ^ cp.right); break;
            case C::LeftRot: v = rotl(c.left, lambda); break;
            case C::RightRot: v = rotl(c.right, lambda); break;
            case C::LeftPrime: v = cp.left; break;
            case C::RightPrime: v = cp.right; break;
            case C::DeltaRPrev:
                if (!have_prev) {
                    prev = decrypt_round(cipher, c, 0);
                    prev_p = decrypt_round(cipher, cp, 0);
                    have_prev = true;
                }
                v = static_cast<Word>(rotl(prev.right, lambda) ^ prev_p.right);
                break;
            case C::DeltaRPrev2:
                if (!have_prev2) {
                    prev2 = partial_decrypt_zero_key(cipher, c, 2);
                    prev2_p = partial_decrypt_zero_key(cipher, cp, 2);
                    have_prev2 = true;
                }
                v = static_cast<Word>(rotl(prev2.right, lambda) ^ prev2_p.right);
                break;
        }
        out[i] = v;
    }
}

void build_sample_into(CipherId cipher, const DataFormatSpec& spec, std::span<const BlockPair> ct_pairs,
                       std::span<std::uint8_t> out) {
    if (ct_pairs.size() != static_cast<std::size_t>(spec.pairs_per_sample)) {
        throw std::invalid_argument("build_sample: expected " + std::to_string(spec.pairs_per_sample) +
                                    " ciphertext pairs, got " + std::to_string(ct_pairs.size()));
    }
    if (out.size() != spec.width_bytes()) throw std::invalid_argument("build_sample: output buffer size mismatch");
    const std::size_t nc = spec.components_per_pair();
    std::array<Word, 8> words{};
    std::size_t pos = 0;
    for (const auto& pr : ct_pairs) {
        pair_components(cipher, spec.base, spec.lambda, pr, std::span<Word>(words.data(), nc));
        for (std::size_t i = 0; i < nc; ++i) {
            out[pos++] = static_cast<std::uint8_t>(words[i] >> 8);
            out[pos++] = static_cast<std::uint8_t>(words[i] & 0xFF);
        }
    }
}

Sample build_sample(CipherId cipher, const DataFormatSpec& spec, std::span<const BlockPair> ct_pairs) {
    spec.validate();
    Sample s;
    s.bits.resize(spec.width_bytes());
    build_sample_into(cipher, spec, ct_pairs, s.bits);
    return s;
}

namespace {

void fill_group(CipherId cipher, const HalfRxDifference& d, int rounds, int k, bool real, NegativeMode negatives,
                CounterRng& rng, std::span<BlockPair> out, RoundKeys* rk_out = nullptr,
                RoundKeys* rkp_out = nullptr) {
    const RxKeyPair keys = RxKeyPair::from_key(rng.master_key(), d.lambda);
    RoundKeys rk = key_schedule(cipher, keys.k, rounds);
    RoundKeys rkp = key_schedule(cipher, keys.k_prime, rounds);
    for (int j = 0; j < k; ++j) {
        const Block p = rng.block();
        Block pp;
        if (real) {
            pp = make_rx_plaintext_pair(p, d);
        } else {
            pp = rng.block();
        }
        if (!real && negatives == NegativeMode::RandomCiphertext) {
            out[static_cast<std::size_t>(j)] = {rng.block(), rng.block()};
        } else {
            out[static_cast<std::size_t>(j)] = {encrypt(cipher, p, rk), encrypt(cipher, pp, rkp)};
        }
    }
    if (rk_out) *rk_out = std::move(rk);
    if (rkp_out) *rkp_out = std::move(rkp);
}

std::vector<std::uint8_t> balanced_labels(std::size_t n, std::uint64_t seed) {
    std::vector<std::uint8_t> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>((n + 1) / 2), 1);
    CounterRng rng(seed, kShuffleStream);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(labels[i - 1], labels[rng.below(i)]);
    }
    return labels;
}

}  // namespace

LabeledPairs generate_labeled_pairs(CipherId cipher, const DataFormatSpec& spec, const HalfRxDifference& d,
                                    std::size_t n_groups, std::uint64_t seed, NegativeMode negatives,
                                    int workers) {
    spec.validate();
    d.validate();
    if (d.lambda != spec.lambda) throw std::invalid_argument("data format lambda differs from the RX-difference");
    LabeledPairs out;
    out.pairs_per_group = spec.pairs_per_sample;
    out.labels = balanced_labels(n_groups, seed);
    out.pairs.resize(n_groups * static_cast<std::size_t>(spec.pairs_per_sample));
    const auto k = static_cast<std::size_t>(spec.pairs_per_sample);
    parallel_for(n_groups, workers, [&](std::size_t i) {
        CounterRng rng(seed, i);
        fill_group(cipher, d, spec.rounds, spec.pairs_per_sample, out.labels[i] == 1, negatives, rng,
                   std::span<BlockPair>(out.pairs).subspan(i * k, k));
    });
    return out;
}

RealGroups generate_real_groups(CipherId cipher, const HalfRxDifference& d, int rounds, int pairs_per_group,
                                std::size_t n_groups, std::uint64_t seed, int workers) {
    d.validate();
    if (rounds < 1) throw std::invalid_argument("generate_real_groups: rounds must be >= 1");
    if (pairs_per_group < 1) throw std::invalid_argument("generate_real_groups: pairs_per_group must be >= 1");
    RealGroups out;
    out.pairs.pairs_per_group = pairs_per_group;
    out.pairs.labels.assign(n_groups, 1);
    const auto k = static_cast<std::size_t>(pairs_per_group);
    out.pairs.pairs.resize(n_groups * k);
    out.keys.resize(n_groups);
    out.keys_prime.resize(n_groups);
    parallel_for(n_groups, workers, [&](std::size_t i) {
        CounterRng rng(seed, i);
        fill_group(cipher, d, rounds, pairs_per_group, true, NegativeMode::RandomPlaintext, rng,
                   std::span<BlockPair>(out.pairs.pairs).subspan(i * k, k), &out.keys[i], &out.keys_prime[i]);
    });
    return out;
}

std::vector<Sample> build_samples(CipherId cipher, const DataFormatSpec& spec, const LabeledPairs& groups,
                                  int workers) {
    spec.validate();
    std::vector<Sample> out(groups.groups());
    parallel_for(out.size(), workers, [&](std::size_t i) {
        out[i].bits.resize(spec.width_bytes());
        build_sample_into(cipher, spec, groups.group(i), out[i].bits);
        out[i].label = groups.labels[i];
    });
    return out;
}

Dataset generate_dataset(CipherId cipher, const DataFormatSpec& spec, const HalfRxDifference& d,
                         std::size_t n_samples, std::uint64_t seed, NegativeMode negatives, int workers) {
    if (n_samples < 2) throw std::invalid_argument("generate_dataset: n_samples must be >= 2");
    const LabeledPairs groups = generate_labeled_pairs(cipher, spec, d, n_samples, seed, negatives, workers);
    Dataset ds;
    ds.spec = spec;
    ds.cipher = cipher;
    ds.half_rxd = d;
    ds.negatives = negatives;
    ds.seed = seed;
    ds.samples = build_samples(cipher, spec, groups, workers);
    return ds;
}

namespace {
constexpr std::string_view kDatasetMagic = "RXDS";
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    ds.spec.validate();
    io::Writer w(path);
    w.magic(kDatasetMagic);
    w.put<std::uint32_t>(kDatasetVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ds.cipher));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ds.spec.base));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ds.spec.lambda));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ds.negatives));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.spec.pairs_per_sample));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.spec.rounds));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ds.half_rxd.lambda));
    w.put<std::uint8_t>(0);
    w.put<std::uint16_t>(ds.half_rxd.delta_r);
    w.put<std::uint64_t>(ds.samples.size());
    w.put<std::uint64_t>(ds.seed);
    w.put<std::uint64_t>(ds.count_label(1));
    w.put<std::uint64_t>(ds.count_label(0));
    w.put<std::uint64_t>(ds.config_hash);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.spec.width_bits()));
    const std::size_t nbytes = ds.spec.width_bytes();
    for (const auto& s : ds.samples) {
        if (s.bits.size() != nbytes) throw std::invalid_argument("save_dataset: sample width mismatch");
        w.put<std::uint8_t>(s.label);
        w.bytes(s.bits.data(), nbytes);
    }
    w.close();
}

Dataset load_dataset(const std::string& path) {
    io::Reader r(path);
    r.expect_magic(kDatasetMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion) {
        throw std::runtime_error("'" + path + "': unsupported dataset version " + std::to_string(version));
    }
    Dataset ds;
    const auto cipher = r.get<std::uint8_t>();
    if (cipher > 1) throw std::runtime_error("'" + path + "': bad cipher id");
    ds.cipher = static_cast<CipherId>(cipher);
    ds.spec.base = static_cast<BaseFormat>(r.get<std::uint8_t>());
    ds.spec.lambda = r.get<std::uint8_t>();
    const auto neg = r.get<std::uint8_t>();
    if (neg > 1) throw std::runtime_error("'" + path + "': bad negative mode");
    ds.negatives = static_cast<NegativeMode>(neg);
    ds.spec.pairs_per_sample = static_cast<int>(r.get<std::uint32_t>());
    ds.spec.rounds = static_cast<int>(r.get<std::uint32_t>());
    ds.half_rxd.lambda = r.get<std::uint8_t>();
    (void)r.get<std::uint8_t>();
    ds.half_rxd.delta_r = r.get<std::uint16_t>();
    const auto n = r.get<std::uint64_t>();
    ds.seed = r.get<std::uint64_t>();
    const auto n_real = r.get<std::uint64_t>();
    const auto n_random = r.get<std::uint64_t>();
    ds.config_hash = r.get<std::uint64_t>();
    const auto width = r.get<std::uint32_t>();
    try {
        ds.spec.validate();
        ds.half_rxd.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("'" + path + "': " + e.what());
    }
    if (width != ds.spec.width_bits()) throw std::runtime_error("'" + path + "': width does not match format");
    if (n_real + n_random != n) throw std::runtime_error("'" + path + "': label counts do not add up");
    const std::size_t nbytes = ds.spec.width_bytes();
    ds.samples.resize(n);
    for (auto& s : ds.samples) {
        s.label = r.get<std::uint8_t>();
        if (s.label > 1) throw std::runtime_error("'" + path + "': bad label byte");
        s.bits.resize(nbytes);
        r.bytes(s.bits.data(), nbytes);
    }
    if (!r.at_eof()) throw std::runtime_error("'" + path + "': trailing bytes after samples");
    if (ds.count_label(1) != n_real) throw std::runtime_error("'" + path + "': label counts disagree with header");
    return ds;
}

}  // namespace rxnc
