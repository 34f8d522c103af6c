#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxnc/cipher.hpp"

namespace rxnc {

/// Input pattern [lambda, delta_r]: left-branch RX-difference is zero.
struct HalfRxDifference {
    int lambda = 1;
    Word delta_r = 0;

    void validate() const;
    friend constexpr bool operator==(const HalfRxDifference&, const HalfRxDifference&) = default;
};

std::string to_string(const HalfRxDifference& d);

/// Related keys under the rotational convention K' = K <<< lambda (word-wise).
struct RxKeyPair {
    MasterKey k;
    MasterKey k_prime;
    int lambda = 1;

    static RxKeyPair from_key(const MasterKey& k, int lambda);
};

/// One 16-bit classifier input component, computed from a ciphertext pair.
enum class Component : std::uint8_t {
    DeltaL,      // Delta_L^r
    DeltaR,      // Delta_R^r
    LeftRot,     // C_L^r <<< lambda
    RightRot,    // C_R^r <<< lambda
    LeftPrime,   // C'_L^r
    RightPrime,  // C'_R^r
    DeltaRPrev,  // Delta_R^(r-1), one zero-key inverse round
    DeltaRPrev2, // Delta_R^(r-2), two zero-key inverse rounds
};

std::string_view component_name(Component c);

enum class BaseFormat : std::uint8_t { D1 = 1, D2, D3, D4, D5, D6, D7, D8 };

std::string_view format_name(BaseFormat f);
BaseFormat parse_format(std::string_view name);

/// Component list of a base format, in sample order.
std::span<const Component> format_components(BaseFormat f);

struct DataFormatSpec {
    BaseFormat base = BaseFormat::D5;
    int pairs_per_sample = 1;  // k of the k-multi-ciphertext extension
    int lambda = 1;
    int rounds = 1;

    void validate() const;
    std::size_t components_per_pair() const { return format_components(base).size(); }
    /// 16 * components * k.
    std::size_t width_bits() const { return 16 * components_per_pair() * static_cast<std::size_t>(pairs_per_sample); }
    std::size_t width_bytes() const { return width_bits() / 8; }
    friend bool operator==(const DataFormatSpec&, const DataFormatSpec&) = default;
};

/// Packed bit vector, bits MSB-first within each 16-bit component.
struct Sample {
    std::vector<std::uint8_t> bits;
    std::uint8_t label = 0;  // 1 = real, 0 = random
};

inline int sample_bit(std::span<const std::uint8_t> bits, std::size_t j) {
    return (bits[j >> 3] >> (7 - (j & 7))) & 1;
}

/// How label-0 samples are produced.
enum class NegativeMode : std::uint8_t {
    RandomPlaintext = 0,   // same key pair, second plaintext uniform
    RandomCiphertext = 1,  // both ciphertexts uniform bit strings
};

struct Dataset {
    DataFormatSpec spec;
    CipherId cipher = CipherId::Simon32_64;
    HalfRxDifference half_rxd;
    NegativeMode negatives = NegativeMode::RandomPlaintext;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    std::size_t count_label(std::uint8_t label) const;
};

/// Ciphertext groups (k pairs each) with one label per group. Intermediate
/// form shared by dataset generation, sensitivity tests and profiling.
struct LabeledPairs {
    int pairs_per_group = 1;
    std::vector<BlockPair> pairs;
    std::vector<std::uint8_t> labels;

    std::size_t groups() const { return labels.size(); }
    std::span<const BlockPair> group(std::size_t i) const {
        return std::span<const BlockPair>(pairs).subspan(i * static_cast<std::size_t>(pairs_per_group),
                                                         static_cast<std::size_t>(pairs_per_group));
    }
};

/// p' with p'_L = p_L <<< lambda and p'_R = (p_R <<< lambda) ^ delta_r.
Block make_rx_plaintext_pair(Block p, const HalfRxDifference& d) noexcept;

struct RxDiff {
    Word left = 0;
    Word right = 0;
    friend constexpr bool operator==(const RxDiff&, const RxDiff&) = default;
};

/// ((x_L <<< lambda) ^ x'_L, (x_R <<< lambda) ^ x'_R). Throws for lambda outside 1..15.
RxDiff rx_difference(Block x, Block x_prime, int lambda);

/// All [lambda, delta_r] with 1 <= lambda <= 15 and 1 <= hw(delta_r) <= max_hw,
/// ordered by lambda then delta_r. max_hw must be 1 or 2.
std::vector<HalfRxDifference> enumerate_half_rxd(int max_hw);

/// n_pairs RX ciphertext pairs (E_K^r(P), E_K'^r(P')) with P uniform and
/// P' = make_rx_plaintext_pair(P, d).
std::vector<BlockPair> generate_pair_set(CipherId cipher, const RxKeyPair& keys, const HalfRxDifference& d,
                                         int rounds, std::size_t n_pairs, std::uint64_t seed);

/// Computes one pair's components (in format order) into out.
void pair_components(CipherId cipher, BaseFormat base, int lambda, const BlockPair& ct, std::span<Word> out);

/// Packs the components of spec.pairs_per_sample pairs. Throws when the pair
/// count differs from spec.pairs_per_sample.
Sample build_sample(CipherId cipher, const DataFormatSpec& spec, std::span<const BlockPair> ct_pairs);

/// Same as build_sample but writes into a preallocated buffer of width_bytes().
void build_sample_into(CipherId cipher, const DataFormatSpec& spec, std::span<const BlockPair> ct_pairs,
                       std::span<std::uint8_t> out);

/// Labeled groups encrypted spec.rounds rounds. Label counts differ by at
/// most one; group i depends only on (seed, i), so output is identical for
/// any worker count.
LabeledPairs generate_labeled_pairs(CipherId cipher, const DataFormatSpec& spec, const HalfRxDifference& d,
                                    std::size_t n_groups, std::uint64_t seed,
                                    NegativeMode negatives = NegativeMode::RandomPlaintext, int workers = 1);

/// Real-only groups: one fresh key pair per group, encrypted `rounds` rounds.
/// Also returns each group's round keys for (K, K') when keys_out is set.
struct RealGroups {
    LabeledPairs pairs;
    std::vector<RoundKeys> keys;        // K schedule per group
    std::vector<RoundKeys> keys_prime;  // K' schedule per group
};
RealGroups generate_real_groups(CipherId cipher, const HalfRxDifference& d, int rounds, int pairs_per_group,
                                std::size_t n_groups, std::uint64_t seed, int workers = 1);

/// Builds a Dataset. Requires n_samples >= 2.
Dataset generate_dataset(CipherId cipher, const DataFormatSpec& spec, const HalfRxDifference& d,
                         std::size_t n_samples, std::uint64_t seed,
                         NegativeMode negatives = NegativeMode::RandomPlaintext, int workers = 1);

/// Builds one sample per labeled group.
std::vector<Sample> build_samples(CipherId cipher, const DataFormatSpec& spec, const LabeledPairs& groups,
                                  int workers = 1);

/// Binary dataset file; layout in docs/file-formats.md. Throws std::runtime_error on I/O or format errors.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace rxnc
