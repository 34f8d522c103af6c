#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rxnc/rx_data.hpp"
#include "rxnc/scorer.hpp"

namespace rxnc {

/// Which ciphertext of each pair receives the ciphertext-bit mask.
enum class XorType : std::uint8_t {
    Type1 = 1,  // C only
    Type2 = 2,  // C' only
    Type3 = 3,  // C and C' (same mask)
};

std::string_view xor_type_name(XorType t);
XorType parse_xor_type(std::string_view s);

/// Ciphertext bit positions index the packed 32-bit block: 0..15 are the
/// right branch (bit 0 = least significant), 16..31 the left branch.
constexpr bool is_left_branch_bit(int position) { return position >= 16; }

BlockPair apply_ciphertext_mask(const BlockPair& pair, XorType type, std::uint32_t mask);

struct BstConfig {
    XorType xor_type = XorType::Type1;
    std::size_t n_samples = 1u << 14;  // per bit position
    std::vector<int> bit_positions;    // empty = all 32
    bool force_zero_masks = false;     // identity modification, for testing

    void validate() const;
};

enum class KeyMaskType : std::uint8_t {
    Random = 1,    // mask bit drawn uniformly per group
    Constant = 2,  // mask bit always 1
};

std::string_view key_mask_type_name(KeyMaskType t);
KeyMaskType parse_key_mask_type(std::string_view s);

/// Which subkey of the related pair receives the key-bit mask.
enum class MaskTarget : std::uint8_t { Both = 0, FirstOnly = 1, SecondOnly = 2 };

std::string_view mask_target_name(MaskTarget t);
MaskTarget parse_mask_target(std::string_view s);

struct KbstConfig {
    KeyMaskType mask_type = KeyMaskType::Random;
    int target_round = 0;  // 1-based round of the tested subkey; must be distinguisher rounds + 1
    std::size_t n_groups = 10000;
    std::vector<int> bit_positions;  // empty = all 16
    MaskTarget target = MaskTarget::Both;
    bool force_zero_masks = false;

    void validate() const;
};

struct SensitivityProfile {
    std::string kind;         // "bst" or "kbst"
    std::string variant;      // xor type or key mask type
    std::string distinguisher;
    std::string cipher;
    int rounds = 0;           // distinguisher rounds
    std::size_t n = 0;        // samples (or groups) per position
    std::vector<int> positions;
    std::vector<double> baseline;     // accuracy on unmodified data, per position
    std::vector<double> modified;     // accuracy after masking, per position
    std::vector<double> sensitivity;  // baseline - modified

    /// 2 / sqrt(n): entries below this are at noise level.
    double noise_level() const;
};

/// Ciphertext-bit sensitivity. Each position gets a fresh labeled set from
/// its own seed stream; masks are drawn per pair and samples are rebuilt from
/// the modified ciphertexts. Deterministic for any worker count.
SensitivityProfile bst(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                       const DataFormatSpec& spec, const BstConfig& cfg, std::uint64_t seed, int workers = 1);

/// Key-bit sensitivity of the subkey one round beyond the distinguisher.
/// Real groups (fresh key pair each) are encrypted spec.rounds + 1 rounds and
/// shared by all positions; accuracy is the fraction scored as real.
SensitivityProfile kbst(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                        const DataFormatSpec& spec, const KbstConfig& cfg, std::uint64_t seed, int workers = 1);

/// Positions with |sensitivity| > threshold, ascending. Throws for threshold < 0.
std::vector<int> sensitive_bits(const SensitivityProfile& profile, double threshold);

/// The sensitive_bits() set limited to its max_count largest entries
/// (by |sensitivity|), returned ascending.
std::vector<int> top_sensitive_bits(const SensitivityProfile& profile, double threshold, std::size_t max_count);

void save_profile_json(const SensitivityProfile& profile, const std::string& path, std::uint64_t config_hash = 0);
SensitivityProfile load_profile_json(const std::string& path);
void save_profile_csv(const SensitivityProfile& profile, const std::string& path);

}  // namespace rxnc
