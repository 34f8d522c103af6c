#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rxnc/rx_data.hpp"
#include "rxnc/scorer.hpp"

namespace rxnc {

/// Responses below this standard deviation are floored when dividing.
constexpr double kSigmaFloor = 1e-4;

/// Base-2 log-odds of a clamped score.
double loglik(double v);

/// Wrong-key response over all 2^16 single-key differences delta.
/// For delta, C is decrypted with rk ^ delta and C' with rk' ^ (delta <<< lambda),
/// which for Simon is exactly the companion of the guess rk ^ delta.
struct WkrProfile {
    std::vector<double> mu;     // 65536 entries, indexed by delta
    std::vector<double> sigma;  // 65536 entries
    std::string distinguisher;
    std::string cipher;
    int lambda = 1;
    int rounds = 0;  // distinguisher rounds; the profiled subkey is that of round rounds + 1
    std::size_t samples_per_delta = 0;
};

/// Joint response over the sensitive subspaces of the two related subkeys.
/// Cell index = (proj_a(delta_a) << |sens_b|) | proj_b(delta_b), where bit i of
/// proj_a is bit sens_a[i] of delta_a.
struct JwkrProfile {
    std::vector<int> sens_a;
    std::vector<int> sens_b;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::string distinguisher;
    std::string cipher;
    int lambda = 1;
    int rounds = 0;
    std::size_t samples_per_cell = 0;
    bool randomized_insensitive = false;

    std::size_t cells() const { return mu.size(); }
};

/// Largest combined sensitive-set size accepted by the joint profile and search.
constexpr std::size_t kMaxJointBits = 26;

/// Bit i of the result is bit positions[i] of x.
std::uint32_t project_bits(Word x, const std::vector<int>& positions);
/// Inverse of project_bits on the subspace: places bit i of idx at positions[i].
Word expand_bits(std::uint32_t idx, const std::vector<int>& positions);

struct ProfileOptions {
    std::size_t samples = 200;  // groups per delta (or per cell)
    std::uint64_t seed = 0;
    int workers = 1;
    /// Joint profile only: also XOR uniformly random bits outside the sensitive
    /// sets into each group's decryption subkeys, mimicking attack candidates
    /// whose insensitive bits are unknown.
    bool randomize_insensitive = false;
};

/// Profiles the subkey of round spec.rounds + 1. Each delta gets fresh real
/// groups (fresh key pair per group) from its own seed stream.
WkrProfile wkr_profile(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                       const DataFormatSpec& spec, const ProfileOptions& opt);

/// Throws std::invalid_argument when a set is empty, has duplicates or
/// positions outside 0..15, or |sens_a| + |sens_b| > kMaxJointBits.
JwkrProfile jwkr_profile(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                         const DataFormatSpec& spec, const std::vector<int>& sens_a, const std::vector<int>& sens_b,
                         const ProfileOptions& opt);

/// m groups of k ciphertext pairs, all under one related key pair.
struct CiphertextStructure {
    CipherId cipher = CipherId::Simon32_64;
    int lambda = 1;
    int rounds = 0;  // rounds the ciphertexts have been encrypted
    int pairs_per_group = 1;
    std::vector<BlockPair> pairs;

    std::size_t groups() const {
        return pairs_per_group > 0 ? pairs.size() / static_cast<std::size_t>(pairs_per_group) : 0;
    }
};

/// Encrypts m groups of k fresh RX plaintext pairs under (K, K <<< lambda).
CiphertextStructure make_structure(CipherId cipher, const HalfRxDifference& d, int rounds, std::size_t m, int k,
                                   const MasterKey& key, std::uint64_t seed);

/// Peels one round off every pair with the subkey pair (ka, kb).
CiphertextStructure decrypt_structure(const CiphertextStructure& cs, Word ka, Word kb);

/// Subkey pair for the last round of cs when the first member is `key`
/// (Simon only; rejects Simeck with std::invalid_argument).
Word companion_subkey(const CiphertextStructure& cs, Word key);

struct KeyCandidate {
    Word key_a = 0;  // subkey guess applied to C
    Word key_b = 0;  // subkey guess applied to C'
    double score = 0.0;          // sum of log-odds over the m groups
    double mean_response = 0.0;  // mean raw score over the m groups
    int iteration = 0;
};

struct KeyCandidateList {
    std::vector<KeyCandidate> entries;  // l * n, in search order
    int l = 0;
    int n = 0;

    /// Highest-scoring entry (first one on ties). Requires a non-empty list.
    const KeyCandidate& best() const;
};

struct SearchParams {
    int n = 32;
    int l = 4;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// True subkey pair for the round being searched. Only synthetic oracles read
/// it (through the hint), and only to emulate a distinguisher's response.
struct KeyTruth {
    Word key_a = 0;
    Word key_b = 0;
};

/// Iterative candidate recommendation over all 2^16 subkeys of the last round
/// of cs. Each iteration decrypts with every candidate of the batch, records
/// (candidate, log-odds sum), and picks the n best not-yet-tried keys by
///   lambda_k = sum_{c in batch} (m_c - mu[c ^ k])^2 / sigma[c ^ k]^2.
/// Returns exactly l * n entries.
KeyCandidateList bayesian_key_search(const CiphertextStructure& cs, const GroupScorer& scorer,
                                     const WkrProfile& profile, const SearchParams& p,
                                     const std::optional<KeyTruth>& truth = std::nullopt);

/// Same procedure over candidate pairs supported on the profile's sensitive
/// sets (all other bits zero).
KeyCandidateList joint_bayesian_key_search(const CiphertextStructure& cs, const GroupScorer& scorer,
                                           const JwkrProfile& profile, const SearchParams& p,
                                           const std::optional<KeyTruth>& truth = std::nullopt);

/// Log-odds sum and mean response of the structure decrypted with (ka, kb).
struct CandidateScore {
    double score = 0.0;
    double mean_response = 0.0;
};
CandidateScore score_candidate(const CiphertextStructure& cs, const GroupScorer& scorer, Word ka, Word kb,
                               std::uint8_t hint = kNoHint);

/// Binary profile files; layout in docs/file-formats.md.
void save_wkr(const WkrProfile& p, const std::string& path, std::uint64_t config_hash = 0);
WkrProfile load_wkr(const std::string& path);
void save_jwkr(const JwkrProfile& p, const std::string& path, std::uint64_t config_hash = 0);
JwkrProfile load_jwkr(const std::string& path);

/// Plot data: "delta,mu,sigma" rows, or "a,b,delta_a,delta_b,mu,sigma" for joint tables.
void save_wkr_csv(const WkrProfile& p, const std::string& path);
void save_jwkr_csv(const JwkrProfile& p, const std::string& path);

}  // namespace rxnc
