#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rxnc/keyrank.hpp"
#include "rxnc/rx_data.hpp"
#include "rxnc/scorer.hpp"

namespace rxnc {

/// Single: one subkey guess per round, its companion derived from the key
/// schedule (Simon). Joint: subkey pairs restricted to sensitive bits.
enum class GuessMode : std::uint8_t { Single = 0, Joint = 1 };

std::string_view guess_mode_name(GuessMode m);
GuessMode parse_guess_mode(std::string_view s);

struct AttackConfig {
    std::string name = "custom";
    CipherId cipher = CipherId::Simon32_64;
    HalfRxDifference d{15, 0x3};
    BaseFormat format = BaseFormat::D5;
    GuessMode mode = GuessMode::Single;
    int total_rounds = 10;
    std::size_t m = 64;  // groups per structure
    int k = 1;           // pairs per group
    double c1 = 0.0;     // last-round candidates with score >= c1 survive
    double c2 = 0.0;     // penultimate-round candidates with score >= c2 are accepted
    int t = 16;          // repeat cap
    int l = 4;
    int n = 32;
    int stages = 2;      // 1 = last-round subkey only
    int max_survivors = 0;  // stage-1 survivors passed to stage 2 per repeat, best first; 0 = all
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const;
};

/// Names of the shipped presets: desk-scale and full-scale configurations.
std::vector<std::string> attack_preset_names();
/// Throws std::invalid_argument for an unknown name.
AttackConfig attack_preset(const std::string& name);

/// Distinguisher and wrong-key profile for one attack stage. Exactly one of
/// wkr/jwkr must be set, matching the guess mode.
struct StageInputs {
    const GroupScorer* scorer = nullptr;
    const WkrProfile* wkr = nullptr;
    const JwkrProfile* jwkr = nullptr;
};

struct AttackInputs {
    StageInputs last;         // distinguisher over total_rounds - 1 rounds
    StageInputs penultimate;  // distinguisher over total_rounds - 2 rounds; unused when stages == 1
};

struct RecoveredSubkey {
    int round = 0;       // 1-based round of the subkey
    Word key_a = 0;      // guess for the subkey applied to C
    Word key_b = 0;      // guess for the subkey applied to C'
    Word mask_a = 0;     // bits of key_a that were guessed; others undetermined
    Word mask_b = 0;
    Word true_a = 0;
    Word true_b = 0;
    double score = 0.0;
    bool correct = false;  // guessed bits of both members match the true subkeys
};

struct AttackResult {
    std::vector<RecoveredSubkey> recovered;  // last round first
    double stage1_score = 0.0;
    double stage2_score = 0.0;
    int attempts = 0;
    bool accepted = false;      // a pair passed both thresholds
    bool used_fallback = false;  // best pair over all repeats returned instead
    double wall_seconds = 0.0;
    std::uint64_t data_plaintexts = 0;
    double data_log2 = 0.0;
    int subkey_bits = 0;  // distinct guessed subkey bit positions, summed over rounds
    int member_bits = 0;  // guessed bits of both members, summed over rounds
    double time_log2 = 0.0;
    bool last_round_correct = false;
    bool all_correct = false;
};

struct Complexity {
    std::uint64_t data_plaintexts = 0;
    double data_log2 = 0.0;
    double time_log2 = 0.0;
};

/// data = m * k * 2 chosen plaintexts; time = 2^(64 - recovered_bits) brute-force remainder.
Complexity complexity_report(const AttackConfig& cfg, int recovered_bits);

/// Runs the staged key recovery against the given master key. The key seeds
/// the ciphertext structure and is used afterwards to grade the result; only
/// synthetic oracle scorers see it during the search, through hints.
AttackResult run_attack(const AttackConfig& cfg, const AttackInputs& in, const MasterKey& key);

struct Thresholds {
    double c1 = 0.0;
    double c2 = 0.0;
    std::vector<double> stage1_scores;  // correct-key scores, one per trial
    std::vector<double> stage2_scores;
};

/// Correct-key scores over fresh structures; thresholds are their `quantile`
/// order statistics. Throws for trials == 0 or quantile outside [0, 1].
Thresholds calibrate_thresholds(const AttackConfig& cfg, const AttackInputs& in, std::size_t trials,
                                double quantile = 0.1);

struct TrialLog {
    std::size_t trial = 0;
    MasterKey key;
    AttackResult result;
};

struct HarnessResult {
    double success_rate = 0.0;      // last-round subkey (guessed bits) recovered
    double success_rate_all = 0.0;  // every guessed bit of every stage recovered
    std::vector<TrialLog> trials;
};

/// n_attacks independent attacks under fresh random master keys.
HarnessResult success_rate_harness(const AttackConfig& cfg, const AttackInputs& in, std::size_t n_attacks);

}  // namespace rxnc
