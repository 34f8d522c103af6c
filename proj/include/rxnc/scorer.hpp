#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "rxnc/distinguisher.hpp"
#include "rxnc/rx_data.hpp"

namespace rxnc {

/// Hint value meaning "distance to the true key unknown".
constexpr std::uint8_t kNoHint = 0xFF;

/// Scores groups of ciphertext pairs (pairs_per_group() pairs each, already
/// decrypted down to the distinguisher's round count).
///
/// hints[i] is the Hamming distance between the key guess that produced group
/// i and the true key (restricted to the guessed bits), or kNoHint. Learned
/// scorers ignore it; synthetic oracles used for testing read it.
class GroupScorer {
public:
    virtual ~GroupScorer() = default;

    virtual int pairs_per_group() const = 0;
    virtual std::string name() const = 0;
    /// Rounds the scorer was built for; 0 when it accepts any round count.
    virtual int rounds() const { return 0; }

    /// pairs.size() == out.size() * pairs_per_group(); hints is empty or out.size() long.
    virtual void score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints,
                              std::span<double> out) const = 0;
};

/// A trained model plus the data format it was trained on.
class NeuralScorer final : public GroupScorer {
public:
    NeuralScorer(CipherId cipher, DataFormatSpec spec, Model model);

    int pairs_per_group() const override { return spec_.pairs_per_sample; }
    std::string name() const override;
    int rounds() const override { return spec_.rounds; }
    void score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints,
                      std::span<double> out) const override;

    const DataFormatSpec& spec() const { return spec_; }
    const Model& model() const { return model_; }
    CipherId cipher() const { return cipher_; }

private:
    CipherId cipher_;
    DataFormatSpec spec_;
    Model model_;
};

/// Returns the same value for every group.
class ConstantScorer final : public GroupScorer {
public:
    explicit ConstantScorer(double value, int pairs_per_group = 1);

    int pairs_per_group() const override { return k_; }
    std::string name() const override;
    void score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints,
                      std::span<double> out) const override;

private:
    double value_;
    int k_;
};

/// Synthetic oracle: `hit` when the hint is 0 (correct key), `miss` otherwise.
/// With graded = true the score falls off linearly with the hint distance:
/// hit - (hit - miss) * min(hint, 16) / 16.
class OracleScorer final : public GroupScorer {
public:
    OracleScorer(double hit = 0.9, double miss = 0.5, int pairs_per_group = 1, bool graded = false);

    int pairs_per_group() const override { return k_; }
    std::string name() const override;
    void score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints,
                      std::span<double> out) const override;

    double score_for(std::uint8_t hint) const;

private:
    double hit_;
    double miss_;
    int k_;
    bool graded_;
};

/// Accuracy of a scorer on labeled groups (threshold 0.5); hints absent.
EvalReport evaluate_groups(const GroupScorer& scorer, const LabeledPairs& groups);

}  // namespace rxnc
