#include <gtest/gtest.h>

#include <filesystem>

#include "rxnc/sensitivity.hpp"

using namespace rxnc;

namespace {

// After one round a real pair has left RX difference delta_r and right RX
// difference 0 (the first subkeys carry no schedule offset). This scorer
// accepts exactly those pairs, so every sensitivity below has a closed form.
class OneRoundScorer final : public GroupScorer {
public:
    explicit OneRoundScorer(HalfRxDifference d) : d_(d) {}
    int pairs_per_group() const override { return 1; }
    std::string name() const override { return "one-round"; }
    void score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t>,
                      std::span<double> out) const override {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const RxDiff r = rx_difference(pairs[i].first, pairs[i].second, d_.lambda);
            out[i] = (r.left == d_.delta_r && r.right == 0) ? 1.0 : 0.0;
        }
    }

private:
    HalfRxDifference d_;
};

const HalfRxDifference kDiff{15, 0x3};
const DataFormatSpec kSpec{BaseFormat::D5, 1, 15, 1};

TEST(Sensitivity, CiphertextMaskTypes) {
    const BlockPair p{{0x1111, 0x2222}, {0x3333, 0x4444}};
    const std::uint32_t m = 0x00010001;
    EXPECT_EQ(apply_ciphertext_mask(p, XorType::Type1, m), (BlockPair{{0x1110, 0x2223}, {0x3333, 0x4444}}));
    EXPECT_EQ(apply_ciphertext_mask(p, XorType::Type2, m), (BlockPair{{0x1111, 0x2222}, {0x3332, 0x4445}}));
    EXPECT_EQ(apply_ciphertext_mask(p, XorType::Type3, m), (BlockPair{{0x1110, 0x2223}, {0x3332, 0x4445}}));
    EXPECT_TRUE(is_left_branch_bit(16));
    EXPECT_FALSE(is_left_branch_bit(15));
}

TEST(Sensitivity, NameParsing) {
    EXPECT_EQ(parse_xor_type(xor_type_name(XorType::Type3)), XorType::Type3);
    EXPECT_EQ(parse_key_mask_type(key_mask_type_name(KeyMaskType::Constant)), KeyMaskType::Constant);
    EXPECT_EQ(parse_mask_target(mask_target_name(MaskTarget::SecondOnly)), MaskTarget::SecondOnly);
    EXPECT_THROW(parse_xor_type("type9"), std::invalid_argument);
    EXPECT_THROW(parse_key_mask_type("maybe"), std::invalid_argument);
    EXPECT_THROW(parse_mask_target("neither"), std::invalid_argument);
}

TEST(Sensitivity, OneRoundScorerIsPerfect) {
    const OneRoundScorer s(kDiff);
    const EvalReport r = evaluate_groups(s, generate_labeled_pairs(CipherId::Simon32_64, kSpec, kDiff, 2000, 3));
    EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
}

// A real pair fails whenever its mask bit is 1: sensitivity = P[real] * 1/2.
TEST(Sensitivity, BstMatchesClosedForm) {
    const OneRoundScorer s(kDiff);
    for (XorType t : {XorType::Type1, XorType::Type2, XorType::Type3}) {
        BstConfig cfg;
        cfg.xor_type = t;
        cfg.n_samples = 4096;
        cfg.bit_positions = {0, 7, 15, 16, 31};
        const SensitivityProfile p = bst(s, CipherId::Simon32_64, kDiff, kSpec, cfg, 5);
        ASSERT_EQ(p.positions, cfg.bit_positions);
        for (std::size_t i = 0; i < p.positions.size(); ++i) {
            EXPECT_DOUBLE_EQ(p.baseline[i], 1.0);
            EXPECT_NEAR(p.sensitivity[i], 0.25, 0.04) << "position " << p.positions[i];
        }
    }
}

TEST(Sensitivity, BstZeroMasksGiveZero) {
    BstConfig cfg;
    cfg.n_samples = 512;
    cfg.force_zero_masks = true;
    const auto p = bst(OneRoundScorer(kDiff), CipherId::Simeck32_64, kDiff, kSpec, cfg, 1);
    ASSERT_EQ(p.positions.size(), 32u);
    for (double v : p.sensitivity) EXPECT_EQ(v, 0.0);
}

TEST(Sensitivity, BstDeterministicAcrossWorkers) {
    BstConfig cfg;
    cfg.n_samples = 1024;
    const OneRoundScorer s(kDiff);
    const auto a = bst(s, CipherId::Simon32_64, kDiff, kSpec, cfg, 9, 1);
    const auto b = bst(s, CipherId::Simon32_64, kDiff, kSpec, cfg, 9, 3);
    EXPECT_EQ(a.sensitivity, b.sensitivity);
}

// A wrong bit in a decryption subkey lands in the recovered right half, so
// every masked group loses its zero right difference.
TEST(Sensitivity, KbstMatchesClosedForm) {
    const OneRoundScorer s(kDiff);
    struct Case {
        KeyMaskType type;
        MaskTarget target;
        double expected;
    };
    for (const Case c : {Case{KeyMaskType::Random, MaskTarget::Both, 0.5},
                         Case{KeyMaskType::Random, MaskTarget::FirstOnly, 0.5},
                         Case{KeyMaskType::Constant, MaskTarget::SecondOnly, 1.0},
                         Case{KeyMaskType::Constant, MaskTarget::Both, 1.0}}) {
        KbstConfig cfg;
        cfg.mask_type = c.type;
        cfg.target = c.target;
        cfg.target_round = 2;
        cfg.n_groups = 3000;
        for (CipherId cipher : {CipherId::Simon32_64, CipherId::Simeck32_64}) {
            const auto p = kbst(s, cipher, kDiff, kSpec, cfg, 4);
            ASSERT_EQ(p.positions.size(), 16u);
            for (std::size_t i = 0; i < 16; ++i) {
                EXPECT_DOUBLE_EQ(p.baseline[i], 1.0);
                EXPECT_NEAR(p.sensitivity[i], c.expected, 0.04);
            }
        }
    }
}

TEST(Sensitivity, KbstChecksInputs) {
    const OneRoundScorer s(kDiff);
    KbstConfig cfg;
    cfg.n_groups = 100;
    cfg.target_round = 3;
    EXPECT_THROW(kbst(s, CipherId::Simon32_64, kDiff, kSpec, cfg, 0), std::invalid_argument);
    cfg.target_round = 2;
    cfg.bit_positions = {16};
    EXPECT_THROW(kbst(s, CipherId::Simon32_64, kDiff, kSpec, cfg, 0), std::invalid_argument);
    cfg.bit_positions = {3, 3};
    EXPECT_THROW(kbst(s, CipherId::Simon32_64, kDiff, kSpec, cfg, 0), std::invalid_argument);
    cfg.bit_positions = {};
    cfg.force_zero_masks = true;
    for (double v : kbst(s, CipherId::Simon32_64, kDiff, kSpec, cfg, 0).sensitivity) EXPECT_EQ(v, 0.0);

    BstConfig b;
    b.bit_positions = {32};
    EXPECT_THROW(bst(s, CipherId::Simon32_64, kDiff, kSpec, b, 0), std::invalid_argument);
    b.bit_positions = {};
    const DataFormatSpec k2{BaseFormat::D5, 2, 15, 1};
    EXPECT_THROW(bst(s, CipherId::Simon32_64, kDiff, k2, b, 0), std::invalid_argument);
}

SensitivityProfile handmade() {
    SensitivityProfile p;
    p.kind = "kbst";
    p.variant = "random-both";
    p.distinguisher = "test";
    p.cipher = "simeck32_64";
    p.rounds = 9;
    p.n = 400;
    p.positions = {0, 1, 2, 3, 4, 5};
    p.baseline.assign(6, 0.6);
    p.sensitivity = {0.01, -0.08, 0.2, 0.05, 0.3, 0.0};
    for (double s : p.sensitivity) p.modified.push_back(0.6 - s);
    return p;
}

TEST(Sensitivity, SensitiveBitSelection) {
    const auto p = handmade();
    EXPECT_EQ(sensitive_bits(p, 0.04), (std::vector<int>{1, 2, 3, 4}));
    EXPECT_EQ(sensitive_bits(p, 0.0), (std::vector<int>{0, 1, 2, 3, 4}));
    EXPECT_EQ(top_sensitive_bits(p, 0.04, 2), (std::vector<int>{2, 4}));
    EXPECT_EQ(top_sensitive_bits(p, 0.04, 3), (std::vector<int>{1, 2, 4}));
    EXPECT_EQ(top_sensitive_bits(p, 0.5, 3), std::vector<int>{});
    EXPECT_THROW(sensitive_bits(p, -0.1), std::invalid_argument);
    EXPECT_THROW(top_sensitive_bits(p, -0.1, 3), std::invalid_argument);
    EXPECT_DOUBLE_EQ(p.noise_level(), 0.1);
}

TEST(Sensitivity, JsonRoundTrip) {
    const auto p = handmade();
    const auto path = (std::filesystem::temp_directory_path() / "rxnc_test_profile.json").string();
    save_profile_json(p, path, 77);
    const auto q = load_profile_json(path);
    EXPECT_EQ(q.kind, p.kind);
    EXPECT_EQ(q.variant, p.variant);
    EXPECT_EQ(q.cipher, p.cipher);
    EXPECT_EQ(q.rounds, p.rounds);
    EXPECT_EQ(q.n, p.n);
    EXPECT_EQ(q.positions, p.positions);
    EXPECT_EQ(q.sensitivity, p.sensitivity);
    std::filesystem::remove(path);
    EXPECT_THROW(load_profile_json(path), std::runtime_error);
}

TEST(Scorers, ConstantAndOracle) {
    const ConstantScorer c(0.3, 2);
    EXPECT_EQ(c.pairs_per_group(), 2);
    std::vector<BlockPair> pairs(4);
    std::vector<double> out(2);
    c.score_groups(pairs, {}, out);
    EXPECT_EQ(out, (std::vector<double>{0.3, 0.3}));

    const OracleScorer sharp(0.9, 0.5);
    EXPECT_EQ(sharp.score_for(0), 0.9);
    EXPECT_EQ(sharp.score_for(1), 0.5);
    EXPECT_EQ(sharp.score_for(kNoHint), 0.5);
    const OracleScorer graded(0.9, 0.5, 1, true);
    EXPECT_DOUBLE_EQ(graded.score_for(4), 0.8);
    EXPECT_DOUBLE_EQ(graded.score_for(16), 0.5);
    EXPECT_DOUBLE_EQ(graded.score_for(20), 0.5);
    EXPECT_EQ(graded.score_for(kNoHint), 0.5);
}

}  // namespace
