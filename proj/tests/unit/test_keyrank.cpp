#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "rxnc/keyrank.hpp"
#include "rxnc/random.hpp"

using namespace rxnc;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("rxnc_test_" + name)).string();
}

KeyTruth last_subkeys(CipherId c, const MasterKey& key, int lambda, int rounds) {
    const RxKeyPair kp = RxKeyPair::from_key(key, lambda);
    return {key_schedule(c, kp.k, rounds).keys.back(), key_schedule(c, kp.k_prime, rounds).keys.back()};
}

TEST(KeyRank, LogLikelihood) {
    EXPECT_DOUBLE_EQ(loglik(0.5), 0.0);
    EXPECT_NEAR(loglik(0.8), 2.0, 1e-12);
    EXPECT_NEAR(loglik(0.2), -2.0, 1e-12);
    EXPECT_TRUE(std::isfinite(loglik(0.0)));
    EXPECT_TRUE(std::isfinite(loglik(1.0)));
    EXPECT_LT(loglik(0.0), -20.0);
}

TEST(KeyRank, ProjectExpandRoundTrip) {
    const std::vector<int> pos{1, 4, 15};
    EXPECT_EQ(project_bits(0x8012, pos), 0b111u);
    EXPECT_EQ(project_bits(0x0010, pos), 0b010u);
    for (std::uint32_t i = 0; i < 8; ++i) EXPECT_EQ(project_bits(expand_bits(i, pos), pos), i);
    EXPECT_EQ(expand_bits(0b101, pos), 0x8002);
}

TEST(KeyRank, PeelingWithTrueSubkeysUndoesLastRound) {
    const HalfRxDifference d{15, 0x3};
    CounterRng rng(2, 0);
    for (CipherId c : {CipherId::Simon32_64, CipherId::Simeck32_64}) {
        const MasterKey key = rng.master_key();
        const auto cs6 = make_structure(c, d, 6, 40, 2, key, 17);
        const auto cs5 = make_structure(c, d, 5, 40, 2, key, 17);
        ASSERT_EQ(cs6.groups(), 40u);
        const KeyTruth t = last_subkeys(c, key, 15, 6);
        const auto peeled = decrypt_structure(cs6, t.key_a, t.key_b);
        EXPECT_EQ(peeled.rounds, 5);
        EXPECT_EQ(peeled.pairs, cs5.pairs);
    }
}

TEST(KeyRank, CompanionSubkeyFollowsSchedule) {
    CounterRng rng(3, 0);
    for (int rounds : {3, 7, 11}) {
        const MasterKey key = rng.master_key();
        const auto cs = make_structure(CipherId::Simon32_64, {1, 0x6}, rounds, 4, 1, key, 1);
        const KeyTruth t = last_subkeys(CipherId::Simon32_64, key, 1, rounds);
        EXPECT_EQ(companion_subkey(cs, t.key_a), t.key_b);
    }
    const auto cs = make_structure(CipherId::Simeck32_64, {1, 0x4}, 5, 4, 1, MasterKey{}, 1);
    EXPECT_THROW(companion_subkey(cs, 0), std::invalid_argument);
}

TEST(KeyRank, OracleWrongKeyResponse) {
    const OracleScorer oracle(0.9, 0.5);
    ProfileOptions opt;
    opt.samples = 2;
    const auto p = wkr_profile(oracle, CipherId::Simon32_64, {15, 0x3}, {BaseFormat::D5, 1, 15, 4}, opt);
    ASSERT_EQ(p.mu.size(), 65536u);
    EXPECT_EQ(p.mu[0], 0.9);
    for (std::size_t i = 1; i < p.mu.size(); ++i) ASSERT_EQ(p.mu[i], 0.5);
    EXPECT_EQ(p.rounds, 4);
    EXPECT_EQ(p.samples_per_delta, 2u);
}

TEST(KeyRank, SearchFindsKeyWithGradedOracle) {
    const OracleScorer oracle(0.9, 0.5, 1, true);
    const HalfRxDifference d{15, 0x3};
    ProfileOptions opt;
    opt.samples = 2;
    const auto prof = wkr_profile(oracle, CipherId::Simon32_64, d, {BaseFormat::D5, 1, 15, 6}, opt);
    const MasterKey key = MasterKey::from_printed(0x1918, 0x1110, 0x0908, 0x0100);
    const auto cs = make_structure(CipherId::Simon32_64, d, 7, 16, 1, key, 5);
    const KeyTruth t = last_subkeys(CipherId::Simon32_64, key, 15, 7);
    SearchParams sp;
    sp.l = 8;
    sp.n = 32;
    sp.seed = 11;
    const auto list = bayesian_key_search(cs, oracle, prof, sp, t);
    ASSERT_EQ(list.entries.size(), 256u);
    EXPECT_EQ(list.best().key_a, t.key_a);
    EXPECT_EQ(list.best().key_b, t.key_b);
    EXPECT_EQ(list.entries.back().iteration, 7);

    sp.workers = 2;
    const auto again = bayesian_key_search(cs, oracle, prof, sp, t);
    for (std::size_t i = 0; i < list.entries.size(); ++i) ASSERT_EQ(again.entries[i].key_a, list.entries[i].key_a);
}

TEST(KeyRank, JointSearchRecoversProjection) {
    const OracleScorer oracle(0.9, 0.5, 1, true);
    const HalfRxDifference d{1, 0x4};
    const std::vector<int> a{0, 1, 2}, b{3, 4, 5};
    ProfileOptions opt;
    opt.samples = 4;
    const DataFormatSpec spec{BaseFormat::D5, 1, 1, 5};
    const auto prof = jwkr_profile(oracle, CipherId::Simeck32_64, d, spec, a, b, opt);
    ASSERT_EQ(prof.cells(), 64u);
    EXPECT_EQ(prof.mu[0], 0.9);
    const MasterKey key = CounterRng(8, 0).master_key();
    const auto cs = make_structure(CipherId::Simeck32_64, d, 6, 8, 1, key, 2);
    const KeyTruth t = last_subkeys(CipherId::Simeck32_64, key, 1, 6);
    SearchParams sp;
    sp.l = 2;
    sp.n = 32;
    const auto list = joint_bayesian_key_search(cs, oracle, prof, sp, t);
    ASSERT_EQ(list.entries.size(), 64u);
    EXPECT_EQ(list.best().key_a, expand_bits(project_bits(t.key_a, a), a));
    EXPECT_EQ(list.best().key_b, expand_bits(project_bits(t.key_b, b), b));
}

TEST(KeyRank, JointProfileRejectsBadSets) {
    const OracleScorer oracle;
    const DataFormatSpec spec{BaseFormat::D5, 1, 1, 5};
    const HalfRxDifference d{1, 0x4};
    ProfileOptions opt;
    opt.samples = 1;
    auto run = [&](std::vector<int> a, std::vector<int> b) {
        return jwkr_profile(oracle, CipherId::Simeck32_64, d, spec, a, b, opt);
    };
    EXPECT_THROW(run({}, {1}), std::invalid_argument);
    EXPECT_THROW(run({1, 1}, {2}), std::invalid_argument);
    EXPECT_THROW(run({16}, {2}), std::invalid_argument);
    std::vector<int> all(16);
    for (int i = 0; i < 16; ++i) all[static_cast<std::size_t>(i)] = i;
    EXPECT_THROW(run(all, std::vector<int>(all.begin(), all.begin() + 11)), std::invalid_argument);
}

TEST(KeyRank, ProfileFilesRoundTrip) {
    WkrProfile w;
    w.mu.assign(65536, 0.5);
    w.sigma.assign(65536, 0.1);
    w.mu[7] = 0.75;
    w.distinguisher = "test";
    w.cipher = "simon32_64";
    w.lambda = 15;
    w.rounds = 9;
    w.samples_per_delta = 200;
    const auto pw = temp_path("wkr.bin");
    save_wkr(w, pw, 5);
    const auto w2 = load_wkr(pw);
    EXPECT_EQ(w2.mu, w.mu);
    EXPECT_EQ(w2.sigma, w.sigma);
    EXPECT_EQ(w2.lambda, 15);
    EXPECT_EQ(w2.rounds, 9);
    EXPECT_EQ(w2.samples_per_delta, 200u);
    std::filesystem::resize_file(pw, 100);
    EXPECT_THROW(load_wkr(pw), std::runtime_error);
    std::filesystem::remove(pw);

    JwkrProfile j;
    j.sens_a = {1, 2};
    j.sens_b = {3};
    j.mu = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    j.sigma.assign(8, 0.05);
    j.cipher = "simeck32_64";
    j.randomized_insensitive = true;
    const auto pj = temp_path("jwkr.bin");
    save_jwkr(j, pj);
    const auto j2 = load_jwkr(pj);
    EXPECT_EQ(j2.sens_a, j.sens_a);
    EXPECT_EQ(j2.sens_b, j.sens_b);
    EXPECT_EQ(j2.mu, j.mu);
    EXPECT_TRUE(j2.randomized_insensitive);
    std::filesystem::remove(pj);
}

TEST(KeyRank, ConstantScorerProfilesAndSearch) {
    const ConstantScorer flat(0.3);
    ProfileOptions opt;
    opt.samples = 2;
    const DataFormatSpec spec{BaseFormat::D5, 1, 1, 5};
    const auto w = wkr_profile(flat, CipherId::Simon32_64, {1, 0x6}, spec, opt);
    for (std::size_t i = 0; i < w.mu.size(); i += 257) {
        ASSERT_EQ(w.mu[i], 0.3);
        ASSERT_EQ(w.sigma[i], 0.0);
    }
    const std::vector<int> five{0, 3, 6, 9, 12};
    const auto j = jwkr_profile(flat, CipherId::Simeck32_64, {1, 0x4}, spec, five, five, opt);
    EXPECT_EQ(j.cells(), 1024u);
    for (std::size_t i = 0; i < j.cells(); ++i) ASSERT_EQ(j.mu[i], 0.3);

    const ConstantScorer half(0.5);
    const auto cs = make_structure(CipherId::Simon32_64, {1, 0x6}, 6, 8, 1, MasterKey{}, 3);
    SearchParams sp;
    sp.l = 3;
    sp.n = 5;
    const auto list = bayesian_key_search(cs, half, w, sp);
    ASSERT_EQ(list.entries.size(), 15u);
    for (const auto& e : list.entries) EXPECT_EQ(e.score, 0.0);
    sp.l = sp.n = 1;
    EXPECT_EQ(bayesian_key_search(cs, half, w, sp).entries.size(), 1u);
    EXPECT_THROW(bayesian_key_search(CiphertextStructure{}, half, w, sp), std::invalid_argument);
}

TEST(KeyRank, JointZeroCellMatchesDirectMeasurement) {
    // A weak 3-round model is enough: only the agreement of two estimates matters.
    const HalfRxDifference d{1, 0x4};
    const DataFormatSpec spec{BaseFormat::D5, 1, 1, 3};
    TrainSchedule s;
    s.epochs = 1;
    const Model m = train(Model(ModelConfig{spec.width_bits(), {16}, 1}),
                          generate_dataset(CipherId::Simeck32_64, spec, d, 4000, 1),
                          generate_dataset(CipherId::Simeck32_64, spec, d, 1000, 2), s)
                        .model;
    const NeuralScorer ns(CipherId::Simeck32_64, spec, m);
    ProfileOptions opt;
    opt.samples = 3000;
    const auto j = jwkr_profile(ns, CipherId::Simeck32_64, d, spec, {2}, {7}, opt);
    ASSERT_EQ(j.cells(), 4u);

    const auto real = generate_real_groups(CipherId::Simeck32_64, d, spec.rounds, 1, 3000, 99);
    std::vector<double> v(real.pairs.groups());
    ns.score_groups(real.pairs.pairs, {}, v);
    double mean = 0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    EXPECT_NEAR(j.mu[0], mean, 3 * j.sigma[0] / std::sqrt(3000.0) * std::sqrt(2.0) + 1e-12);
}

TEST(KeyRank, TinyJointSpaceIsExhaustive) {
    const OracleScorer oracle(0.9, 0.5);
    const HalfRxDifference d{1, 0x4};
    ProfileOptions opt;
    opt.samples = 1;
    const auto prof = jwkr_profile(oracle, CipherId::Simeck32_64, d, {BaseFormat::D5, 1, 1, 5}, {4}, {11}, opt);
    CounterRng rng(12, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const MasterKey key = rng.master_key();
        const auto cs = make_structure(CipherId::Simeck32_64, d, 6, 4, 1, key, static_cast<std::uint64_t>(trial));
        const KeyTruth t = last_subkeys(CipherId::Simeck32_64, key, 1, 6);
        SearchParams sp;
        sp.l = 1;
        sp.n = 4;
        const auto list = joint_bayesian_key_search(cs, oracle, prof, sp, t);
        for (const auto& e : list.entries) {
            EXPECT_EQ(e.key_a & ~Word{1u << 4}, 0);
            EXPECT_EQ(e.key_b & ~Word{1u << 11}, 0);
        }
        EXPECT_EQ(list.best().key_a, t.key_a & (1u << 4));
        EXPECT_EQ(list.best().key_b, t.key_b & (1u << 11));
    }
}

TEST(KeyRank, ShiftingResponsesAndProfileKeepsRecommendations) {
    const HalfRxDifference d{15, 0x3};
    const DataFormatSpec spec{BaseFormat::D5, 1, 15, 5};
    ProfileOptions opt;
    opt.samples = 1;
    // Dyadic levels keep the shift exact, so tie order is unchanged too.
    const OracleScorer a(0.75, 0.5, 1, true), b(0.625, 0.375, 1, true);
    const auto pa = wkr_profile(a, CipherId::Simon32_64, d, spec, opt);
    const auto pb = wkr_profile(b, CipherId::Simon32_64, d, spec, opt);
    const MasterKey key = CounterRng(4, 0).master_key();
    const auto cs = make_structure(CipherId::Simon32_64, d, 6, 16, 1, key, 1);
    const KeyTruth t = last_subkeys(CipherId::Simon32_64, key, 15, 6);
    SearchParams sp;
    sp.l = 4;
    sp.n = 16;
    const auto la = bayesian_key_search(cs, a, pa, sp, t);
    const auto lb = bayesian_key_search(cs, b, pb, sp, t);
    for (std::size_t i = 0; i < la.entries.size(); ++i) ASSERT_EQ(la.entries[i].key_a, lb.entries[i].key_a);
}

TEST(KeyRank, CandidateListBest) {
    KeyCandidateList l;
    EXPECT_THROW(l.best(), std::logic_error);
    l.entries = {{1, 1, 2.0}, {2, 2, 5.0}, {3, 3, 5.0}};
    EXPECT_EQ(l.best().key_a, 2);
}

}  // namespace
