// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is nonzero if any criterion fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "rxnc/attack.hpp"
#include "rxnc/cipher.hpp"
#include "rxnc/distinguisher.hpp"
#include "rxnc/keyrank.hpp"
#include "rxnc/random.hpp"
#include "rxnc/rx_data.hpp"
#include "rxnc/sensitivity.hpp"

using namespace rxnc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// The desk training recipe shared by every learned distinguisher below.
TrainResult train_desk(CipherId c, const HalfRxDifference& d, const DataFormatSpec& spec, std::uint64_t seed) {
    const Dataset tr = generate_dataset(c, spec, d, 1u << 17, seed * 2 + 1);
    const Dataset va = generate_dataset(c, spec, d, 1u << 14, seed * 2 + 2);
    TrainSchedule s;
    s.epochs = 20;
    s.shuffle_seed = seed;
    s.optimizer = Optimizer::Adam;
    s.weight_decay = 0.3;
    for (double& lr : s.learning_rates) lr *= 0.1;
    return train(Model(ModelConfig{spec.width_bits(), {128, 64}, seed}), tr, va, s);
}

KeyTruth last_subkeys(CipherId c, const MasterKey& key, int lambda, int rounds) {
    const RxKeyPair kp = RxKeyPair::from_key(key, lambda);
    return {key_schedule(c, kp.k, rounds).keys.back(), key_schedule(c, kp.k_prime, rounds).keys.back()};
}

// ------------------------------------------------------------------ 1..5

Verdict cipher_correctness() {
    const MasterKey key = MasterKey::from_printed(0x1918, 0x1110, 0x0908, 0x0100);
    const Block pt{0x6565, 0x6877};
    const bool simon = encrypt(CipherId::Simon32_64, pt, key_schedule(CipherId::Simon32_64, key, 32)) == Block{0xc69b, 0xe9bb};
    const bool simeck =
        encrypt(CipherId::Simeck32_64, pt, key_schedule(CipherId::Simeck32_64, key, 32)) == Block{0x770d, 0x2c76};
    std::size_t bad = 0;
    for (CipherId c : {CipherId::Simon32_64, CipherId::Simeck32_64}) {
        for (int r = 1; r <= 32; ++r) {
            CounterRng rng(1, static_cast<std::uint64_t>(r) * 2 + static_cast<std::uint64_t>(c));
            for (int i = 0; i < 10000; ++i) {
                const auto rk = key_schedule(c, rng.master_key(), r);
                const Block p = rng.block();
                if (decrypt(c, encrypt(c, p, rk), rk) != p) ++bad;
            }
        }
    }
    return {simon && simeck && bad == 0,
            fmt("simon vector %s, simeck vector %s, round-trip failures %zu of 640000", simon ? "ok" : "MISMATCH",
                simeck ? "ok" : "MISMATCH", bad)};
}

Verdict rotation_equivariance() {
    std::size_t bad = 0;
    for (CipherId c : {CipherId::Simon32_64, CipherId::Simeck32_64})
        for (int lam : {1, 5, 15})
            for (std::uint32_t x = 0; x < 0x10000; ++x) {
                const auto w = static_cast<Word>(x);
                if (round_fn(c, rotl(w, lam)) != rotl(round_fn(c, w), lam)) ++bad;
            }
    return {bad == 0, fmt("violations %zu of %d", bad, 6 * 65536)};
}

Verdict zero_key_offset() {
    std::size_t non_constant = 0;
    const HalfRxDifference d{15, 0x3};
    const int r = 8;
    for (CipherId c : {CipherId::Simon32_64, CipherId::Simeck32_64}) {
        CounterRng rng(3, static_cast<std::uint64_t>(c));
        for (int kp_i = 0; kp_i < 10; ++kp_i) {
            const RxKeyPair kp = RxKeyPair::from_key(rng.master_key(), d.lambda);
            const auto rk = key_schedule(c, kp.k, r);
            const auto rkp = key_schedule(c, kp.k_prime, r);
            std::set<Word> offsets;
            for (int i = 0; i < 1000; ++i) {
                const Block p = rng.block();
                const auto t = encrypt_trace(c, p, rk.keys);
                const auto tp = encrypt_trace(c, make_rx_plaintext_pair(p, d), rkp.keys);
                const Block e = partial_decrypt_zero_key(c, t.back(), 1);
                const Block ep = partial_decrypt_zero_key(c, tp.back(), 1);
                const Word est = static_cast<Word>(rotl(e.right, d.lambda) ^ ep.right);
                const Word truth = static_cast<Word>(rotl(t[r - 1].right, d.lambda) ^ tp[r - 1].right);
                offsets.insert(static_cast<Word>(est ^ truth));
            }
            if (offsets.size() != 1) ++non_constant;
        }
    }
    return {non_constant == 0, fmt("key pairs with a non-constant offset: %zu of 20", non_constant)};
}

Verdict enumeration() {
    const auto all = enumerate_half_rxd(2);
    const std::vector<HalfRxDifference> table{{15, 0x3},  {1, 0x6},   {12, 0x2002}, {4, 0x22},   {13, 0x4002},
                                              {3, 0x12},  {1, 0x4},   {15, 0x2},    {15, 0x3},   {1, 0x6},
                                              {6, 0x82},  {10, 0x802}};
    std::size_t missing = 0;
    for (const auto& d : table)
        if (std::find(all.begin(), all.end(), d) == all.end()) ++missing;
    return {all.size() == 2040 && missing == 0, fmt("candidates %zu, table entries missing %zu", all.size(), missing)};
}

Verdict training_machinery() {
    double worst = 0.0;
    const std::vector<std::vector<std::size_t>> shapes{{8}, {16, 8}, {6, 5, 4}};
    const std::size_t widths[] = {16, 32, 24};
    for (std::size_t si = 0; si < shapes.size(); ++si) {
        Model m(ModelConfig{widths[si], shapes[si], 40 + si});
        CounterRng rng(41, si);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(widths[si]), 24);
        Eigen::VectorXd y(24);
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.bit();
            y(j) = rng.bit();
        }
        for (auto& layer : m.layers())
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.05 * (rng.uniform() - 0.5);
        const LossAndGradient lg = loss_and_gradient(m, x, y);
        for (std::size_t l = 0; l < m.layers().size(); ++l) {
            auto& w = m.layers()[l].weights;
            Eigen::MatrixXd num(w.rows(), w.cols());
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) {
                    const double orig = w(r, c), h = 1e-6;
                    w(r, c) = orig + h;
                    const double up = mean_loss(m, x, y);
                    w(r, c) = orig - h;
                    const double down = mean_loss(m, x, y);
                    w(r, c) = orig;
                    num(r, c) = (up - down) / (2 * h);
                }
            worst = std::max(worst, (lg.grad[l].weights - num).norm() / (lg.grad[l].weights.norm() + num.norm()));
        }
    }
    auto separable = [](std::size_t n, std::uint64_t seed) {
        Dataset ds;
        ds.spec = {BaseFormat::D4, 1, 1, 1};
        CounterRng rng(seed, 0);
        for (std::size_t i = 0; i < n; ++i) {
            Sample s;
            s.bits.resize(4);
            for (auto& b : s.bits) b = static_cast<std::uint8_t>(rng() >> 56);
            s.label = static_cast<std::uint8_t>(sample_bit(s.bits, 9));
            ds.samples.push_back(std::move(s));
        }
        return ds;
    };
    TrainSchedule s;
    s.epochs = 5;
    s.batch_size = 128;
    const double acc = train(Model(ModelConfig{32, {16}, 5}), separable(8192, 1), separable(2048, 2), s).best.accuracy;
    return {worst <= 1e-4 && acc >= 0.99, fmt("max relative gradient error %.2e, separable accuracy %.4f", worst, acc)};
}

// ------------------------------------------------------------------ 6, 7

Verdict desk_accuracy() {
    int simon_ok = 0, simeck_ok = 0;
    std::string accs;
    for (std::uint64_t seed : {1, 2, 3}) {
        const double a = train_desk(CipherId::Simon32_64, {15, 0x3}, {BaseFormat::D5, 1, 15, 8}, seed).best.accuracy;
        simon_ok += a >= 0.65;
        accs += fmt(" simon:%.4f", a);
    }
    for (std::uint64_t seed : {1, 2, 3}) {
        const double a = train_desk(CipherId::Simeck32_64, {1, 0x4}, {BaseFormat::D5, 1, 1, 9}, seed).best.accuracy;
        simeck_ok += a >= 0.60;
        accs += fmt(" simeck:%.4f", a);
    }
    return {simon_ok >= 2 && simeck_ok >= 2,
            fmt("seeds passing: simon %d/3 (>=0.65), simeck %d/3 (>=0.60);", simon_ok, simeck_ok) + accs};
}

Verdict bst_structure() {
    const HalfRxDifference d{15, 0x3};
    const DataFormatSpec spec{BaseFormat::D1, 1, 15, 8};
    const TrainResult t = train_desk(CipherId::Simon32_64, d, spec, 1);
    const NeuralScorer s(CipherId::Simon32_64, spec, t.model);
    BstConfig cfg;
    cfg.xor_type = XorType::Type1;
    const SensitivityProfile p = bst(s, CipherId::Simon32_64, d, spec, cfg, 17);
    double left_mean = 0.0, right_max = -1.0;
    for (std::size_t i = 0; i < p.positions.size(); ++i) {
        if (is_left_branch_bit(p.positions[i]))
            left_mean += std::abs(p.sensitivity[i]) / 16.0;
        else
            right_max = std::max(right_max, p.sensitivity[i]);
    }
    return {left_mean < 0.02 && right_max > 0.05,
            fmt("model accuracy %.4f, left mean |s| %.4f (<0.02), right max %.4f (>0.05)", t.best.accuracy, left_mean,
                right_max)};
}

// ------------------------------------------------------------------ 8

Verdict oracle_equivalence() {
    const OracleScorer oracle(0.9, 0.5);
    const std::size_t trials = 50;
    SearchParams sp;
    sp.n = 32;
    sp.l = 4;

    const HalfRxDifference ds{15, 0x3};
    const int rs = 10;
    ProfileOptions po;
    po.samples = 1;
    const WkrProfile w = wkr_profile(oracle, CipherId::Simon32_64, ds, {BaseFormat::D5, 1, 15, rs - 1}, po);
    std::size_t single_hits = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const MasterKey key = CounterRng(81, i).master_key();
        const auto cs = make_structure(CipherId::Simon32_64, ds, rs, 64, 1, key, derive_seed(82, i));
        const KeyTruth t = last_subkeys(CipherId::Simon32_64, key, ds.lambda, rs);
        sp.seed = derive_seed(83, i);
        const KeyCandidate b = bayesian_key_search(cs, oracle, w, sp, t).best();
        single_hits += b.key_a == t.key_a && b.key_b == t.key_b;
    }

    const HalfRxDifference dj{1, 0x4};
    const int rj = 10;
    const std::vector<int> sa{5, 6, 7}, sb{6, 7, 8};
    const JwkrProfile j = jwkr_profile(oracle, CipherId::Simeck32_64, dj, {BaseFormat::D5, 1, 1, rj - 1}, sa, sb, po);
    std::size_t joint_hits = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const MasterKey key = CounterRng(84, i).master_key();
        const auto cs = make_structure(CipherId::Simeck32_64, dj, rj, 64, 1, key, derive_seed(85, i));
        const KeyTruth t = last_subkeys(CipherId::Simeck32_64, key, dj.lambda, rj);
        sp.seed = derive_seed(86, i);
        const KeyCandidate b = joint_bayesian_key_search(cs, oracle, j, sp, t).best();
        joint_hits += b.key_a == expand_bits(project_bits(t.key_a, sa), sa) &&
                      b.key_b == expand_bits(project_bits(t.key_b, sb), sb);
    }
    const double rs_single = static_cast<double>(single_hits) / trials;
    const double rs_joint = static_cast<double>(joint_hits) / trials;
    return {rs_single >= 0.9 && rs_joint >= 0.9,
            fmt("true key ranked first: single %.2f, joint 3+3 %.2f (each >=0.90)", rs_single, rs_joint)};
}

// ------------------------------------------------------------------ 9

Verdict simon_attack() {
    AttackConfig cfg = attack_preset("simon-desk");
    const DataFormatSpec s9{cfg.format, cfg.k, cfg.d.lambda, cfg.total_rounds - 1};
    const DataFormatSpec s8{cfg.format, cfg.k, cfg.d.lambda, cfg.total_rounds - 2};
    const TrainResult t9 = train_desk(cfg.cipher, cfg.d, s9, 7);
    const TrainResult t8 = train_desk(cfg.cipher, cfg.d, s8, 8);
    const NeuralScorer n9(cfg.cipher, s9, t9.model), n8(cfg.cipher, s8, t8.model);
    ProfileOptions po;
    po.samples = 200;
    po.seed = 11;
    const WkrProfile w9 = wkr_profile(n9, cfg.cipher, cfg.d, s9, po);
    po.seed = 12;
    const WkrProfile w8 = wkr_profile(n8, cfg.cipher, cfg.d, s8, po);
    const AttackInputs in{{&n9, &w9, nullptr}, {&n8, &w8, nullptr}};
    const HarnessResult h = success_rate_harness(cfg, in, 20);
    return {h.success_rate >= 0.6,
            fmt("simon %s, %d rounds, distinguishers %.4f/%.4f: last-round subkey %.2f (>=0.60), both subkeys %.2f",
                to_string(cfg.d).c_str(), cfg.total_rounds, t9.best.accuracy, t8.best.accuracy, h.success_rate,
                h.success_rate_all)};
}

Verdict simeck_attack() {
    AttackConfig cfg = attack_preset("simeck-desk");
    const DataFormatSpec s10{cfg.format, cfg.k, cfg.d.lambda, cfg.total_rounds - 1};
    const TrainResult t10 = train_desk(cfg.cipher, cfg.d, s10, 7);
    const NeuralScorer n10(cfg.cipher, s10, t10.model);
    KbstConfig kc;
    kc.target_round = cfg.total_rounds;
    kc.n_groups = 20000;
    kc.target = MaskTarget::FirstOnly;
    const auto pa = kbst(n10, cfg.cipher, cfg.d, s10, kc, 5);
    kc.target = MaskTarget::SecondOnly;
    const auto pb = kbst(n10, cfg.cipher, cfg.d, s10, kc, 5);
    const auto sa = top_sensitive_bits(pa, 0.0, 5), sb = top_sensitive_bits(pb, 0.0, 5);
    ProfileOptions po;
    po.samples = 100;
    po.seed = 11;
    po.randomize_insensitive = true;
    const JwkrProfile j = jwkr_profile(n10, cfg.cipher, cfg.d, s10, sa, sb, po);
    const AttackInputs in{{&n10, nullptr, &j}, {}};
    const HarnessResult h = success_rate_harness(cfg, in, 20);
    auto list = [](const std::vector<int>& v) {
        std::string s;
        for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
        return s;
    };
    return {h.success_rate >= 0.5,
            fmt("simeck %s, %d rounds, distinguisher %.4f, sensitive bits {%s}/{%s}, m=%zu: success %.2f (>=0.50)",
                to_string(cfg.d).c_str(), cfg.total_rounds, t10.best.accuracy, list(sa).c_str(), list(sb).c_str(),
                cfg.m, h.success_rate)};
}

// ------------------------------------------------------------------ 10

Verdict complexity() {
    AttackConfig c;
    c.m = 1024;
    c.k = 28;
    const double a = complexity_report(c, 0).data_log2;
    c.k = 36;
    const double b = complexity_report(c, 0).data_log2;
    const double t = complexity_report(c, 13).time_log2;
    const bool ok = std::round(a * 100) / 100 == 15.81 && std::round(b * 100) / 100 == 16.17 && t == 51.0;
    return {ok, fmt("data 2^%.2f and 2^%.2f, remainder 2^%.0f", a, b, t)};
}

// ------------------------------------------------------------------ 11

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RXNC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        out[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return out;
}

Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / "rxnc_acceptance_determinism";
    fs::remove_all(root);
    const std::string model = (root / "train-1" / "model.bin").string();
    const std::string oracle = R"('{"oracle":{"graded":true}}')";
    const std::vector<std::pair<std::string, std::string>> cmds{
        {"gen-data", "gen-data --cipher simon --rounds 7 --size 20000 --seed 3"},
        {"train", "train --cipher simon --rounds 5 --train-size 20000 --val-size 4000 --epochs 2 --seed 3"},
        {"bst", "bst -m " + model + " --samples 2000 --seed 3"},
        {"wkr", "wkr -m " + model + " --samples 4 --seed 3"},
        {"attack", "attack --preset simon-oracle-desk --seed 3 --set attack.last=" + oracle +
                       " --set attack.penultimate=" + oracle},
    };
    std::string detail;
    bool ok = true;
    for (const auto& [name, args] : cmds) {
        const fs::path a = root / (name + "-1"), b = root / (name + "-2");
        const int ca = run_cli(args + " -j 1 -o " + a.string());
        const int cb = run_cli(args + " -j 2 -o " + b.string());
        const bool same = ca == 0 && cb == 0 && snapshot(a) == snapshot(b) && !snapshot(a).empty();
        ok = ok && same;
        detail += fmt("%s %s; ", name.c_str(), same ? "identical" : "DIFFERENT");
    }
    fs::remove_all(root);
    return {ok, detail + "(1 vs 2 workers, all files but timing.json)"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, cipher_correctness}, {2, rotation_equivariance}, {3, zero_key_offset},
        {4, enumeration},        {5, training_machinery},    {6, desk_accuracy},
        {7, bst_structure},      {8, oracle_equivalence},    {9, [] {
             const Verdict a = simon_attack();
             std::printf("  simon part: %s\n", a.detail.c_str());
             std::fflush(stdout);
             const Verdict b = simeck_attack();
             std::printf("  simeck part: %s\n", b.detail.c_str());
             return Verdict{a.pass && b.pass, fmt("simon %s, simeck %s", a.pass ? "pass" : "fail", b.pass ? "pass" : "fail")};
         }},
        {10, complexity},        {11, determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("criterion %2d: %s  %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
