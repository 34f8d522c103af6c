#include "rxnc/attack.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

#include "rxnc/parallel.hpp"
#include "rxnc/random.hpp"

namespace rxnc {

std::string_view guess_mode_name(GuessMode m) { return m == GuessMode::Single ? "single" : "joint"; }

GuessMode parse_guess_mode(std::string_view s) {
    if (s == "single") return GuessMode::Single;
    if (s == "joint") return GuessMode::Joint;
    throw std::invalid_argument("unknown guess mode '" + std::string(s) + "'");
}

void AttackConfig::validate() const {
    d.validate();
    if (total_rounds < 3) throw std::invalid_argument("attack: total_rounds must be >= 3");
    if (m < 1) throw std::invalid_argument("attack: m must be >= 1");
    if (k < 1) throw std::invalid_argument("attack: k must be >= 1");
    if (!std::isfinite(c1) || !std::isfinite(c2)) throw std::invalid_argument("attack: thresholds must be finite");
    if (t < 1) throw std::invalid_argument("attack: t must be >= 1");
    if (l < 1 || n < 1) throw std::invalid_argument("attack: l and n must be >= 1");
    if (stages != 1 && stages != 2) throw std::invalid_argument("attack: stages must be 1 or 2");
    if (max_survivors < 0) throw std::invalid_argument("attack: max_survivors must be >= 0");
    if (mode == GuessMode::Single && cipher != CipherId::Simon32_64) {
        throw std::invalid_argument("attack: single-key guessing needs Simon's linear key schedule; use joint mode");
    }
}

std::vector<std::string> attack_preset_names() {
    return {"simon-oracle-desk", "simon-desk", "simeck-desk", "simon-14r", "simeck-16r"};
}

AttackConfig attack_preset(const std::string& name) {
    AttackConfig c;
    c.name = name;
    if (name == "simon-oracle-desk") {
        c.cipher = CipherId::Simon32_64;
        c.d = {15, 0x3};
        c.format = BaseFormat::D5;
        c.mode = GuessMode::Single;
        c.total_rounds = 10;
        c.m = 64;
        c.k = 1;
        c.t = 16;
        c.l = 4;
        c.n = 32;
        return c;
    }
    if (name == "simon-desk") {
        c.cipher = CipherId::Simon32_64;
        c.d = {13, 0x2};
        c.format = BaseFormat::D5;
        c.mode = GuessMode::Single;
        c.total_rounds = 10;
        c.m = 1024;
        c.k = 1;
        c.t = 1;
        c.l = 16;
        c.n = 32;
        c.stages = 2;
        c.max_survivors = 8;
        return c;
    }
    if (name == "simeck-desk") {
        c.cipher = CipherId::Simeck32_64;
        c.d = {3, 0x1};
        c.format = BaseFormat::D5;
        c.mode = GuessMode::Joint;
        c.total_rounds = 11;
        c.m = 8192;
        c.k = 1;
        c.t = 1;
        c.l = 32;
        c.n = 32;
        c.stages = 1;
        return c;
    }
    if (name == "simon-14r") {
        c.cipher = CipherId::Simon32_64;
        c.d = {15, 0x3};
        c.format = BaseFormat::D5;
        c.mode = GuessMode::Single;
        c.total_rounds = 14;
        c.m = 1024;
        c.k = 28;
        c.c1 = 500;
        c.c2 = 1000;
        c.t = 1024;
        c.l = 6;
        c.n = 32;
        return c;
    }
    if (name == "simeck-16r") {
        c.cipher = CipherId::Simeck32_64;
        c.d = {1, 0x4};
        c.format = BaseFormat::D7;
        c.mode = GuessMode::Joint;
        c.total_rounds = 16;
        c.m = 1024;
        c.k = 36;
        c.c1 = 150;
        c.c2 = 1000;
        c.t = 1024;
        c.l = 4;
        c.n = 32;
        return c;
    }
    throw std::invalid_argument("unknown attack preset '" + name + "'");
}

Complexity complexity_report(const AttackConfig& cfg, int recovered_bits) {
    Complexity c;
    c.data_plaintexts = static_cast<std::uint64_t>(cfg.m) * static_cast<std::uint64_t>(cfg.k) * 2;
    c.data_log2 = std::log2(static_cast<double>(c.data_plaintexts));
    c.time_log2 = 64.0 - recovered_bits;
    return c;
}

namespace {

Word full_mask(const std::vector<int>& positions) {
    Word m = 0;
    for (int p : positions) m = static_cast<Word>(m | (1u << p));
    return m;
}

struct StageShape {
    Word mask_a = 0xFFFF;
    Word mask_b = 0xFFFF;
    int subkey_bits = 16;
    int member_bits = 16;
};

StageShape shape_of(const AttackConfig& cfg, const StageInputs& s) {
    StageShape sh;
    if (cfg.mode == GuessMode::Joint) {
        sh.mask_a = full_mask(s.jwkr->sens_a);
        sh.mask_b = full_mask(s.jwkr->sens_b);
        sh.subkey_bits = std::popcount(static_cast<unsigned>(sh.mask_a | sh.mask_b));
        sh.member_bits = static_cast<int>(s.jwkr->sens_a.size() + s.jwkr->sens_b.size());
    }
    return sh;
}

void check_stage(const AttackConfig& cfg, const StageInputs& s, int distinguisher_rounds, const char* which) {
    const std::string w(which);
    if (!s.scorer) throw std::invalid_argument("attack: missing " + w + " distinguisher");
    if (s.scorer->pairs_per_group() != cfg.k) {
        throw std::invalid_argument("attack: " + w + " distinguisher expects " + std::to_string(s.scorer->pairs_per_group()) +
                                    " pairs per group, config has k = " + std::to_string(cfg.k));
    }
    if (s.scorer->rounds() != 0 && s.scorer->rounds() != distinguisher_rounds) {
        throw std::invalid_argument("attack: " + w + " distinguisher covers " + std::to_string(s.scorer->rounds()) +
                                    " rounds, expected " + std::to_string(distinguisher_rounds));
    }
    int profile_rounds = 0;
    int profile_lambda = 0;
    if (cfg.mode == GuessMode::Single) {
        if (!s.wkr || s.jwkr) throw std::invalid_argument("attack: single-key mode needs a WKR profile for the " + w + " stage");
        profile_rounds = s.wkr->rounds;
        profile_lambda = s.wkr->lambda;
    } else {
        if (!s.jwkr || s.wkr) throw std::invalid_argument("attack: joint mode needs a JWKR profile for the " + w + " stage");
        profile_rounds = s.jwkr->rounds;
        profile_lambda = s.jwkr->lambda;
    }
    if (profile_rounds != distinguisher_rounds) {
        throw std::invalid_argument("attack: " + w + " profile covers " + std::to_string(profile_rounds) +
                                    "-round responses, expected " + std::to_string(distinguisher_rounds));
    }
    if (profile_lambda != cfg.d.lambda) throw std::invalid_argument("attack: " + w + " profile lambda differs from the config");
}

void check_inputs(const AttackConfig& cfg, const AttackInputs& in) {
    cfg.validate();
    check_stage(cfg, in.last, cfg.total_rounds - 1, "last-round");
    if (cfg.stages == 2) check_stage(cfg, in.penultimate, cfg.total_rounds - 2, "penultimate-round");
}

KeyCandidateList search(const AttackConfig& cfg, const CiphertextStructure& cs, const StageInputs& s,
                        std::uint64_t seed, const std::optional<KeyTruth>& truth) {
    SearchParams p{cfg.n, cfg.l, seed, cfg.workers};
    if (cfg.mode == GuessMode::Single) return bayesian_key_search(cs, *s.scorer, *s.wkr, p, truth);
    return joint_bayesian_key_search(cs, *s.scorer, *s.jwkr, p, truth);
}

bool matches(Word guess, Word truth, Word mask) { return ((guess ^ truth) & mask) == 0; }

struct Truths {
    KeyTruth last;
    KeyTruth penultimate;
};

Truths truths_for(const AttackConfig& cfg, const MasterKey& key) {
    const RxKeyPair kp = RxKeyPair::from_key(key, cfg.d.lambda);
    const RoundKeys rk = key_schedule(cfg.cipher, kp.k, cfg.total_rounds);
    const RoundKeys rkp = key_schedule(cfg.cipher, kp.k_prime, cfg.total_rounds);
    const auto R = static_cast<std::size_t>(cfg.total_rounds);
    return {{rk.keys[R - 1], rkp.keys[R - 1]}, {rk.keys[R - 2], rkp.keys[R - 2]}};
}

struct PairChoice {
    KeyCandidate first;
    std::optional<KeyCandidate> second;
};

/// Orders pairs by stage-2 score, then stage-1 score.
bool better(const PairChoice& a, const PairChoice& b) {
    const double a2 = a.second ? a.second->score : -std::numeric_limits<double>::infinity();
    const double b2 = b.second ? b.second->score : -std::numeric_limits<double>::infinity();
    if (a2 != b2) return a2 > b2;
    return a.first.score > b.first.score;
}

}  // namespace

AttackResult run_attack(const AttackConfig& cfg, const AttackInputs& in, const MasterKey& key) {
    check_inputs(cfg, in);
    const auto start = std::chrono::steady_clock::now();
    const Truths truth = truths_for(cfg, key);
    const StageShape sh1 = shape_of(cfg, in.last);
    const StageShape sh2 = cfg.stages == 2 ? shape_of(cfg, in.penultimate) : StageShape{};

    const CiphertextStructure cs =
        make_structure(cfg.cipher, cfg.d, cfg.total_rounds, cfg.m, cfg.k, key, derive_seed(cfg.seed, 1));

    auto stage2 = [&](const KeyCandidate& s, std::uint64_t seed) {
        const CiphertextStructure cs2 = decrypt_structure(cs, s.key_a, s.key_b);
        // Oracle hints for the inner search only make sense after a correct peel.
        std::optional<KeyTruth> t2;
        if (matches(s.key_a, truth.last.key_a, sh1.mask_a) && matches(s.key_b, truth.last.key_b, sh1.mask_b)) {
            t2 = truth.penultimate;
        }
        return search(cfg, cs2, in.penultimate, seed, t2).best();
    };

    AttackResult res;
    std::optional<PairChoice> chosen;
    std::optional<PairChoice> best_overall;
    std::optional<KeyCandidate> best_stage1;

    for (int rep = 0; rep < cfg.t && !chosen; ++rep) {
        res.attempts = rep + 1;
        const auto rep_seed = derive_seed(cfg.seed, 0x100000ULL + static_cast<std::uint64_t>(rep));
        const KeyCandidateList list1 = search(cfg, cs, in.last, derive_seed(rep_seed, 0), truth.last);

        // Distinct survivors, best score first.
        std::map<std::pair<Word, Word>, KeyCandidate> uniq;
        for (const auto& e : list1.entries) {
            if (!best_stage1 || e.score > best_stage1->score) best_stage1 = e;
            if (e.score < cfg.c1) continue;
            auto [it, inserted] = uniq.try_emplace({e.key_a, e.key_b}, e);
            if (!inserted && e.score > it->second.score) it->second = e;
        }
        std::vector<KeyCandidate> survivors;
        for (auto& [_, e] : uniq) survivors.push_back(e);
        std::stable_sort(survivors.begin(), survivors.end(),
                         [](const KeyCandidate& a, const KeyCandidate& b) { return a.score > b.score; });
        if (survivors.empty()) continue;
        if (cfg.max_survivors > 0 && survivors.size() > static_cast<std::size_t>(cfg.max_survivors)) {
            survivors.resize(static_cast<std::size_t>(cfg.max_survivors));
        }

        if (cfg.stages == 1) {
            chosen = PairChoice{survivors.front(), std::nullopt};
            break;
        }
        std::optional<PairChoice> rep_best;
        for (std::size_t j = 0; j < survivors.size(); ++j) {
            PairChoice pc{survivors[j], stage2(survivors[j], derive_seed(rep_seed, 1 + j))};
            if (!best_overall || better(pc, *best_overall)) best_overall = pc;
            if (pc.second->score >= cfg.c2 && (!rep_best || better(pc, *rep_best))) rep_best = pc;
        }
        if (rep_best) chosen = rep_best;
    }

    res.accepted = chosen.has_value();
    if (!chosen) {
        res.used_fallback = true;
        if (best_overall) {
            chosen = best_overall;
        } else if (cfg.stages == 2) {
            chosen = PairChoice{*best_stage1, stage2(*best_stage1, derive_seed(cfg.seed, 0x200000ULL))};
        } else {
            chosen = PairChoice{*best_stage1, std::nullopt};
        }
    }

    auto record = [&](const KeyCandidate& c, int round, const KeyTruth& t, const StageShape& sh) {
        RecoveredSubkey r;
        r.round = round;
        r.key_a = c.key_a;
        r.key_b = c.key_b;
        r.mask_a = sh.mask_a;
        r.mask_b = sh.mask_b;
        r.true_a = t.key_a;
        r.true_b = t.key_b;
        r.score = c.score;
        r.correct = matches(c.key_a, t.key_a, sh.mask_a) && matches(c.key_b, t.key_b, sh.mask_b);
        res.recovered.push_back(r);
        res.subkey_bits += sh.subkey_bits;
        res.member_bits += sh.member_bits;
    };
    record(chosen->first, cfg.total_rounds, truth.last, sh1);
    res.stage1_score = chosen->first.score;
    if (chosen->second) {
        record(*chosen->second, cfg.total_rounds - 1, truth.penultimate, sh2);
        res.stage2_score = chosen->second->score;
    }
    res.last_round_correct = res.recovered.front().correct;
    res.all_correct = std::all_of(res.recovered.begin(), res.recovered.end(),
                                  [](const RecoveredSubkey& r) { return r.correct; });
    const Complexity cx = complexity_report(cfg, res.subkey_bits);
    res.data_plaintexts = cx.data_plaintexts;
    res.data_log2 = cx.data_log2;
    res.time_log2 = cx.time_log2;
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

Thresholds calibrate_thresholds(const AttackConfig& cfg, const AttackInputs& in, std::size_t trials, double quantile) {
    if (trials == 0) throw std::invalid_argument("calibrate_thresholds: trials must be >= 1");
    if (!(quantile >= 0.0 && quantile <= 1.0)) throw std::invalid_argument("calibrate_thresholds: quantile must be in [0, 1]");
    check_inputs(cfg, in);
    const StageShape sh1 = shape_of(cfg, in.last);
    const StageShape sh2 = cfg.stages == 2 ? shape_of(cfg, in.penultimate) : StageShape{};

    Thresholds th;
    th.stage1_scores.assign(trials, 0.0);
    if (cfg.stages == 2) th.stage2_scores.assign(trials, 0.0);
    const std::uint64_t base = derive_seed(cfg.seed, 0xCA11B);
    parallel_for(trials, cfg.workers, [&](std::size_t i) {
        CounterRng rng(base, i);
        const MasterKey key = rng.master_key();
        const Truths truth = truths_for(cfg, key);
        const CiphertextStructure cs =
            make_structure(cfg.cipher, cfg.d, cfg.total_rounds, cfg.m, cfg.k, key, derive_seed(base, 0x10000 + i));
        // The attack's candidates carry zeros outside the guessed bits.
        const Word a1 = truth.last.key_a & sh1.mask_a;
        const Word b1 = truth.last.key_b & sh1.mask_b;
        th.stage1_scores[i] = score_candidate(cs, *in.last.scorer, a1, b1, 0).score;
        if (cfg.stages == 2) {
            const CiphertextStructure cs2 = decrypt_structure(cs, a1, b1);
            const Word a2 = truth.penultimate.key_a & sh2.mask_a;
            const Word b2 = truth.penultimate.key_b & sh2.mask_b;
            th.stage2_scores[i] = score_candidate(cs2, *in.penultimate.scorer, a2, b2, 0).score;
        }
    });
    auto q = [quantile](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[static_cast<std::size_t>(std::floor(quantile * static_cast<double>(v.size() - 1)))];
    };
    th.c1 = q(th.stage1_scores);
    th.c2 = cfg.stages == 2 ? q(th.stage2_scores) : 0.0;
    return th;
}

HarnessResult success_rate_harness(const AttackConfig& cfg, const AttackInputs& in, std::size_t n_attacks) {
    if (n_attacks < 1) throw std::invalid_argument("success_rate_harness: n_attacks must be >= 1");
    check_inputs(cfg, in);
    HarnessResult hr;
    hr.trials.resize(n_attacks);
    const std::uint64_t base = derive_seed(cfg.seed, 0x4A55);
    // Trials run concurrently; each attack is then single-threaded.
    AttackConfig inner = cfg;
    inner.workers = 1;
    parallel_for(n_attacks, cfg.workers, [&](std::size_t i) {
        CounterRng rng(base, i);
        AttackConfig c = inner;
        c.seed = derive_seed(base, 0x10000 + i);
        TrialLog log;
        log.trial = i;
        log.key = rng.master_key();
        log.result = run_attack(c, in, log.key);
        hr.trials[i] = std::move(log);
    });
    std::size_t ok = 0, ok_all = 0;
    for (const auto& t : hr.trials) {
        ok += t.result.last_round_correct;
        ok_all += t.result.all_correct;
    }
    hr.success_rate = static_cast<double>(ok) / static_cast<double>(n_attacks);
    hr.success_rate_all = static_cast<double>(ok_all) / static_cast<double>(n_attacks);
    return hr;
}

}  // namespace rxnc
