#include "rxnc/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rxnc/parallel.hpp"
#include "rxnc/random.hpp"

namespace rxnc {

std::string_view xor_type_name(XorType t) {
    switch (t) {
        case XorType::Type1: return "type1";
        case XorType::Type2: return "type2";
        case XorType::Type3: return "type3";
    }
    return "?";
}

XorType parse_xor_type(std::string_view s) {
    if (s == "type1" || s == "TYPE1" || s == "1") return XorType::Type1;
    if (s == "type2" || s == "TYPE2" || s == "2") return XorType::Type2;
    if (s == "type3" || s == "TYPE3" || s == "3") return XorType::Type3;
    throw std::invalid_argument("unknown xor type '" + std::string(s) + "'");
}

std::string_view key_mask_type_name(KeyMaskType t) { return t == KeyMaskType::Random ? "ktype1" : "ktype2"; }

KeyMaskType parse_key_mask_type(std::string_view s) {
    if (s == "ktype1" || s == "KTYPE1" || s == "random" || s == "1") return KeyMaskType::Random;
    if (s == "ktype2" || s == "KTYPE2" || s == "constant" || s == "2") return KeyMaskType::Constant;
    throw std::invalid_argument("unknown key mask type '" + std::string(s) + "'");
}

std::string_view mask_target_name(MaskTarget t) {
    switch (t) {
        case MaskTarget::Both: return "both";
        case MaskTarget::FirstOnly: return "first";
        case MaskTarget::SecondOnly: return "second";
    }
    return "?";
}

MaskTarget parse_mask_target(std::string_view s) {
    if (s == "both") return MaskTarget::Both;
    if (s == "first") return MaskTarget::FirstOnly;
    if (s == "second") return MaskTarget::SecondOnly;
    throw std::invalid_argument("unknown mask target '" + std::string(s) + "'");
}

BlockPair apply_ciphertext_mask(const BlockPair& pair, XorType type, std::uint32_t mask) {
    BlockPair out = pair;
    if (type == XorType::Type1 || type == XorType::Type3) out.first = Block::unpack(out.first.pack() ^ mask);
    if (type == XorType::Type2 || type == XorType::Type3) out.second = Block::unpack(out.second.pack() ^ mask);
    return out;
}

namespace {

std::vector<int> positions_or_all(const std::vector<int>& given, int count) {
    if (!given.empty()) return given;
    std::vector<int> all(static_cast<std::size_t>(count));
    std::iota(all.begin(), all.end(), 0);
    return all;
}

void check_positions(const std::vector<int>& positions, int count, const char* what) {
    for (int p : positions) {
        if (p < 0 || p >= count) {
            throw std::invalid_argument(std::string(what) + ": bit position " + std::to_string(p) + " out of range");
        }
    }
    std::vector<int> sorted = positions;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument(std::string(what) + ": duplicate bit positions");
    }
}

double accuracy_of(const GroupScorer& scorer, std::span<const BlockPair> pairs, std::span<const std::uint8_t> labels) {
    std::vector<double> scores(labels.size());
    scorer.score_groups(pairs, {}, scores);
    return evaluate_scores(scores, labels).accuracy;
}

constexpr std::uint64_t kMaskStream = 0x6D61736BULL;

}  // namespace

void BstConfig::validate() const {
    if (n_samples < 1) throw std::invalid_argument("bst: n_samples must be >= 1");
    check_positions(bit_positions, 32, "bst");
}

void KbstConfig::validate() const {
    if (n_groups < 1) throw std::invalid_argument("kbst: n_groups must be >= 1");
    check_positions(bit_positions, 16, "kbst");
}

double SensitivityProfile::noise_level() const { return n ? 2.0 / std::sqrt(static_cast<double>(n)) : 1.0; }

SensitivityProfile bst(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                       const DataFormatSpec& spec, const BstConfig& cfg, std::uint64_t seed, int workers) {
    cfg.validate();
    spec.validate();
    if (scorer.pairs_per_group() != spec.pairs_per_sample) {
        throw std::invalid_argument("bst: scorer group size differs from the data format's");
    }
    SensitivityProfile prof;
    prof.kind = "bst";
    prof.variant = std::string(xor_type_name(cfg.xor_type));
    prof.distinguisher = scorer.name();
    prof.cipher = std::string(cipher_name(cipher));
    prof.rounds = spec.rounds;
    prof.n = cfg.n_samples;
    prof.positions = positions_or_all(cfg.bit_positions, 32);
    const std::size_t np = prof.positions.size();
    prof.baseline.assign(np, 0.0);
    prof.modified.assign(np, 0.0);
    prof.sensitivity.assign(np, 0.0);

    parallel_for(np, workers, [&](std::size_t idx) {
        const int pos = prof.positions[idx];
        const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(pos));
        const LabeledPairs set = generate_labeled_pairs(cipher, spec, d, cfg.n_samples, s);
        std::vector<BlockPair> masked(set.pairs.size());
        CounterRng rng(s, kMaskStream);
        for (std::size_t i = 0; i < set.pairs.size(); ++i) {
            const std::uint32_t bit = cfg.force_zero_masks ? 0u : static_cast<std::uint32_t>(rng.bit());
            masked[i] = apply_ciphertext_mask(set.pairs[i], cfg.xor_type, bit << pos);
        }
        const double base = accuracy_of(scorer, set.pairs, set.labels);
        const double mod = accuracy_of(scorer, masked, set.labels);
        prof.baseline[idx] = base;
        prof.modified[idx] = mod;
        prof.sensitivity[idx] = base - mod;
    });
    return prof;
}

SensitivityProfile kbst(const GroupScorer& scorer, CipherId cipher, const HalfRxDifference& d,
                        const DataFormatSpec& spec, const KbstConfig& cfg, std::uint64_t seed, int workers) {
    cfg.validate();
    spec.validate();
    if (cfg.target_round != spec.rounds + 1) {
        throw std::invalid_argument("kbst: target round " + std::to_string(cfg.target_round) +
                                    " must be the distinguisher rounds + 1 (" + std::to_string(spec.rounds + 1) + ")");
    }
    if (scorer.pairs_per_group() != spec.pairs_per_sample) {
        throw std::invalid_argument("kbst: scorer group size differs from the data format's");
    }
    const int k = spec.pairs_per_sample;
    const auto ku = static_cast<std::size_t>(k);
    const RealGroups groups = generate_real_groups(cipher, d, spec.rounds + 1, k, cfg.n_groups, seed, workers);
    const auto r = static_cast<std::size_t>(spec.rounds);

    auto decrypt_all = [&](auto&& mask_of_group) {
        std::vector<BlockPair> out(groups.pairs.pairs.size());
        for (std::size_t g = 0; g < cfg.n_groups; ++g) {
            const Word m = mask_of_group(g);
            const Word ma = cfg.target == MaskTarget::SecondOnly ? Word{0} : m;
            const Word mb = cfg.target == MaskTarget::FirstOnly ? Word{0} : m;
            const Word ka = static_cast<Word>(groups.keys[g].keys[r] ^ ma);
            const Word kb = static_cast<Word>(groups.keys_prime[g].keys[r] ^ mb);
            for (std::size_t j = 0; j < ku; ++j) {
                const BlockPair& c = groups.pairs.pairs[g * ku + j];
                out[g * ku + j] = {decrypt_round(cipher, c.first, ka), decrypt_round(cipher, c.second, kb)};
            }
        }
        return out;
    };

    const std::vector<BlockPair> plain = decrypt_all([](std::size_t) { return Word{0}; });
    const double base = accuracy_of(scorer, plain, groups.pairs.labels);

    SensitivityProfile prof;
    prof.kind = "kbst";
    prof.variant = std::string(key_mask_type_name(cfg.mask_type)) + "-" + std::string(mask_target_name(cfg.target));
    prof.distinguisher = scorer.name();
    prof.cipher = std::string(cipher_name(cipher));
    prof.rounds = spec.rounds;
    prof.n = cfg.n_groups;
    prof.positions = positions_or_all(cfg.bit_positions, 16);
    const std::size_t np = prof.positions.size();
    prof.baseline.assign(np, base);
    prof.modified.assign(np, 0.0);
    prof.sensitivity.assign(np, 0.0);

    parallel_for(np, workers, [&](std::size_t idx) {
        const int pos = prof.positions[idx];
        CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(pos)), kMaskStream);
        const auto masked = decrypt_all([&](std::size_t) -> Word {
            if (cfg.force_zero_masks) return 0;
            const int bit = cfg.mask_type == KeyMaskType::Random ? rng.bit() : 1;
            return static_cast<Word>(bit << pos);
        });
        const double mod = accuracy_of(scorer, masked, groups.pairs.labels);
        prof.modified[idx] = mod;
        prof.sensitivity[idx] = base - mod;
    });
    return prof;
}

std::vector<int> sensitive_bits(const SensitivityProfile& profile, double threshold) {
    if (!(threshold >= 0.0)) throw std::invalid_argument("sensitive_bits: threshold must be >= 0");
    std::vector<int> out;
    for (std::size_t i = 0; i < profile.positions.size(); ++i) {
        if (std::abs(profile.sensitivity[i]) > threshold) out.push_back(profile.positions[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> top_sensitive_bits(const SensitivityProfile& profile, double threshold, std::size_t max_count) {
    if (!(threshold >= 0.0)) throw std::invalid_argument("sensitive_bits: threshold must be >= 0");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < profile.positions.size(); ++i) {
        if (std::abs(profile.sensitivity[i]) > threshold) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(profile.sensitivity[a]) > std::abs(profile.sensitivity[b]);
    });
    if (idx.size() > max_count) idx.resize(max_count);
    std::vector<int> out;
    for (std::size_t i : idx) out.push_back(profile.positions[i]);
    std::sort(out.begin(), out.end());
    return out;
}

void save_profile_json(const SensitivityProfile& p, const std::string& path, std::uint64_t config_hash) {
    nlohmann::json j;
    j["metadata"] = {{"kind", p.kind},
                     {"variant", p.variant},
                     {"distinguisher", p.distinguisher},
                     {"cipher", p.cipher},
                     {"rounds", p.rounds},
                     {"n", p.n},
                     {"noise_level", p.noise_level()},
                     {"config_hash", config_hash}};
    j["positions"] = p.positions;
    j["baseline"] = p.baseline;
    j["modified"] = p.modified;
    j["sensitivity"] = p.sensitivity;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

SensitivityProfile load_profile_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try {
        const auto j = nlohmann::json::parse(in);
        SensitivityProfile p;
        const auto& m = j.at("metadata");
        p.kind = m.at("kind").get<std::string>();
        p.variant = m.at("variant").get<std::string>();
        p.distinguisher = m.at("distinguisher").get<std::string>();
        p.cipher = m.at("cipher").get<std::string>();
        p.rounds = m.at("rounds").get<int>();
        p.n = m.at("n").get<std::size_t>();
        p.positions = j.at("positions").get<std::vector<int>>();
        p.baseline = j.at("baseline").get<std::vector<double>>();
        p.modified = j.at("modified").get<std::vector<double>>();
        p.sensitivity = j.at("sensitivity").get<std::vector<double>>();
        const std::size_t n = p.positions.size();
        if (p.baseline.size() != n || p.modified.size() != n || p.sensitivity.size() != n) {
            throw std::runtime_error("array lengths differ");
        }
        return p;
    } catch (const std::exception& e) {
        throw std::runtime_error("'" + path + "': bad sensitivity profile: " + e.what());
    }
}

void save_profile_csv(const SensitivityProfile& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "position,baseline,modified,sensitivity\n";
    out.precision(17);
    for (std::size_t i = 0; i < p.positions.size(); ++i) {
        out << p.positions[i] << ',' << p.baseline[i] << ',' << p.modified[i] << ',' << p.sensitivity[i] << '\n';
    }
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

}  // namespace rxnc
