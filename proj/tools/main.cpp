#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "rxnc/attack.hpp"
#include "rxnc/keyrank.hpp"
#include "rxnc/random.hpp"
#include "rxnc/sensitivity.hpp"
#include "rxnc/sweep.hpp"

namespace fs = std::filesystem;
using namespace rxnc;
using namespace rxnc::cli;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::string name;
    int workers = 1;
    std::vector<std::string> sets;
    std::vector<CLI::Option*> seed_opts;  // one per subcommand
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", c.out, "Output directory (default runs/<timestamp>-<name>)");
    c.seed_opts.push_back(sub->add_option("--seed", c.seed, "Top-level seed (overrides the config)"));
    sub->add_option("--name", c.name, "Run name (overrides the config)");
    sub->add_option("-j,--workers", c.workers, "Worker threads; never changes results")->check(CLI::PositiveNumber);
    sub->add_option("--set", c.sets, "Override one config value: dotted.key=<json or text>");
}

json parse_set(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    const std::string text = s.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json root = json::object();
    json* node = &root;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
    return root;
}

/// File config, then command flags, then --set, then --name/--seed.
json effective_config(const Common& c, const json& flags) {
    json cfg = json::object();
    if (!c.config.empty()) merge_into(cfg, load_config_file(c.config));
    merge_into(cfg, flags);
    for (const auto& s : c.sets) merge_into(cfg, parse_set(s));
    if (!c.name.empty()) cfg["name"] = c.name;
    for (const CLI::Option* o : c.seed_opts) {
        if (o->count() > 0) cfg["seed"] = c.seed;
    }
    validate_config(cfg);
    return cfg;
}

std::optional<fs::path> out_dir(const Common& c) {
    if (c.out.empty()) return std::nullopt;
    return fs::path(c.out);
}

const json& sect(const json& cfg, const char* name) {
    static const json empty = json::object();
    auto it = cfg.find(name);
    return it == cfg.end() ? empty : *it;
}

std::string hex16(Word w) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%04x", w);
    return buf;
}

/// Prepends the producing config hash so --verify can check CSV outputs.
void stamp_csv(const fs::path& path, std::uint64_t hash) {
    std::ifstream in(path);
    std::stringstream body;
    body << in.rdbuf();
    in.close();
    std::ofstream out(path, std::ios::trunc);
    out << "# config_hash " << hex64(hash) << "\n" << body.str();
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

json report_json(const EvalReport& r) {
    return {{"accuracy", r.accuracy}, {"tpr", r.tpr}, {"tnr", r.tnr}, {"n", r.n}, {"n_pos", r.n_pos}, {"n_neg", r.n_neg}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct LoadedModel {
    Model model;
    CipherId cipher = CipherId::Simon32_64;
    HalfRxDifference d;
    DataFormatSpec spec;
};

LoadedModel open_model(const std::string& path) {
    if (path.empty()) throw ConfigError("no model given (use --model or model.path)");
    ModelMetadata meta;
    LoadedModel lm;
    lm.model = load_model(path, &meta);
    if (meta.cipher.empty() || meta.format.empty()) {
        throw std::runtime_error("'" + path + "': model carries no data-format metadata");
    }
    lm.cipher = parse_cipher(meta.cipher);
    lm.d = {meta.lambda, static_cast<Word>(meta.delta_r)};
    lm.spec = {parse_format(meta.format), meta.pairs_per_sample, meta.lambda, meta.rounds};
    lm.spec.validate();
    return lm;
}

ModelMetadata metadata_for(CipherId c, const HalfRxDifference& d, const DataFormatSpec& spec, std::uint64_t hash) {
    ModelMetadata m;
    m.cipher = std::string(cipher_name(c));
    m.format = std::string(format_name(spec.base));
    m.pairs_per_sample = spec.pairs_per_sample;
    m.lambda = d.lambda;
    m.rounds = spec.rounds;
    m.delta_r = d.delta_r;
    m.config_hash = hash;
    return m;
}

std::string model_path(const json& cfg) { return sect(cfg, "model").value("path", std::string()); }

/// Loads a dataset when `path_key` names one, otherwise generates it.
Dataset dataset_from(const json& cfg, const char* path_key, std::size_t size, std::uint64_t seed, CipherId cipher,
                     const DataFormatSpec& spec, const HalfRxDifference& d, int workers) {
    const std::string path = sect(cfg, "data").value(path_key, std::string());
    if (path.empty()) return generate_dataset(cipher, spec, d, size, seed, cfg_negatives(cfg), workers);
    Dataset ds = load_dataset(path);
    if (ds.spec != spec || ds.cipher != cipher || ds.half_rxd != d) {
        throw std::runtime_error("'" + path + "': dataset format differs from the configured one");
    }
    return ds;
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const Common& c, const json& flags) {
    Run run("gen-data", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t size = sect(cfg, "data").value("size", std::size_t{1} << 14);
    Dataset ds = generate_dataset(cfg_cipher(cfg), cfg_format(cfg), cfg_rxd(cfg), size, derive_seed(cfg_seed(cfg), 12),
                                  cfg_negatives(cfg), run.workers());
    ds.config_hash = run.hash();
    save_dataset(ds, run.path("dataset.bin").string());
    run.add_artifact("dataset.bin", "dataset");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}});
    std::cout << "wrote " << ds.size() << " samples (" << ds.spec.width_bits() << " bits each) to "
              << run.path("dataset.bin").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const Common& c, const json& flags) {
    Run run("train", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg_seed(cfg);
    const CipherId cipher = cfg_cipher(cfg);
    const HalfRxDifference d = cfg_rxd(cfg);
    const DataFormatSpec spec = cfg_format(cfg);
    TrainSchedule ts = cfg_schedule(sect(cfg, "schedule"));
    ts.train_size = sect(cfg, "data").value("train_size", ts.train_size);
    ts.val_size = sect(cfg, "data").value("val_size", ts.val_size);
    ts.shuffle_seed = derive_seed(seed, 4);
    ts.validate();

    const Dataset tr = dataset_from(cfg, "train_path", ts.train_size, derive_seed(seed, 1), cipher, spec, d, run.workers());
    const Dataset va = dataset_from(cfg, "val_path", ts.val_size, derive_seed(seed, 2), cipher, spec, d, run.workers());
    const Model init(cfg_model(cfg, spec.width_bits()));
    const TrainResult res = train(init, tr, va, ts, [](int e, const EvalReport& r, double loss) {
        std::printf("epoch %2d  loss %.5f  val_acc %.4f\n", e + 1, loss, r.accuracy);
        std::fflush(stdout);
    });

    save_model(res.model, run.path("model.bin").string(), metadata_for(cipher, d, spec, run.hash()));
    json epochs = json::array();
    std::ofstream csv(run.path("train.csv"));
    csv << "epoch,train_loss,val_accuracy,val_tpr,val_tnr\n";
    for (std::size_t e = 0; e < res.per_epoch.size(); ++e) {
        epochs.push_back({{"epoch", e + 1}, {"train_loss", res.train_loss[e]}, {"val", report_json(res.per_epoch[e])}});
        csv << e + 1 << "," << res.train_loss[e] << "," << res.per_epoch[e].accuracy << "," << res.per_epoch[e].tpr << ","
            << res.per_epoch[e].tnr << "\n";
    }
    csv.close();
    stamp_csv(run.path("train.csv"), run.hash());
    write_json(run.path("train.json"),
               {{"config_hash", hex64(run.hash())}, {"best", report_json(res.best)}, {"epochs", epochs}});
    run.add_artifact("model.bin", "model");
    run.add_artifact("train.json", "json");
    run.add_artifact("train.csv", "csv");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}});
    std::printf("best val accuracy %.4f (tpr %.4f, tnr %.4f)\n", res.best.accuracy, res.best.tpr, res.best.tnr);
    return 0;
}

// ---------------------------------------------------------------- staged-train

int cmd_staged_train(const Common& c, const json& flags) {
    Run run("staged-train", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg_seed(cfg);
    const LoadedModel base = open_model(model_path(cfg));
    const json stages_cfg = cfg.value("stages", json::array());
    if (stages_cfg.empty()) throw ConfigError("staged-train: config has no stages");

    std::vector<TrainingStage> stages;
    DataFormatSpec last_spec = base.spec;
    for (std::size_t i = 0; i < stages_cfg.size(); ++i) {
        const json& s = stages_cfg[i];
        TrainingStage st;
        st.schedule = cfg_schedule(s.value("schedule", json::object()));
        st.schedule.train_size = s.value("train_size", st.schedule.train_size);
        st.schedule.val_size = s.value("val_size", st.schedule.val_size);
        st.schedule.shuffle_seed = derive_seed(seed, 300 + i);
        st.skip = s.value("skip", false);
        DataFormatSpec spec = base.spec;
        spec.rounds = s.value("rounds", base.spec.rounds);
        spec.validate();
        if (!st.skip) {
            st.train_set = generate_dataset(base.cipher, spec, base.d, st.schedule.train_size, derive_seed(seed, 100 + 2 * i),
                                            cfg_negatives(cfg), run.workers());
            st.val_set = generate_dataset(base.cipher, spec, base.d, st.schedule.val_size,
                                          derive_seed(seed, 101 + 2 * i), cfg_negatives(cfg), run.workers());
            last_spec = spec;
        }
        stages.push_back(std::move(st));
    }
    const StagedResult res = staged_train(base.model, stages);
    save_model(res.model, run.path("model.bin").string(), metadata_for(base.cipher, base.d, last_spec, run.hash()));
    json reports = json::array();
    for (const auto& r : res.reports) {
        reports.push_back(report_json(r));
        std::printf("stage val accuracy %.4f\n", r.accuracy);
    }
    write_json(run.path("staged.json"), {{"config_hash", hex64(run.hash())}, {"stages", reports}});
    run.add_artifact("model.bin", "model");
    run.add_artifact("staged.json", "json");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}});
    return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const Common& c, const json& flags) {
    Run run("eval", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const LoadedModel lm = open_model(model_path(cfg));
    const std::string path = sect(cfg, "data").value("path", std::string());
    Dataset ds;
    if (path.empty()) {
        const std::size_t n = sect(cfg, "data").value("size", std::size_t{1} << 14);
        ds = generate_dataset(lm.cipher, lm.spec, lm.d, n, derive_seed(cfg_seed(cfg), 2), cfg_negatives(cfg), run.workers());
    } else {
        ds = load_dataset(path);
    }
    const EvalReport r = evaluate(lm.model, ds);
    write_json(run.path("eval.json"), {{"config_hash", hex64(run.hash())}, {"report", report_json(r)}});
    run.add_artifact("eval.json", "json");
    run.finish();
    std::printf("accuracy %.6f tpr %.6f tnr %.6f n %zu\n", r.accuracy, r.tpr, r.tnr, r.n);
    return 0;
}

// ---------------------------------------------------------------- sweep-rxd

int cmd_sweep(const Common& c, const json& flags, bool list_only) {
    if (list_only) {
        json cfg = effective_config(c, flags);
        const int hw = sect(cfg, "sweep").value("hw", 2);
        const auto cands = enumerate_half_rxd(hw);
        for (const auto& d : cands) std::cout << to_string(d) << "\n";
        std::cerr << cands.size() << " candidates\n";
        return 0;
    }
    Run run("sweep-rxd", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const json& sw = sect(cfg, "sweep");
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg_seed(cfg);
    const CipherId cipher = cfg_cipher(cfg);
    std::vector<HalfRxDifference> cands = enumerate_half_rxd(sw.value("hw", 2));
    if (sw.contains("lambdas")) {
        const auto keep = sw["lambdas"].get<std::vector<int>>();
        std::erase_if(cands, [&](const HalfRxDifference& d) {
            return std::find(keep.begin(), keep.end(), d.lambda) == keep.end();
        });
    }
    const DataFormatSpec base = cfg_format(cfg);
    const int proxy_rounds = sw.value("proxy_rounds", base.rounds);
    const auto ranked = rank_by_proxy(cipher, cands, proxy_rounds, sw.value("proxy_samples", std::size_t{1} << 14),
                                      derive_seed(seed, 11), run.workers());
    const std::size_t top = std::min(ranked.size(), sw.value("top", std::size_t{4}));

    TrainSchedule ts = cfg_schedule(sect(cfg, "schedule"));
    ts.train_size = sw.value("train_size", std::size_t{1} << 15);
    ts.val_size = sw.value("val_size", std::size_t{1} << 13);
    std::vector<std::optional<EvalReport>> acc(ranked.size());
    for (std::size_t i = 0; i < top; ++i) {
        DataFormatSpec spec = base;
        spec.lambda = ranked[i].d.lambda;
        ts.shuffle_seed = derive_seed(seed, 400 + 4 * i);
        const Dataset tr = generate_dataset(cipher, spec, ranked[i].d, ts.train_size, derive_seed(seed, 401 + 4 * i),
                                            cfg_negatives(cfg), run.workers());
        const Dataset va = generate_dataset(cipher, spec, ranked[i].d, ts.val_size, derive_seed(seed, 402 + 4 * i),
                                            cfg_negatives(cfg), run.workers());
        ModelConfig mc = cfg_model(cfg, spec.width_bits());
        mc.seed = derive_seed(seed, 403 + 4 * i);
        acc[i] = train(Model(mc), tr, va, ts).best;
        std::printf("%-14s proxy %.4f  val_acc %.4f\n", to_string(ranked[i].d).c_str(), ranked[i].proxy, acc[i]->accuracy);
        std::fflush(stdout);
    }

    std::ofstream csv(run.path("sweep.csv"));
    csv << "rank,lambda,delta_r,proxy,val_accuracy\n";
    json trained = json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        csv << i + 1 << "," << ranked[i].d.lambda << "," << hex16(ranked[i].d.delta_r) << "," << ranked[i].proxy << ",";
        if (acc[i]) {
            csv << acc[i]->accuracy;
            trained.push_back({{"lambda", ranked[i].d.lambda},
                               {"delta_r", hex16(ranked[i].d.delta_r)},
                               {"proxy", ranked[i].proxy},
                               {"val", report_json(*acc[i])}});
        }
        csv << "\n";
    }
    csv.close();
    stamp_csv(run.path("sweep.csv"), run.hash());
    write_json(run.path("sweep.json"), {{"config_hash", hex64(run.hash())},
                                        {"candidates", ranked.size()},
                                        {"proxy_rounds", proxy_rounds},
                                        {"trained_rounds", base.rounds},
                                        {"trained", trained}});
    run.add_artifact("sweep.csv", "csv");
    run.add_artifact("sweep.json", "json");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}});
    return 0;
}

// ---------------------------------------------------------------- bst / kbst

void print_profile(const SensitivityProfile& p) {
    for (std::size_t i = 0; i < p.positions.size(); ++i) {
        std::printf("bit %2d  baseline %.4f  modified %.4f  sensitivity %+.4f\n", p.positions[i], p.baseline[i],
                    p.modified[i], p.sensitivity[i]);
    }
}

int finish_profile(Run& run, const SensitivityProfile& p, const std::string& stem,
                   const std::chrono::steady_clock::time_point t0) {
    save_profile_json(p, run.path(stem + ".json").string(), run.hash());
    save_profile_csv(p, run.path(stem + ".csv").string());
    stamp_csv(run.path(stem + ".csv"), run.hash());
    run.add_artifact(stem + ".json", "json");
    run.add_artifact(stem + ".csv", "csv");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}});
    print_profile(p);
    const auto sens = sensitive_bits(p, cfg_threshold(run.config()));
    std::printf("sensitive (> %.3f):", cfg_threshold(run.config()));
    for (int b : sens) std::printf(" %d", b);
    std::printf("\n");
    return 0;
}

int cmd_bst(const Common& c, const json& flags) {
    Run run("bst", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const LoadedModel lm = open_model(model_path(cfg));
    const NeuralScorer scorer(lm.cipher, lm.spec, lm.model);
    const SensitivityProfile p =
        bst(scorer, lm.cipher, lm.d, lm.spec, cfg_bst(cfg), derive_seed(cfg_seed(cfg), 5), run.workers());
    return finish_profile(run, p, "bst", t0);
}

int cmd_kbst(const Common& c, const json& flags) {
    Run run("kbst", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const LoadedModel lm = open_model(model_path(cfg));
    const NeuralScorer scorer(lm.cipher, lm.spec, lm.model);
    const SensitivityProfile p = kbst(scorer, lm.cipher, lm.d, lm.spec, cfg_kbst(cfg, lm.spec.rounds),
                                      derive_seed(cfg_seed(cfg), 6), run.workers());
    return finish_profile(run, p, "kbst", t0);
}

// ---------------------------------------------------------------- wkr / jwkr

ProfileOptions profile_options(const json& cfg, std::uint64_t tag, int workers) {
    const json& p = sect(cfg, "profile");
    ProfileOptions o;
    o.samples = p.value("samples", o.samples);
    o.seed = derive_seed(cfg_seed(cfg), tag);
    o.workers = workers;
    o.randomize_insensitive = p.value("randomize_insensitive", false);
    return o;
}

int cmd_wkr(const Common& c, const json& flags) {
    Run run("wkr", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const LoadedModel lm = open_model(model_path(cfg));
    const NeuralScorer scorer(lm.cipher, lm.spec, lm.model);
    const WkrProfile p = wkr_profile(scorer, lm.cipher, lm.d, lm.spec, profile_options(cfg, 7, run.workers()));
    save_wkr(p, run.path("wkr.bin").string(), run.hash());
    save_wkr_csv(p, run.path("wkr.csv").string());
    stamp_csv(run.path("wkr.csv"), run.hash());
    run.add_artifact("wkr.bin", "wkr");
    run.add_artifact("wkr.csv", "csv");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}});
    double mean = 0.0;
    for (double v : p.mu) mean += v;
    std::printf("mu[0] %.4f  sigma[0] %.4f  mean mu %.4f\n", p.mu[0], p.sigma[0], mean / static_cast<double>(p.mu.size()));
    return 0;
}

/// Sensitive sets from explicit lists or from KBST profiles (one per member).
std::pair<std::vector<int>, std::vector<int>> sensitive_sets(const json& cfg) {
    const json& p = sect(cfg, "profile");
    auto one = [&](const char* list_key, const char* file_key) {
        if (p.contains(list_key)) return p[list_key].get<std::vector<int>>();
        if (!p.contains(file_key)) {
            throw ConfigError(std::string("jwkr: need profile.") + list_key + " or profile." + file_key);
        }
        const SensitivityProfile sp = load_profile_json(p[file_key].get<std::string>());
        return top_sensitive_bits(sp, cfg_threshold(cfg), cfg_max_bits(cfg));
    };
    return {one("sens_a", "kbst_a"), one("sens_b", "kbst_b")};
}

int cmd_jwkr(const Common& c, const json& flags) {
    Run run("jwkr", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const LoadedModel lm = open_model(model_path(cfg));
    const NeuralScorer scorer(lm.cipher, lm.spec, lm.model);
    const auto [sa, sb] = sensitive_sets(cfg);
    const JwkrProfile p = jwkr_profile(scorer, lm.cipher, lm.d, lm.spec, sa, sb, profile_options(cfg, 8, run.workers()));
    save_jwkr(p, run.path("jwkr.bin").string(), run.hash());
    save_jwkr_csv(p, run.path("jwkr.csv").string());
    stamp_csv(run.path("jwkr.csv"), run.hash());
    run.add_artifact("jwkr.bin", "jwkr");
    run.add_artifact("jwkr.csv", "csv");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}});
    std::printf("%zu cells, mu[0] %.4f\n", p.cells(), p.mu[0]);
    return 0;
}

// ---------------------------------------------------------------- attack / harness

struct OwnedStage {
    std::unique_ptr<GroupScorer> scorer;
    std::optional<WkrProfile> wkr;
    std::optional<JwkrProfile> jwkr;

    StageInputs view() const {
        return {scorer.get(), wkr ? &*wkr : nullptr, jwkr ? &*jwkr : nullptr};
    }
};

OwnedStage build_stage(const json& cfg, const json& st, const AttackConfig& a, int rounds, std::uint64_t tag,
                       int workers) {
    OwnedStage out;
    if (st.contains("oracle")) {
        const json& o = st["oracle"];
        out.scorer = std::make_unique<OracleScorer>(o.value("hit", 0.9), o.value("miss", 0.5), a.k, o.value("graded", false));
    } else {
        const LoadedModel lm = open_model(st.value("model", std::string()));
        if (lm.cipher != a.cipher || lm.d != a.d || lm.spec.base != a.format) {
            throw std::runtime_error("attack: model '" + st.value("model", std::string()) +
                                     "' was trained for another cipher, difference or format");
        }
        out.scorer = std::make_unique<NeuralScorer>(lm.cipher, lm.spec, lm.model);
    }
    const std::string profile = st.value("profile", std::string());
    if (!profile.empty()) {
        if (a.mode == GuessMode::Single) {
            out.wkr = load_wkr(profile);
        } else {
            out.jwkr = load_jwkr(profile);
        }
        return out;
    }
    if (!st.contains("oracle")) throw ConfigError("attack: a model stage needs a profile path");
    // Exact profile of the oracle, computed on the spot.
    const DataFormatSpec spec{a.format, a.k, a.d.lambda, rounds};
    ProfileOptions po;
    po.samples = st["oracle"].value("profile_samples", std::size_t{1});
    po.seed = derive_seed(cfg_seed(cfg), tag);
    po.workers = workers;
    if (a.mode == GuessMode::Single) {
        out.wkr = wkr_profile(*out.scorer, a.cipher, a.d, spec, po);
    } else {
        const auto [sa, sb] = sensitive_sets(cfg);
        out.jwkr = jwkr_profile(*out.scorer, a.cipher, a.d, spec, sa, sb, po);
    }
    return out;
}

json attack_echo(const AttackConfig& a) {
    return {{"name", a.name},   {"cipher", cipher_name(a.cipher)},
            {"lambda", a.d.lambda}, {"delta_r", hex16(a.d.delta_r)},
            {"format", format_name(a.format)}, {"mode", guess_mode_name(a.mode)},
            {"total_rounds", a.total_rounds}, {"m", a.m},
            {"k", a.k},             {"c1", a.c1},
            {"c2", a.c2},           {"t", a.t},
            {"l", a.l},             {"n", a.n},
            {"stages", a.stages},   {"max_survivors", a.max_survivors}};
}

std::vector<int> mask_bits(Word m) {
    std::vector<int> v;
    for (int i = 0; i < 16; ++i)
        if ((m >> i) & 1) v.push_back(i);
    return v;
}

json result_json(const AttackResult& r) {
    json rec = json::array();
    for (const auto& s : r.recovered) {
        rec.push_back({{"round", s.round},
                       {"key_a", hex16(s.key_a & s.mask_a)},
                       {"key_b", hex16(s.key_b & s.mask_b)},
                       {"bits_a", mask_bits(s.mask_a)},
                       {"bits_b", mask_bits(s.mask_b)},
                       {"true_a", hex16(s.true_a & s.mask_a)},
                       {"true_b", hex16(s.true_b & s.mask_b)},
                       {"score", s.score},
                       {"correct", s.correct}});
    }
    return {{"recovered", rec},
            {"stage1_score", r.stage1_score},
            {"stage2_score", r.stage2_score},
            {"attempts", r.attempts},
            {"accepted", r.accepted},
            {"used_fallback", r.used_fallback},
            {"last_round_correct", r.last_round_correct},
            {"all_correct", r.all_correct},
            {"complexity",
             {{"data_plaintexts", r.data_plaintexts},
              {"data_log2", r.data_log2},
              {"subkey_bits", r.subkey_bits},
              {"member_bits", r.member_bits},
              {"time_log2", r.time_log2}}}};
}

std::string printed_key(const MasterKey& k) {
    std::string s;
    for (int i = 3; i >= 0; --i) s += (i < 3 ? " " : "") + hex16(k.words[static_cast<std::size_t>(i)]).substr(2);
    return s;
}

struct AttackSetup {
    AttackConfig cfg;
    OwnedStage last;
    OwnedStage penultimate;
    std::optional<Thresholds> calibrated;

    AttackInputs inputs() const { return {last.view(), penultimate.view()}; }
};

AttackSetup setup_attack(const json& cfg, int workers) {
    AttackSetup s;
    s.cfg = cfg_attack(cfg);
    s.cfg.workers = workers;
    const json& a = sect(cfg, "attack");
    if (!a.contains("last")) throw ConfigError("attack: config needs attack.last (model/profile or oracle)");
    s.last = build_stage(cfg, a["last"], s.cfg, s.cfg.total_rounds - 1, 20, workers);
    if (s.cfg.stages == 2) {
        if (!a.contains("penultimate")) throw ConfigError("attack: two stages need attack.penultimate");
        s.penultimate = build_stage(cfg, a["penultimate"], s.cfg, s.cfg.total_rounds - 2, 21, workers);
    }
    if (a.contains("calibrate")) {
        const json& cal = a["calibrate"];
        AttackConfig cc = s.cfg;
        cc.seed = derive_seed(cfg_seed(cfg), 22);
        s.calibrated = calibrate_thresholds(cc, s.inputs(), cal.value("trials", std::size_t{20}), cal.value("quantile", 0.1));
        s.cfg.c1 = s.calibrated->c1;
        s.cfg.c2 = s.calibrated->c2;
        std::printf("calibrated c1 %.3f c2 %.3f\n", s.cfg.c1, s.cfg.c2);
    }
    return s;
}

json thresholds_json(const std::optional<Thresholds>& t) {
    if (!t) return nullptr;
    return {{"c1", t->c1}, {"c2", t->c2}, {"stage1_scores", t->stage1_scores}, {"stage2_scores", t->stage2_scores}};
}

int cmd_attack(const Common& c, const json& flags) {
    Run run("attack", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const AttackSetup s = setup_attack(cfg, run.workers());
    MasterKey key = CounterRng(derive_seed(cfg_seed(cfg), 10), 0).master_key();
    if (sect(cfg, "attack").contains("key")) {
        const json& k = cfg["attack"]["key"];
        if (k.size() != 4) throw ConfigError("attack.key must list four words, k3 first");
        key = MasterKey::from_printed(parse_word(k[0], "attack.key"), parse_word(k[1], "attack.key"),
                                      parse_word(k[2], "attack.key"), parse_word(k[3], "attack.key"));
    }
    const AttackResult r = run_attack(s.cfg, s.inputs(), key);
    write_json(run.path("attack.json"), {{"config_hash", hex64(run.hash())},
                                         {"attack", attack_echo(s.cfg)},
                                         {"key", printed_key(key)},
                                         {"calibration", thresholds_json(s.calibrated)},
                                         {"result", result_json(r)}});
    run.add_artifact("attack.json", "json");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}, {"attack_wall_seconds", r.wall_seconds}});
    for (const auto& rk : r.recovered) {
        std::printf("round %d: guessed %s/%s  true %s/%s  %s\n", rk.round, hex16(rk.key_a & rk.mask_a).c_str(),
                    hex16(rk.key_b & rk.mask_b).c_str(), hex16(rk.true_a & rk.mask_a).c_str(),
                    hex16(rk.true_b & rk.mask_b).c_str(), rk.correct ? "correct" : "wrong");
    }
    std::printf("attempts %d%s; data 2^%.2f; remaining key search 2^%.0f; wall %.1f s\n", r.attempts,
                r.used_fallback ? " (fallback)" : "", r.data_log2, r.time_log2, r.wall_seconds);
    return 0;
}

int cmd_harness(const Common& c, const json& flags) {
    Run run("harness", effective_config(c, flags), out_dir(c), c.workers);
    const json& cfg = run.config();
    const auto t0 = std::chrono::steady_clock::now();
    const AttackSetup s = setup_attack(cfg, run.workers());
    const std::size_t trials = sect(cfg, "attack").value("trials", std::size_t{20});
    const HarnessResult h = success_rate_harness(s.cfg, s.inputs(), trials);

    json rows = json::array();
    json walls = json::array();
    std::ofstream csv(run.path("trials.csv"));
    csv << "trial,key,last_round_correct,all_correct,attempts,fallback,stage1_score,stage2_score\n";
    for (const auto& t : h.trials) {
        rows.push_back({{"trial", t.trial}, {"key", printed_key(t.key)}, {"result", result_json(t.result)}});
        walls.push_back(t.result.wall_seconds);
        csv << t.trial << "," << printed_key(t.key) << "," << t.result.last_round_correct << "," << t.result.all_correct
            << "," << t.result.attempts << "," << t.result.used_fallback << "," << t.result.stage1_score << ","
            << t.result.stage2_score << "\n";
    }
    csv.close();
    stamp_csv(run.path("trials.csv"), run.hash());
    write_json(run.path("harness.json"), {{"config_hash", hex64(run.hash())},
                                          {"attack", attack_echo(s.cfg)},
                                          {"calibration", thresholds_json(s.calibrated)},
                                          {"trials", trials},
                                          {"success_rate", h.success_rate},
                                          {"success_rate_all", h.success_rate_all},
                                          {"runs", rows}});
    run.add_artifact("harness.json", "json");
    run.add_artifact("trials.csv", "csv");
    run.finish();
    run.write_timing({{"seconds", seconds_since(t0)}, {"trial_wall_seconds", walls}});
    std::printf("success rate %.3f (last-round subkey), %.3f (all stages) over %zu trials\n", h.success_rate,
                h.success_rate_all, trials);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotational-XOR neural cryptanalysis toolkit for Simon32/64 and Simeck32/64"};
    app.require_subcommand(0, 1);
    std::string verify;
    app.add_option("--verify", verify, "Check that every artifact in a run directory carries its manifest's config hash");

    Common common;
    json flags = json::object();
    auto set = [&flags](const std::string& dotted) {
        return [&flags, dotted](const std::string& v) {
            json value;
            try {
                value = json::parse(v);
            } catch (const json::parse_error&) {
                value = v;
            }
            std::string key = dotted;
            json* node = &flags;
            for (auto dot = key.find('.'); dot != std::string::npos; dot = key.find('.')) {
                node = &(*node)[key.substr(0, dot)];
                key = key.substr(dot + 1);
            }
            (*node)[key] = value;
        };
    };
    // Flags that map onto config keys.
    auto data_flags = [&](CLI::App* s) {
        s->add_option_function<std::string>("--cipher", set("cipher"), "simon or simeck");
        s->add_option_function<std::string>("--rounds", set("format.rounds"), "Encryption rounds");
        s->add_option_function<std::string>("--format", set("format.base"), "Base data format D1..D8");
        s->add_option_function<std::string>("--k", set("format.k"), "Ciphertext pairs per sample");
        s->add_option_function<std::string>("--lambda", set("rxd.lambda"), "Rotation offset");
        s->add_option_function<std::string>("--delta", [&flags](const std::string& v) { flags["rxd"]["delta_r"] = v; },
                                            "Right-branch input difference, e.g. 0x3");
    };
    auto model_flag = [&](CLI::App* s) {
        s->add_option_function<std::string>("-m,--model", [&flags](const std::string& v) { flags["model"]["path"] = v; },
                                            "Trained model file")
            ->check(CLI::ExistingFile);
    };

    auto* gen = app.add_subcommand("gen-data", "Generate a labeled dataset");
    add_common(gen, common);
    data_flags(gen);
    gen->add_option_function<std::string>("--size", set("data.size"), "Number of samples");

    auto* tr = app.add_subcommand("train", "Train a distinguisher");
    add_common(tr, common);
    data_flags(tr);
    tr->add_option_function<std::string>("--epochs", set("schedule.epochs"), "Training epochs");
    tr->add_option_function<std::string>("--train-size", set("data.train_size"), "Training samples");
    tr->add_option_function<std::string>("--val-size", set("data.val_size"), "Validation samples");
    tr->add_option_function<std::string>("--train-data", [&flags](const std::string& v) { flags["data"]["train_path"] = v; },
                                         "Existing training dataset");
    tr->add_option_function<std::string>("--val-data", [&flags](const std::string& v) { flags["data"]["val_path"] = v; },
                                         "Existing validation dataset");

    auto* st = app.add_subcommand("staged-train", "Fine-tune a model through the configured stages");
    add_common(st, common);
    model_flag(st);

    auto* ev = app.add_subcommand("eval", "Evaluate a model on a dataset");
    add_common(ev, common);
    model_flag(ev);
    ev->add_option_function<std::string>("-d,--data", [&flags](const std::string& v) { flags["data"]["path"] = v; },
                                         "Dataset file (default: fresh samples)")
        ->check(CLI::ExistingFile);

    bool list_only = false;
    auto* sw = app.add_subcommand("sweep-rxd", "Enumerate half RX-differences, rank them and train the best");
    add_common(sw, common);
    data_flags(sw);
    sw->add_option_function<std::string>("--hw", set("sweep.hw"), "Maximum Hamming weight of delta_r (1 or 2)");
    sw->add_option_function<std::string>("--top", set("sweep.top"), "Candidates to train");
    sw->add_flag("--list-only", list_only, "Print the candidates and exit");

    auto* bs = app.add_subcommand("bst", "Ciphertext-bit sensitivity test");
    add_common(bs, common);
    model_flag(bs);
    bs->add_option_function<std::string>("--xor-type", [&flags](const std::string& v) { flags["bst"]["xor_type"] = v; },
                                         "type1, type2 or type3");
    bs->add_option_function<std::string>("--samples", set("bst.n_samples"), "Samples per bit position");

    auto* kb = app.add_subcommand("kbst", "Key-bit sensitivity test on the next round's subkey");
    add_common(kb, common);
    model_flag(kb);
    kb->add_option_function<std::string>("--mask-type", [&flags](const std::string& v) { flags["kbst"]["mask_type"] = v; },
                                         "ktype1 or ktype2");
    kb->add_option_function<std::string>("--target", [&flags](const std::string& v) { flags["kbst"]["target"] = v; },
                                         "both, first or second");
    kb->add_option_function<std::string>("--groups", set("kbst.n_groups"), "Groups per key-bit position");

    auto* wk = app.add_subcommand("wkr", "Single-key wrong-key response profile");
    add_common(wk, common);
    model_flag(wk);
    wk->add_option_function<std::string>("--samples", set("profile.samples"), "Groups per key difference");

    auto* jw = app.add_subcommand("jwkr", "Joint wrong-key response over sensitive key bits");
    add_common(jw, common);
    model_flag(jw);
    jw->add_option_function<std::string>("--samples", set("profile.samples"), "Groups per cell");

    auto* at = app.add_subcommand("attack", "Run one key-recovery attack");
    add_common(at, common);
    at->add_option_function<std::string>("--preset", [&flags](const std::string& v) { flags["attack"]["preset"] = v; },
                                         "Named attack preset");

    auto* hs = app.add_subcommand("harness", "Success rate over independent attacks");
    add_common(hs, common);
    hs->add_option_function<std::string>("--preset", [&flags](const std::string& v) { flags["attack"]["preset"] = v; },
                                         "Named attack preset");
    hs->add_option_function<std::string>("--trials", set("attack.trials"), "Number of attacks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!verify.empty()) {
            const auto problems = verify_run(verify);
            for (const auto& p : problems) std::cerr << "rxnc: verify: " << p << "\n";
            if (problems.empty()) std::cout << "verified " << verify << "\n";
            return problems.empty() ? 0 : 1;
        }
        if (gen->parsed()) return cmd_gen_data(common, flags);
        if (tr->parsed()) return cmd_train(common, flags);
        if (st->parsed()) return cmd_staged_train(common, flags);
        if (ev->parsed()) return cmd_eval(common, flags);
        if (sw->parsed()) return cmd_sweep(common, flags, list_only);
        if (bs->parsed()) return cmd_bst(common, flags);
        if (kb->parsed()) return cmd_kbst(common, flags);
        if (wk->parsed()) return cmd_wkr(common, flags);
        if (jw->parsed()) return cmd_jwkr(common, flags);
        if (at->parsed()) return cmd_attack(common, flags);
        if (hs->parsed()) return cmd_harness(common, flags);
        std::cerr << app.help();
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "rxnc: error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "rxnc: error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        // Parameter values rejected by the library.
        std::cerr << "rxnc: error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rxnc: error: " << e.what() << "\n";
        return 1;
    }
}
