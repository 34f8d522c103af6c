#include "config.hpp"

#include <array>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "rxnc/binary_io.hpp"
#include "rxnc/keyrank.hpp"
#include "rxnc/random.hpp"

namespace rxnc::cli {

namespace fs = std::filesystem;

namespace {

// Schema: section name -> (key -> type). Types: int, uint, number, bool,
// string, word, ints, numbers, words, or "@section" / "[@section]" for a
// nested object or array of objects.
using Section = std::map<std::string, std::string>;

const std::map<std::string, Section>& schema() {
    static const std::map<std::string, Section> s{
        {"", {{"name", "string"},
              {"seed", "uint"},
              {"cipher", "string"},
              {"rxd", "@rxd"},
              {"format", "@format"},
              {"negatives", "string"},
              {"data", "@data"},
              {"model", "@model"},
              {"schedule", "@schedule"},
              {"stages", "[@stage]"},
              {"bst", "@bst"},
              {"kbst", "@kbst"},
              {"sensitivity", "@sensitivity"},
              {"profile", "@profile"},
              {"attack", "@attack"},
              {"sweep", "@sweep"}}},
        {"rxd", {{"lambda", "int"}, {"delta_r", "word"}}},
        {"format", {{"base", "string"}, {"k", "int"}, {"rounds", "int"}}},
        {"data", {{"size", "uint"}, {"train_size", "uint"}, {"val_size", "uint"}, {"path", "string"},
                  {"train_path", "string"}, {"val_path", "string"}}},
        {"model", {{"hidden", "ints"}, {"path", "string"}}},
        {"schedule", {{"epochs", "int"}, {"batch_size", "uint"}, {"learning_rates", "numbers"},
                      {"lr_scale", "number"}, {"optimizer", "string"}, {"weight_decay", "number"}}},
        {"stage", {{"rounds", "int"}, {"train_size", "uint"}, {"val_size", "uint"}, {"schedule", "@schedule"},
                   {"skip", "bool"}}},
        {"bst", {{"xor_type", "string"}, {"n_samples", "uint"}, {"positions", "ints"}}},
        {"kbst", {{"mask_type", "string"}, {"n_groups", "uint"}, {"positions", "ints"}, {"target", "string"}}},
        {"sensitivity", {{"threshold", "number"}, {"max_bits", "uint"}}},
        {"profile", {{"samples", "uint"}, {"sens_a", "ints"}, {"sens_b", "ints"}, {"kbst_a", "string"},
                     {"kbst_b", "string"}, {"randomize_insensitive", "bool"}}},
        {"attack", {{"preset", "string"},
                    {"mode", "string"},
                    {"total_rounds", "int"},
                    {"m", "uint"},
                    {"k", "int"},
                    {"c1", "number"},
                    {"c2", "number"},
                    {"t", "int"},
                    {"l", "int"},
                    {"n", "int"},
                    {"stages", "int"},
                    {"max_survivors", "int"},
                    {"trials", "uint"},
                    {"key", "words"},
                    {"last", "@stage_inputs"},
                    {"penultimate", "@stage_inputs"},
                    {"calibrate", "@calibrate"}}},
        {"stage_inputs", {{"model", "string"}, {"profile", "string"}, {"oracle", "@oracle"}}},
        {"oracle", {{"hit", "number"}, {"miss", "number"}, {"graded", "bool"}, {"profile_samples", "uint"}}},
        {"calibrate", {{"trials", "uint"}, {"quantile", "number"}}},
        {"sweep", {{"hw", "int"}, {"lambdas", "ints"}, {"proxy_rounds", "int"}, {"proxy_samples", "uint"},
                   {"top", "uint"}, {"train_size", "uint"}, {"val_size", "uint"}}},
    };
    return s;
}

bool is_word(const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>() <= 0xFFFF;
    if (v.is_number_integer()) return v.get<std::int64_t>() >= 0 && v.get<std::int64_t>() <= 0xFFFF;
    if (!v.is_string()) return false;
    try {
        std::size_t used = 0;
        const auto s = v.get<std::string>();
        const unsigned long x = std::stoul(s, &used, 0);
        return used == s.size() && x <= 0xFFFF;
    } catch (const std::exception&) {
        return false;
    }
}

bool type_ok(const json& v, const std::string& type) {
    if (type == "int") return v.is_number_integer();
    if (type == "uint") return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (type == "number") return v.is_number();
    if (type == "bool") return v.is_boolean();
    if (type == "string") return v.is_string();
    if (type == "word") return is_word(v);
    auto all = [&](auto pred) {
        if (!v.is_array()) return false;
        for (const auto& e : v)
            if (!pred(e)) return false;
        return true;
    };
    if (type == "ints") return all([](const json& e) { return e.is_number_integer(); });
    if (type == "numbers") return all([](const json& e) { return e.is_number(); });
    if (type == "words") return all(is_word);
    return false;
}

void validate_section(const json& obj, const std::string& section, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const Section& keys = schema().at(section);
    for (const auto& [key, value] : obj.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError("config: unknown key '" + path + "'");
        const std::string& type = it->second;
        if (type.rfind("[@", 0) == 0) {
            if (!value.is_array()) throw ConfigError("config: '" + path + "' must be an array");
            const std::string sub = type.substr(2, type.size() - 3);
            for (std::size_t i = 0; i < value.size(); ++i)
                validate_section(value[i], sub, path + "[" + std::to_string(i) + "]");
        } else if (type[0] == '@') {
            validate_section(value, type.substr(1), path);
        } else if (!type_ok(value, type)) {
            throw ConfigError("config: '" + path + "' must be of type " + type);
        }
    }
}

const json& section(const json& cfg, const char* name) {
    static const json empty = json::object();
    auto it = cfg.find(name);
    return it == cfg.end() ? empty : *it;
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : it->get<T>();
}

std::vector<int> ints(const json& obj, const char* key) { return get_or<std::vector<int>>(obj, key, {}); }

}  // namespace

void validate_config(const json& cfg) { validate_section(cfg, "", ""); }

void merge_into(json& a, const json& b) {
    for (const auto& [key, value] : b.items()) {
        if (value.is_object() && a.contains(key) && a[key].is_object()) {
            merge_into(a[key], value);
        } else {
            a[key] = value;
        }
    }
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

std::uint64_t config_hash(const json& cfg) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : cfg.dump()) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Word parse_word(const json& v, const std::string& what) {
    if (!is_word(v)) throw ConfigError(what + ": expected a 16-bit value");
    if (v.is_string()) return static_cast<Word>(std::stoul(v.get<std::string>(), nullptr, 0));
    return static_cast<Word>(v.get<std::uint64_t>());
}

std::uint64_t cfg_seed(const json& cfg) { return get_or<std::uint64_t>(cfg, "seed", 0); }

CipherId cfg_cipher(const json& cfg) { return parse_cipher(get_or<std::string>(cfg, "cipher", "simon")); }

HalfRxDifference cfg_rxd(const json& cfg) {
    const json& s = section(cfg, "rxd");
    HalfRxDifference d;
    d.lambda = get_or(s, "lambda", cfg_cipher(cfg) == CipherId::Simon32_64 ? 15 : 1);
    d.delta_r = s.contains("delta_r") ? parse_word(s["delta_r"], "rxd.delta_r")
                                      : static_cast<Word>(cfg_cipher(cfg) == CipherId::Simon32_64 ? 0x3 : 0x4);
    d.validate();
    return d;
}

DataFormatSpec cfg_format(const json& cfg) {
    const json& s = section(cfg, "format");
    DataFormatSpec spec;
    spec.base = parse_format(get_or<std::string>(s, "base", "D5"));
    spec.pairs_per_sample = get_or(s, "k", 1);
    spec.rounds = get_or(s, "rounds", 8);
    spec.lambda = cfg_rxd(cfg).lambda;
    spec.validate();
    return spec;
}

NegativeMode cfg_negatives(const json& cfg) {
    const auto s = get_or<std::string>(cfg, "negatives", "random-plaintext");
    if (s == "random-plaintext") return NegativeMode::RandomPlaintext;
    if (s == "random-ciphertext") return NegativeMode::RandomCiphertext;
    throw ConfigError("config: negatives must be random-plaintext or random-ciphertext");
}

ModelConfig cfg_model(const json& cfg, std::size_t input_width) {
    ModelConfig mc;
    mc.input_width = input_width;
    const json& s = section(cfg, "model");
    if (s.contains("hidden")) {
        mc.hidden_sizes.clear();
        for (int h : s["hidden"].get<std::vector<int>>()) {
            if (h < 1) throw ConfigError("config: model.hidden entries must be >= 1");
            mc.hidden_sizes.push_back(static_cast<std::size_t>(h));
        }
    }
    mc.seed = derive_seed(cfg_seed(cfg), 3);
    return mc;
}

TrainSchedule cfg_schedule(const json& s) {
    TrainSchedule ts;
    ts.epochs = get_or(s, "epochs", ts.epochs);
    ts.batch_size = get_or(s, "batch_size", ts.batch_size);
    if (s.contains("learning_rates")) ts.learning_rates = s["learning_rates"].get<std::vector<double>>();
    const double scale = get_or(s, "lr_scale", 1.0);
    for (double& r : ts.learning_rates) r *= scale;
    const auto opt = get_or<std::string>(s, "optimizer", "sgd");
    if (opt == "sgd") {
        ts.optimizer = Optimizer::Sgd;
    } else if (opt == "adam") {
        ts.optimizer = Optimizer::Adam;
    } else {
        throw ConfigError("config: schedule.optimizer must be sgd or adam");
    }
    ts.weight_decay = get_or(s, "weight_decay", 0.0);
    return ts;
}

BstConfig cfg_bst(const json& cfg) {
    const json& s = section(cfg, "bst");
    BstConfig b;
    b.xor_type = parse_xor_type(get_or<std::string>(s, "xor_type", "type1"));
    b.n_samples = get_or(s, "n_samples", b.n_samples);
    b.bit_positions = ints(s, "positions");
    b.validate();
    return b;
}

KbstConfig cfg_kbst(const json& cfg, int distinguisher_rounds) {
    const json& s = section(cfg, "kbst");
    KbstConfig k;
    k.mask_type = parse_key_mask_type(get_or<std::string>(s, "mask_type", "ktype1"));
    k.n_groups = get_or(s, "n_groups", k.n_groups);
    k.bit_positions = ints(s, "positions");
    k.target = parse_mask_target(get_or<std::string>(s, "target", "both"));
    k.target_round = distinguisher_rounds + 1;
    k.validate();
    return k;
}

double cfg_threshold(const json& cfg) { return get_or(section(cfg, "sensitivity"), "threshold", 0.02); }

std::size_t cfg_max_bits(const json& cfg) {
    return get_or<std::size_t>(section(cfg, "sensitivity"), "max_bits", 16);
}

AttackConfig cfg_attack(const json& cfg) {
    const json& s = section(cfg, "attack");
    AttackConfig a = s.contains("preset") ? attack_preset(s["preset"].get<std::string>()) : AttackConfig{};
    if (cfg.contains("cipher")) a.cipher = cfg_cipher(cfg);
    if (cfg.contains("rxd")) a.d = cfg_rxd(cfg);
    if (section(cfg, "format").contains("base")) a.format = parse_format(cfg["format"]["base"].get<std::string>());
    if (section(cfg, "format").contains("k")) a.k = cfg["format"]["k"].get<int>();
    if (s.contains("mode")) a.mode = parse_guess_mode(s["mode"].get<std::string>());
    a.total_rounds = get_or(s, "total_rounds", a.total_rounds);
    a.m = get_or(s, "m", a.m);
    a.k = get_or(s, "k", a.k);
    a.c1 = get_or(s, "c1", a.c1);
    a.c2 = get_or(s, "c2", a.c2);
    a.t = get_or(s, "t", a.t);
    a.l = get_or(s, "l", a.l);
    a.n = get_or(s, "n", a.n);
    a.stages = get_or(s, "stages", a.stages);
    a.max_survivors = get_or(s, "max_survivors", a.max_survivors);
    a.seed = derive_seed(cfg_seed(cfg), 9);
    if (cfg.contains("name")) a.name = cfg["name"].get<std::string>();
    a.validate();
    return a;
}

Run::Run(std::string command, json config, std::optional<fs::path> out_dir, int workers)
    : command_(std::move(command)), config_(std::move(config)), hash_(config_hash(config_)), workers_(workers) {
    if (out_dir) {
        dir_ = *out_dir;
    } else {
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::gmtime(&now));
        dir_ = fs::path("runs") / (std::string(stamp) + "-" + config_.value("name", command_));
    }
    fs::create_directories(dir_);
}

void Run::add_artifact(const std::string& file, const std::string& kind) { artifacts_.emplace_back(file, kind); }

void Run::finish() const {
    json m;
    m["command"] = command_;
    m["config"] = config_;
    m["config_hash"] = hex64(hash_);
    m["seed"] = cfg_seed(config_);
    m["git_describe"] = git_describe();
    json arts = json::array();
    for (const auto& [file, kind] : artifacts_) arts.push_back({{"path", file}, {"kind", kind}});
    m["artifacts"] = arts;
    std::ofstream out(dir_ / "manifest.json");
    out << m.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + (dir_ / "manifest.json").string());
}

void Run::write_timing(const json& timing) const {
    json t = timing;
    t["workers"] = workers_;
    std::ofstream out(dir_ / "timing.json");
    out << t.dump(2) << "\n";
}

namespace {

std::uint64_t embedded_hash(const fs::path& file, const std::string& kind) {
    const std::string p = file.string();
    if (kind == "dataset") return load_dataset(p).config_hash;
    if (kind == "model") {
        ModelMetadata meta;
        load_model(p, &meta);
        return meta.config_hash;
    }
    if (kind == "wkr" || kind == "jwkr") {
        io::Reader r(p);
        r.expect_magic("RXWK");
        r.get<std::uint32_t>();                                      // version
        for (int i = 0; i < 4; ++i) r.get<std::uint8_t>();            // kind, cipher, lambda, randomized
        r.get<std::uint32_t>();                                      // rounds
        r.get<std::uint64_t>();                                      // samples
        return r.get<std::uint64_t>();
    }
    if (kind == "json") {
        std::ifstream in(p);
        const json j = json::parse(in);
        if (j.contains("config_hash")) return std::stoull(j["config_hash"].get<std::string>(), nullptr, 16);
        return j.at("metadata").at("config_hash").get<std::uint64_t>();
    }
    if (kind == "csv") {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);
        const std::string tag = "# config_hash ";
        if (line.rfind(tag, 0) != 0) throw std::runtime_error("missing config hash line");
        return std::stoull(line.substr(tag.size()), nullptr, 16);
    }
    throw std::runtime_error("unknown artifact kind '" + kind + "'");
}

}  // namespace

std::vector<std::string> verify_run(const fs::path& dir) {
    std::vector<std::string> problems;
    std::ifstream in(dir / "manifest.json");
    if (!in) return {"missing manifest.json"};
    const json m = json::parse(in);
    const std::uint64_t h = config_hash(m.at("config"));
    if (hex64(h) != m.at("config_hash").get<std::string>()) problems.push_back("manifest config hash mismatch");
    for (const auto& a : m.at("artifacts")) {
        const auto file = a.at("path").get<std::string>();
        try {
            const std::uint64_t eh = embedded_hash(dir / file, a.at("kind").get<std::string>());
            if (eh != h) problems.push_back(file + ": embedded hash " + hex64(eh) + " differs from " + hex64(h));
        } catch (const std::exception& e) {
            problems.push_back(file + ": " + e.what());
        }
    }
    return problems;
}

std::string git_describe() {
    std::string out;
#ifdef RXNC_SOURCE_DIR
    const std::string cmd = "git -C \"" RXNC_SOURCE_DIR "\" describe --always --dirty 2>/dev/null";
#else
    const std::string cmd = "git describe --always --dirty 2>/dev/null";
#endif
    if (FILE* p = popen(cmd.c_str(), "r")) {
        std::array<char, 128> buf{};
        while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
        pclose(p);
    }
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

}  // namespace rxnc::cli
