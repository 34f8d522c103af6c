#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rxnc/attack.hpp"
#include "rxnc/distinguisher.hpp"
#include "rxnc/rx_data.hpp"
#include "rxnc/sensitivity.hpp"

namespace rxnc::cli {

using nlohmann::json;

/// Thrown for malformed configs; main() prints the message and exits 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rejects unknown keys and wrong value types against the config schema
/// (documented in docs/cli.md).
void validate_config(const json& cfg);

/// Merges b into a, key by key for nested objects.
void merge_into(json& a, const json& b);

json load_config_file(const std::string& path);

/// FNV-1a 64 over the canonical (sorted-key, compact) dump.
std::uint64_t config_hash(const json& cfg);
std::string hex64(std::uint64_t v);

// Typed views over the config. Missing fields take the library defaults.
std::uint64_t cfg_seed(const json& cfg);
CipherId cfg_cipher(const json& cfg);
HalfRxDifference cfg_rxd(const json& cfg);
DataFormatSpec cfg_format(const json& cfg);
NegativeMode cfg_negatives(const json& cfg);
ModelConfig cfg_model(const json& cfg, std::size_t input_width);
TrainSchedule cfg_schedule(const json& section);
BstConfig cfg_bst(const json& cfg);
KbstConfig cfg_kbst(const json& cfg, int distinguisher_rounds);
double cfg_threshold(const json& cfg);
std::size_t cfg_max_bits(const json& cfg);
AttackConfig cfg_attack(const json& cfg);

/// Parses a word given as a JSON integer or a "0x.." string.
Word parse_word(const json& v, const std::string& what);

/// Output directory bookkeeping and the manifest written next to outputs.
class Run {
public:
    Run(std::string command, json config, std::optional<std::filesystem::path> out_dir, int workers);

    const json& config() const { return config_; }
    std::uint64_t hash() const { return hash_; }
    int workers() const { return workers_; }
    std::filesystem::path path(const std::string& file) const { return dir_ / file; }

    /// Records an output file; kind selects how --verify reads its embedded hash.
    void add_artifact(const std::string& file, const std::string& kind);
    /// Writes manifest.json (config, seed, hash, git describe, artifacts).
    void finish() const;
    /// Writes timing.json with wall-clock data; kept out of the manifest so
    /// repeated runs stay byte-identical.
    void write_timing(const json& timing) const;

private:
    std::string command_;
    json config_;
    std::uint64_t hash_;
    std::filesystem::path dir_;
    int workers_;
    std::vector<std::pair<std::string, std::string>> artifacts_;
};

/// Re-derives the config hash of a run directory and checks every artifact.
/// Returns the list of problems (empty when consistent).
std::vector<std::string> verify_run(const std::filesystem::path& dir);

std::string git_describe();

}  // namespace rxnc::cli
