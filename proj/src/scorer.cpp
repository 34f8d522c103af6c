#include "rxnc/scorer.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rxnc {

namespace {

void check_sizes(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints, std::span<double> out,
                 int k) {
    if (pairs.size() != out.size() * static_cast<std::size_t>(k)) {
        throw std::invalid_argument("score_groups: pair count is not groups * pairs_per_group");
    }
    if (!hints.empty() && hints.size() != out.size()) {
        throw std::invalid_argument("score_groups: hint count differs from group count");
    }
}

}  // namespace

NeuralScorer::NeuralScorer(CipherId cipher, DataFormatSpec spec, Model model)
    : cipher_(cipher), spec_(spec), model_(std::move(model)) {
    spec_.validate();
    if (model_.input_width() != spec_.width_bits()) {
        throw std::invalid_argument("model width " + std::to_string(model_.input_width()) +
                                    " does not match data format width " + std::to_string(spec_.width_bits()));
    }
}

std::string NeuralScorer::name() const {
    std::ostringstream os;
    os << "mlp-" << cipher_name(cipher_) << "-r" << spec_.rounds << "-" << format_name(spec_.base) << "x"
       << spec_.pairs_per_sample;
    return os.str();
}

void NeuralScorer::score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints,
                                std::span<double> out) const {
    check_sizes(pairs, hints, out, spec_.pairs_per_sample);
    const std::size_t nbytes = spec_.width_bytes();
    const auto k = static_cast<std::size_t>(spec_.pairs_per_sample);
    std::vector<std::uint8_t> packed(out.size() * nbytes);
    for (std::size_t g = 0; g < out.size(); ++g) {
        build_sample_into(cipher_, spec_, pairs.subspan(g * k, k),
                          std::span<std::uint8_t>(packed).subspan(g * nbytes, nbytes));
    }
    model_.score_packed(packed, out);
}

ConstantScorer::ConstantScorer(double value, int pairs_per_group) : value_(value), k_(pairs_per_group) {
    if (k_ < 1) throw std::invalid_argument("pairs_per_group must be >= 1");
}

std::string ConstantScorer::name() const { return "constant-" + std::to_string(value_); }

void ConstantScorer::score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints,
                                  std::span<double> out) const {
    check_sizes(pairs, hints, out, k_);
    std::fill(out.begin(), out.end(), value_);
}

OracleScorer::OracleScorer(double hit, double miss, int pairs_per_group, bool graded)
    : hit_(hit), miss_(miss), k_(pairs_per_group), graded_(graded) {
    if (k_ < 1) throw std::invalid_argument("pairs_per_group must be >= 1");
}

std::string OracleScorer::name() const {
    std::ostringstream os;
    os << (graded_ ? "graded-oracle-" : "oracle-") << hit_ << "-" << miss_;
    return os.str();
}

double OracleScorer::score_for(std::uint8_t hint) const {
    if (hint == 0) return hit_;
    if (!graded_ || hint == kNoHint) return miss_;
    const double t = std::min<double>(hint, 16.0) / 16.0;
    return hit_ - (hit_ - miss_) * t;
}

void OracleScorer::score_groups(std::span<const BlockPair> pairs, std::span<const std::uint8_t> hints,
                                std::span<double> out) const {
    check_sizes(pairs, hints, out, k_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = score_for(hints.empty() ? kNoHint : hints[i]);
}

EvalReport evaluate_groups(const GroupScorer& scorer, const LabeledPairs& groups) {
    if (groups.pairs_per_group != scorer.pairs_per_group()) {
        throw std::invalid_argument("evaluate_groups: group size differs from the scorer's");
    }
    std::vector<double> scores(groups.groups());
    scorer.score_groups(groups.pairs, {}, scores);
    return evaluate_scores(scores, groups.labels);
}

}  // namespace rxnc
