#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rxnc/rx_data.hpp"

namespace rxnc {

/// Scores are clamped to [kScoreEps, 1 - kScoreEps] wherever a log-odds or
/// log-likelihood is taken.
constexpr double kScoreEps = 1e-7;

struct ModelConfig {
    std::size_t input_width = 0;
    std::vector<std::size_t> hidden_sizes{128, 64};
    std::uint64_t seed = 0;
};

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
};

/// Multilayer perceptron: rectifier hidden layers, one sigmoid output unit.
/// Inputs are sample bits mapped to {0.0, 1.0}.
class Model {
public:
    Model() = default;
    /// Glorot-uniform weights drawn from config.seed; zero biases.
    explicit Model(ModelConfig config);

    const ModelConfig& config() const { return config_; }
    std::size_t input_width() const { return config_.input_width; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    /// Forward pass on one packed sample. Throws on width mismatch.
    double score(std::span<const std::uint8_t> bits) const;

    /// Forward pass on a column-per-sample input matrix (input_width x n).
    Eigen::VectorXd forward(const Eigen::MatrixXd& inputs) const;

    /// Scores n packed samples laid out back to back (n * width/8 bytes).
    void score_packed(std::span<const std::uint8_t> packed, std::span<double> out) const;

    bool all_finite() const;
    std::size_t parameter_count() const;

private:
    ModelConfig config_;
    std::vector<DenseLayer> layers_;
};

/// Unpacks n samples (back to back, width bits each) into a width x n matrix.
void unpack_bits(std::span<const std::uint8_t> packed, std::size_t width, std::size_t n, Eigen::MatrixXd& out);

/// Mean binary cross-entropy and its gradient (same shapes as the layers).
struct LossAndGradient {
    double loss = 0.0;
    std::vector<DenseLayer> grad;
};
LossAndGradient loss_and_gradient(const Model& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels);

/// Mean binary cross-entropy with the score clamp applied.
double mean_loss(const Model& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels);

enum class Optimizer : std::uint8_t {
    Sgd = 0,   // plain mini-batch gradient descent
    Adam = 1,  // Adam with beta1 0.9, beta2 0.999; learning rates scale the step
};

struct TrainSchedule {
    int epochs = 10;
    Optimizer optimizer = Optimizer::Sgd;
    /// Decoupled L2 shrinkage of weight matrices per step: w -= lr * weight_decay * w.
    double weight_decay = 0.0;
    std::size_t batch_size = 1024;
    /// Learning rate of epoch e is learning_rates[e % size].
    std::vector<double> learning_rates = default_learning_rates();
    std::size_t train_size = 1u << 17;
    std::size_t val_size = 1u << 14;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
    /// Ten rates evenly spaced between 0.1 and 0.0001, highest first.
    static std::vector<double> default_learning_rates();
};

struct EvalReport {
    double accuracy = 0.0;
    double tpr = 0.0;
    double tnr = 0.0;
    std::size_t n = 0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

EvalReport evaluate(const Model& model, const Dataset& dataset);

/// Accuracy/TPR/TNR of precomputed scores at threshold 0.5.
EvalReport evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct TrainResult {
    Model model;  // weights of the epoch with the best validation accuracy
    EvalReport best;
    std::vector<EvalReport> per_epoch;
    std::vector<double> train_loss;
};

/// Mini-batch gradient descent on binary cross-entropy. Deterministic given
/// the model seed and sched.shuffle_seed.
TrainResult train(const Model& model, const Dataset& train_set, const Dataset& val_set, const TrainSchedule& sched,
                  const std::function<void(int, const EvalReport&, double)>& on_epoch = {});

struct TrainingStage {
    Dataset train_set;
    Dataset val_set;
    TrainSchedule schedule;
    bool skip = false;
};

struct StagedResult {
    Model model;
    std::vector<EvalReport> reports;  // one per executed stage
};

/// Sequential fine-tuning; an empty stage list returns base unchanged.
StagedResult staged_train(const Model& base, const std::vector<TrainingStage>& stages);

/// Binary model file (magic "RXNM"); layout in docs/file-formats.md.
struct ModelMetadata {
    std::string cipher;
    std::string format;
    int pairs_per_sample = 0;
    int lambda = 0;
    int rounds = 0;
    int delta_r = 0;
    std::uint64_t config_hash = 0;
};
void save_model(const Model& model, const std::string& path, const ModelMetadata& meta = {});
Model load_model(const std::string& path, ModelMetadata* meta = nullptr);

}  // namespace rxnc
