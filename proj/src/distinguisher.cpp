#include "rxnc/distinguisher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rxnc/binary_io.hpp"
#include "rxnc/random.hpp"

namespace rxnc {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_score(double p) { return std::clamp(p, kScoreEps, 1.0 - kScoreEps); }

struct Activations {
    std::vector<Eigen::MatrixXd> a;  // a[0] = input, a[i] = output of layer i
};

Activations forward_all(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& x) {
    Activations act;
    act.a.reserve(layers.size() + 1);
    act.a.push_back(x);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Eigen::MatrixXd z = layers[i].weights * act.a.back();
        z.colwise() += layers[i].bias;
        if (i + 1 < layers.size()) {
            z = z.cwiseMax(0.0);
        } else {
            z = z.unaryExpr([](double v) { return sigmoid(v); });
        }
        act.a.push_back(std::move(z));
    }
    return act;
}

void check_width(const Model& m, std::size_t width) {
    if (width != m.input_width()) {
        throw std::invalid_argument("model expects " + std::to_string(m.input_width()) + " input bits, got " +
                                    std::to_string(width));
    }
}

}  // namespace

Model::Model(ModelConfig config) : config_(std::move(config)) {
    if (config_.input_width == 0) throw std::invalid_argument("model input width must be positive");
    CounterRng rng(config_.seed, 0);
    std::size_t fan_in = config_.input_width;
    std::vector<std::size_t> sizes = config_.hidden_sizes;
    sizes.push_back(1);
    for (std::size_t out : sizes) {
        if (out == 0) throw std::invalid_argument("hidden layer sizes must be positive");
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + out));
        DenseLayer layer;
        layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                layer.weights(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
            }
        }
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
        layers_.push_back(std::move(layer));
        fan_in = out;
    }
}

void unpack_bits(std::span<const std::uint8_t> packed, std::size_t width, std::size_t n, Eigen::MatrixXd& out) {
    const std::size_t nbytes = width / 8;
    if (packed.size() < n * nbytes) throw std::invalid_argument("unpack_bits: buffer too small");
    out.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
        double* col = out.col(static_cast<Eigen::Index>(s)).data();
        const std::uint8_t* src = packed.data() + s * nbytes;
        for (std::size_t b = 0; b < nbytes; ++b) {
            const std::uint8_t v = src[b];
            for (int j = 0; j < 8; ++j) col[8 * b + static_cast<std::size_t>(j)] = (v >> (7 - j)) & 1;
        }
    }
}

Eigen::VectorXd Model::forward(const Eigen::MatrixXd& inputs) const {
    check_width(*this, static_cast<std::size_t>(inputs.rows()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Eigen::MatrixXd z = layers_[i].weights * a;
        z.colwise() += layers_[i].bias;
        if (i + 1 < layers_.size()) {
            a = z.cwiseMax(0.0);
        } else {
            a = z.unaryExpr([](double v) { return sigmoid(v); });
        }
    }
    return a.row(0).transpose();
}

double Model::score(std::span<const std::uint8_t> bits) const {
    check_width(*this, bits.size() * 8);
    Eigen::MatrixXd x;
    unpack_bits(bits, input_width(), 1, x);
    return forward(x)(0);
}

void Model::score_packed(std::span<const std::uint8_t> packed, std::span<double> out) const {
    const std::size_t nbytes = input_width() / 8;
    if (packed.size() != out.size() * nbytes) throw std::invalid_argument("score_packed: buffer size mismatch");
    constexpr std::size_t kChunk = 4096;
    Eigen::MatrixXd x;
    for (std::size_t begin = 0; begin < out.size(); begin += kChunk) {
        const std::size_t n = std::min(kChunk, out.size() - begin);
        unpack_bits(packed.subspan(begin * nbytes, n * nbytes), input_width(), n, x);
        const Eigen::VectorXd s = forward(x);
        std::copy(s.data(), s.data() + n, out.begin() + static_cast<std::ptrdiff_t>(begin));
    }
}

bool Model::all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(),
                       [](const DenseLayer& l) { return l.weights.allFinite() && l.bias.allFinite(); });
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

double mean_loss(const Model& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels) {
    const Eigen::VectorXd p = model.forward(inputs);
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double q = clamp_score(p(i));
        total -= labels(i) * std::log(q) + (1.0 - labels(i)) * std::log(1.0 - q);
    }
    return total / static_cast<double>(p.size());
}

LossAndGradient loss_and_gradient(const Model& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels) {
    check_width(model, static_cast<std::size_t>(inputs.rows()));
    const auto& layers = model.layers();
    const Activations act = forward_all(layers, inputs);
    const Eigen::Index n = inputs.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    LossAndGradient out;
    const Eigen::RowVectorXd p = act.a.back().row(0);
    Eigen::MatrixXd delta(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double raw = p(i);
        const double q = clamp_score(raw);
        out.loss -= labels(i) * std::log(q) + (1.0 - labels(i)) * std::log(1.0 - q);
        // d(loss)/dz for a sigmoid output is p - y; zero where the clamp is active.
        delta(0, i) = (raw == q) ? (raw - labels(i)) * inv_n : 0.0;
    }
    out.loss *= inv_n;

    out.grad.resize(layers.size());
    for (std::size_t li = layers.size(); li-- > 0;) {
        out.grad[li].weights = delta * act.a[li].transpose();
        out.grad[li].bias = delta.rowwise().sum();
        if (li == 0) break;
        Eigen::MatrixXd back = layers[li].weights.transpose() * delta;
        const Eigen::MatrixXd& a = act.a[li];
        delta = back.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
    return out;
}

void TrainSchedule::validate() const {
    if (epochs < 1) throw std::invalid_argument("schedule: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("schedule: batch_size must be >= 1");
    if (train_size < 1 || val_size < 1) throw std::invalid_argument("schedule: dataset sizes must be >= 1");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw std::invalid_argument("schedule: weight_decay must be >= 0");
    if (learning_rates.empty()) throw std::invalid_argument("schedule: learning_rates must be non-empty");
    for (double lr : learning_rates) {
        if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("schedule: learning rates must be > 0");
    }
}

std::vector<double> TrainSchedule::default_learning_rates() {
    std::vector<double> lrs(10);
    for (int i = 0; i < 10; ++i) lrs[static_cast<std::size_t>(i)] = 0.1 - 0.0111 * i;
    return lrs;
}

EvalReport evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.empty()) throw std::invalid_argument("evaluate: empty dataset");
    if (scores.size() != labels.size()) throw std::invalid_argument("evaluate: score/label count mismatch");
    EvalReport r;
    r.n = scores.size();
    std::size_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i]) {
            ++r.n_pos;
            tp += scores[i] > 0.5;
        } else {
            ++r.n_neg;
            tn += scores[i] <= 0.5;
        }
    }
    r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(r.n);
    r.tpr = r.n_pos ? static_cast<double>(tp) / static_cast<double>(r.n_pos) : 0.0;
    r.tnr = r.n_neg ? static_cast<double>(tn) / static_cast<double>(r.n_neg) : 0.0;
    return r;
}

namespace {

std::vector<std::uint8_t> pack_dataset(const Dataset& ds) {
    const std::size_t nbytes = ds.spec.width_bytes();
    std::vector<std::uint8_t> packed(ds.size() * nbytes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::copy(ds.samples[i].bits.begin(), ds.samples[i].bits.end(),
                  packed.begin() + static_cast<std::ptrdiff_t>(i * nbytes));
    }
    return packed;
}

std::vector<std::uint8_t> labels_of(const Dataset& ds) {
    std::vector<std::uint8_t> labels(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) labels[i] = ds.samples[i].label;
    return labels;
}

}  // namespace

EvalReport evaluate(const Model& model, const Dataset& dataset) {
    if (dataset.samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
    check_width(model, dataset.spec.width_bits());
    const auto packed = pack_dataset(dataset);
    std::vector<double> scores(dataset.size());
    model.score_packed(packed, scores);
    const auto labels = labels_of(dataset);
    return evaluate_scores(scores, labels);
}

TrainResult train(const Model& model, const Dataset& train_set, const Dataset& val_set, const TrainSchedule& sched,
                  const std::function<void(int, const EvalReport&, double)>& on_epoch) {
    sched.validate();
    if (train_set.samples.empty() || val_set.samples.empty()) throw std::invalid_argument("train: empty dataset");
    check_width(model, train_set.spec.width_bits());
    check_width(model, val_set.spec.width_bits());

    const std::size_t width = model.input_width();
    const std::size_t nbytes = width / 8;
    const std::size_t n = train_set.size();
    const auto packed = pack_dataset(train_set);

    TrainResult result;
    result.model = model;
    Model current = model;
    std::vector<std::size_t> order(n);
    std::vector<std::uint8_t> batch_bytes;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    bool have_best = false;

    // Adam moments, same shapes as the layers.
    std::vector<DenseLayer> m1, m2;
    if (sched.optimizer == Optimizer::Adam) {
        for (const auto& l : current.layers()) {
            m1.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.bias.size())});
        }
        m2 = m1;
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
    std::uint64_t step = 0;

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng rng(sched.shuffle_seed, static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        const double lr = sched.learning_rates[static_cast<std::size_t>(epoch) % sched.learning_rates.size()];
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += sched.batch_size) {
            const std::size_t bs = std::min(sched.batch_size, n - begin);
            batch_bytes.resize(bs * nbytes);
            y.resize(static_cast<Eigen::Index>(bs));
            for (std::size_t j = 0; j < bs; ++j) {
                const std::size_t idx = order[begin + j];
                std::copy_n(packed.begin() + static_cast<std::ptrdiff_t>(idx * nbytes), nbytes,
                            batch_bytes.begin() + static_cast<std::ptrdiff_t>(j * nbytes));
                y(static_cast<Eigen::Index>(j)) = train_set.samples[idx].label;
            }
            unpack_bits(batch_bytes, width, bs, x);
            const LossAndGradient lg = loss_and_gradient(current, x, y);
            auto& layers = current.layers();
            if (sched.weight_decay > 0.0) {
                for (auto& l : layers) l.weights *= 1.0 - lr * sched.weight_decay;
            }
            if (sched.optimizer == Optimizer::Sgd) {
                for (std::size_t li = 0; li < layers.size(); ++li) {
                    layers[li].weights.noalias() -= lr * lg.grad[li].weights;
                    layers[li].bias.noalias() -= lr * lg.grad[li].bias;
                }
            } else {
                ++step;
                const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
                const double a = lr * std::sqrt(c2) / c1;
                auto update = [&](auto& param, auto& mom, auto& var, const auto& g) {
                    mom = kBeta1 * mom + (1.0 - kBeta1) * g;
                    var = kBeta2 * var + (1.0 - kBeta2) * g.cwiseProduct(g);
                    param.array() -= a * mom.array() / (var.array().sqrt() + kAdamEps);
                };
                for (std::size_t li = 0; li < layers.size(); ++li) {
                    update(layers[li].weights, m1[li].weights, m2[li].weights, lg.grad[li].weights);
                    update(layers[li].bias, m1[li].bias, m2[li].bias, lg.grad[li].bias);
                }
            }
            epoch_loss += lg.loss;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        const EvalReport rep = evaluate(current, val_set);
        result.per_epoch.push_back(rep);
        result.train_loss.push_back(epoch_loss);
        if (!have_best || rep.accuracy > result.best.accuracy) {
            result.best = rep;
            result.model = current;
            have_best = true;
        }
        if (on_epoch) on_epoch(epoch, rep, epoch_loss);
    }
    return result;
}

StagedResult staged_train(const Model& base, const std::vector<TrainingStage>& stages) {
    for (const auto& st : stages) {
        if (st.skip) continue;
        check_width(base, st.train_set.spec.width_bits());
        check_width(base, st.val_set.spec.width_bits());
    }
    StagedResult out;
    out.model = base;
    for (const auto& st : stages) {
        if (st.skip) continue;
        TrainResult r = train(out.model, st.train_set, st.val_set, st.schedule);
        out.model = std::move(r.model);
        out.reports.push_back(r.best);
    }
    return out;
}

namespace {
constexpr std::string_view kModelMagic = "RXNM";
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_model(const Model& model, const std::string& path, const ModelMetadata& meta) {
    nlohmann::json j;
    j["input_width"] = model.config().input_width;
    j["hidden_sizes"] = model.config().hidden_sizes;
    j["seed"] = model.config().seed;
    j["activation"] = "relu";
    j["output"] = "sigmoid";
    j["cipher"] = meta.cipher;
    j["format"] = meta.format;
    j["pairs_per_sample"] = meta.pairs_per_sample;
    j["lambda"] = meta.lambda;
    j["rounds"] = meta.rounds;
    j["delta_r"] = meta.delta_r;
    j["config_hash"] = meta.config_hash;

    io::Writer w(path);
    w.magic(kModelMagic);
    w.put<std::uint32_t>(kModelVersion);
    w.string(j.dump());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.layers().size()));
    for (const auto& l : model.layers()) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(l.weights.rows()));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(l.weights.cols()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.put<double>(l.weights(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.put<double>(l.bias(r));
    }
    w.close();
}

Model load_model(const std::string& path, ModelMetadata* meta) {
    io::Reader r(path);
    r.expect_magic(kModelMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kModelVersion) {
        throw std::runtime_error("'" + path + "': unsupported model version " + std::to_string(version));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(r.string());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("'" + path + "': corrupt model header: " + e.what());
    }
    ModelConfig cfg;
    try {
        cfg.input_width = j.at("input_width").get<std::size_t>();
        cfg.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        if (meta) {
            meta->cipher = j.value("cipher", "");
            meta->format = j.value("format", "");
            meta->pairs_per_sample = j.value("pairs_per_sample", 0);
            meta->lambda = j.value("lambda", 0);
            meta->rounds = j.value("rounds", 0);
            meta->delta_r = j.value("delta_r", 0);
            meta->config_hash = j.value("config_hash", std::uint64_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("'" + path + "': corrupt model header: " + e.what());
    }
    Model m(cfg);
    const auto nlayers = r.get<std::uint32_t>();
    if (nlayers != m.layers().size()) throw std::runtime_error("'" + path + "': layer count disagrees with config");
    for (auto& l : m.layers()) {
        const auto rows = r.get<std::uint32_t>();
        const auto cols = r.get<std::uint32_t>();
        if (rows != l.weights.rows() || cols != l.weights.cols()) {
            throw std::runtime_error("'" + path + "': layer shape disagrees with config");
        }
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(i, c) = r.get<double>();
        }
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = r.get<double>();
    }
    if (!r.at_eof()) throw std::runtime_error("'" + path + "': trailing bytes after weights");
    if (!m.all_finite()) throw std::runtime_error("'" + path + "': non-finite weights");
    return m;
}

}  // namespace rxnc
