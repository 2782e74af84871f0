#include "tppmix/classifier.hpp"

#include "tppmix/checkpoint.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tppmix {

using nn::Tape;
using nn::Var;
using nn::Vec;

void ClassifierConfig::validate() const {
    if (embed_dim <= 0 || hidden_dim <= 0) throw std::invalid_argument("classifier: dimensions must be positive");
    if (batch_size < 1) throw std::invalid_argument("classifier: batch_size must be at least 1");
    encoding.validate();
    optimizer.validate();
}

void to_json(nlohmann::json& j, const ClassifierConfig& c) {
    j = {{"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim}, {"cell", nn::to_string(c.cell)},
         {"encoding", c.encoding},   {"epochs", c.epochs},         {"batch_size", c.batch_size},
         {"optimizer", c.optimizer}};
}

void from_json(const nlohmann::json& j, ClassifierConfig& c) {
    c.embed_dim = j.at("embed_dim").get<Eigen::Index>();
    c.hidden_dim = j.at("hidden_dim").get<Eigen::Index>();
    c.cell = nn::parse_cell_kind(j.at("cell").get<std::string>());
    c.encoding = j.at("encoding").get<InputEncoding>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.optimizer = j.at("optimizer").get<nn::OptimizerConfig>();
    c.validate();
}

ClassifierModel::ClassifierModel(int clusters, const ClassifierConfig& config, Rng& init_rng)
    : clusters_(clusters),
      config_(config),
      embed_("classifier.embed", config.encoding.dim(), config.embed_dim),
      cell_("classifier.cell", config.cell, config.embed_dim, config.hidden_dim),
      out_("classifier.out", config.hidden_dim, clusters) {
    if (clusters < 1) throw std::invalid_argument("classifier: need at least one cluster");
    config_.validate();
    embed_.init(init_rng);
    cell_.init(init_rng);
    out_.init(init_rng);
}

Var ClassifierModel::log_probabilities(Tape& tape, const EventSequence& seq) const {
    Var state = cell_.initial_state(tape);
    double prev = 0.0;
    for (double t : seq.times) {
        Var x = tape.constant(config_.encoding.encode(t - prev, t, seq.horizon));
        state = cell_.step(tape, state, tape.tanh(embed_.forward(tape, x)));
        prev = t;
    }
    return tape.log_softmax(out_.forward(tape, cell_.hidden(tape, state)));
}

Vec ClassifierModel::probabilities(const EventSequence& seq) const {
    Tape tape;
    return log_probabilities(tape, seq).value().array().exp();
}

int ClassifierModel::predict(const EventSequence& seq) const {
    Tape tape;
    const Vec& lp = log_probabilities(tape, seq).value();
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < lp.size(); ++k) {
        if (lp[k] > lp[best]) best = k;
    }
    return static_cast<int>(best);
}

void ClassifierModel::zero_output() {
    out_.weight.value.setZero();
    out_.bias.value.setZero();
}

nn::ParameterList ClassifierModel::parameters() {
    nn::ParameterList params = embed_.parameters();
    for (auto* p : cell_.parameters()) params.push_back(p);
    for (auto* p : out_.parameters()) params.push_back(p);
    return params;
}

nlohmann::json ClassifierModel::to_json() const {
    return {{"kind", "classifier"},
            {"clusters", clusters_},
            {"config", config_},
            {"parameters", nn::parameters_to_json(const_cast<ClassifierModel*>(this)->parameters())}};
}

ClassifierModel ClassifierModel::from_json(const nlohmann::json& doc) {
    if (doc.at("kind").get<std::string>() != "classifier") throw std::runtime_error("checkpoint is not a classifier");
    ClassifierModel model;
    model.clusters_ = doc.at("clusters").get<int>();
    model.config_ = doc.at("config").get<ClassifierConfig>();
    const auto& c = model.config_;
    model.embed_ = nn::Dense("classifier.embed", c.encoding.dim(), c.embed_dim);
    model.cell_ = nn::RecurrentCell("classifier.cell", c.cell, c.embed_dim, c.hidden_dim);
    model.out_ = nn::Dense("classifier.out", c.hidden_dim, model.clusters_);
    nn::parameters_from_json(doc.at("parameters"), model.parameters());
    return model;
}

double cross_entropy_gradient(ClassifierModel& model, std::span<const EventSequence* const> batch,
                              std::span<const int> labels) {
    if (batch.size() != labels.size()) throw std::invalid_argument("cross_entropy: batch/label size mismatch");
    if (batch.empty()) return 0.0;
    const double w = -1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= model.clusters()) throw std::invalid_argument("cross_entropy: label out of range");
        Tape tape;
        Var term = tape.scale(tape.pick(model.log_probabilities(tape, *batch[i]), labels[i]), w);
        loss += term.scalar();
        tape.backward(term);
    }
    return loss;
}

double train_classifier(ClassifierModel& model, nn::Optimizer& optimizer, std::span<const EventSequence> samples,
                        std::span<const int> labels, Rng& rng) {
    if (samples.size() != labels.size()) throw std::invalid_argument("train_classifier: sample/label size mismatch");
    if (samples.empty()) return 0.0;
    const auto& cfg = model.config();
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto params = model.parameters();
    double last_epoch_loss = 0.0;
    std::vector<const EventSequence*> batch;
    std::vector<int> batch_labels;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            batch_labels.clear();
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(&samples[order[k]]);
                batch_labels.push_back(labels[order[k]]);
            }
            nn::zero_grads(params);
            epoch_loss += cross_entropy_gradient(model, batch, batch_labels) * static_cast<double>(end - start);
            optimizer.step(params);
        }
        last_epoch_loss = epoch_loss / static_cast<double>(order.size());
    }
    return last_epoch_loss;
}

double accuracy(const ClassifierModel& model, std::span<const EventSequence> samples, std::span<const int> labels) {
    if (samples.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) hits += model.predict(samples[i]) == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace tppmix
