#pragma once

#include "tppmix/autodiff.hpp"
#include "tppmix/encoding.hpp"
#include "tppmix/layers.hpp"
#include "tppmix/optimizer.hpp"
#include "tppmix/rng.hpp"
#include "tppmix/sequence.hpp"

#include "json.hpp"

#include <span>
#include <vector>

namespace tppmix {

struct ClassifierConfig {
    Eigen::Index embed_dim = 32;
    Eigen::Index hidden_dim = 32;
    nn::CellKind cell = nn::CellKind::lstm;
    InputEncoding encoding;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    nn::OptimizerConfig optimizer;

    void validate() const;
};

void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);

/// Sequence classifier: per-event tanh embedding, recurrent layer, softmax
/// over clusters read from the final hidden state (the initial state for an
/// empty sequence).
class ClassifierModel {
public:
    ClassifierModel() = default;
    ClassifierModel(int clusters, const ClassifierConfig& config, Rng& init_rng);

    int clusters() const { return clusters_; }
    const ClassifierConfig& config() const { return config_; }

    nn::Var log_probabilities(nn::Tape& tape, const EventSequence& seq) const;
    nn::Vec probabilities(const EventSequence& seq) const;
    /// argmax with ties going to the lowest index.
    int predict(const EventSequence& seq) const;

    /// Zeroes the output layer so every prediction is uniform.
    void zero_output();

    nn::ParameterList parameters();

    nlohmann::json to_json() const;
    static ClassifierModel from_json(const nlohmann::json& doc);

private:
    int clusters_ = 0;
    ClassifierConfig config_;
    nn::Dense embed_;
    nn::RecurrentCell cell_;
    nn::Dense out_;
};

/// Mean cross-entropy of a labeled batch; gradients accumulated.
double cross_entropy_gradient(ClassifierModel& model, std::span<const EventSequence* const> batch,
                              std::span<const int> labels);

/// config.epochs passes of shuffled mini-batch training. Returns the mean
/// loss of the last epoch.
double train_classifier(ClassifierModel& model, nn::Optimizer& optimizer, std::span<const EventSequence> samples,
                        std::span<const int> labels, Rng& rng);

/// Fraction of sequences whose prediction equals their label.
double accuracy(const ClassifierModel& model, std::span<const EventSequence> samples, std::span<const int> labels);

}  // namespace tppmix
