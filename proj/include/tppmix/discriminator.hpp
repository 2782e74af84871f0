#pragma once

#include "tppmix/autodiff.hpp"
#include "tppmix/encoding.hpp"
#include "tppmix/layers.hpp"
#include "tppmix/sequence.hpp"

#include "json.hpp"

#include <vector>

namespace tppmix {

struct DiscriminatorConfig {
    Eigen::Index hidden_dim = 32;
    nn::CellKind cell = nn::CellKind::lstm;
    InputEncoding encoding;

    void validate() const;
};

void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

/// Scores (state, action) pairs. Its own recurrence reads the action stream;
/// after reading a_i the hidden vector stands for (s_{i-1}, a_i) and the
/// logistic head gives D(s, a), the probability that the pair came from the
/// policy rather than the expert.
class DiscriminatorModel {
public:
    DiscriminatorModel() = default;
    DiscriminatorModel(const DiscriminatorConfig& config, Rng& init_rng);

    const DiscriminatorConfig& config() const { return config_; }

    /// One logit per event.
    std::vector<nn::Var> logits(nn::Tape& tape, const EventSequence& seq) const;
    /// One score in (0, 1) per event.
    std::vector<double> discriminate(const EventSequence& seq) const;
    /// log D per event, computed stably from the logits.
    std::vector<double> log_scores(const EventSequence& seq) const;

    /// Zeroes the logistic head so every score is 0.5.
    void zero_head();

    nn::ParameterList parameters();
    nn::RecurrentCell& cell() { return cell_; }
    nn::Dense& head() { return head_; }

    nlohmann::json to_json() const;
    static DiscriminatorModel from_json(const nlohmann::json& doc);

private:
    DiscriminatorConfig config_;
    nn::RecurrentCell cell_;
    nn::Dense head_;
};

/// log sigmoid(z) and log(1 - sigmoid(z)) on the tape.
nn::Var log_sigmoid(nn::Tape& tape, nn::Var z);
nn::Var log_one_minus_sigmoid(nn::Tape& tape, nn::Var z);

}  // namespace tppmix
