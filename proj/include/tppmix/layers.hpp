#pragma once

#include "tppmix/autodiff.hpp"
#include "tppmix/rng.hpp"

#include <string>
#include <string_view>

namespace tppmix::nn {

/// Fills a parameter uniformly in [-s, s] with s = 1/sqrt(fan_in).
void init_uniform(Parameter& p, Eigen::Index fan_in, Rng& rng);

/// Fully connected layer y = W x + b.
class Dense {
public:
    Dense() = default;
    Dense(const std::string& name, Eigen::Index in_dim, Eigen::Index out_dim, bool with_bias = true);

    Var forward(Tape& tape, Var x) const;
    void init(Rng& rng);

    Eigen::Index in_dim() const { return weight.cols(); }
    Eigen::Index out_dim() const { return weight.rows(); }
    bool has_bias() const { return has_bias_; }
    ParameterList parameters();

    Parameter weight;
    Parameter bias;

private:
    bool has_bias_ = true;
};

enum class CellKind { tanh, lstm };

CellKind parse_cell_kind(std::string_view name);
std::string_view to_string(CellKind kind);

/// One recurrent cell. The tanh variant is h' = tanh(V x + W h) with no bias;
/// the gated variant is a standard long short-term memory cell whose state is
/// the concatenation [h; c].
class RecurrentCell {
public:
    RecurrentCell() = default;
    RecurrentCell(const std::string& name, CellKind kind, Eigen::Index input_dim, Eigen::Index hidden_dim);

    CellKind kind() const { return kind_; }
    Eigen::Index input_dim() const { return input_.cols(); }
    Eigen::Index hidden_dim() const { return hidden_dim_; }
    /// Length of the state vector carried between steps.
    Eigen::Index state_size() const { return kind_ == CellKind::lstm ? 2 * hidden_dim_ : hidden_dim_; }

    Var initial_state(Tape& tape) const;
    Var step(Tape& tape, Var state, Var input) const;
    /// The hidden vector h inside a state.
    Var hidden(Tape& tape, Var state) const;

    void init(Rng& rng);
    ParameterList parameters();

    /// Input-to-hidden weights (V); 4d rows for the gated cell.
    Parameter& input_weights() { return input_; }
    /// Hidden-to-hidden weights (W); 4d rows for the gated cell.
    Parameter& recurrent_weights() { return recurrent_; }

private:
    CellKind kind_ = CellKind::tanh;
    Eigen::Index hidden_dim_ = 0;
    Parameter input_;
    Parameter recurrent_;
    Parameter bias_;
};

}  // namespace tppmix::nn
