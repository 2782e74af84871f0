#include "tppmix/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace tppmix::nn {

void init_uniform(Parameter& p, Eigen::Index fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
        for (Eigen::Index r = 0; r < p.rows(); ++r) p.value(r, c) = rng.uniform(-s, s);
    }
}

Dense::Dense(const std::string& name, Eigen::Index in_dim, Eigen::Index out_dim, bool with_bias)
    : weight(name + ".weight", out_dim, in_dim), bias(name + ".bias", out_dim, 1), has_bias_(with_bias) {}

Var Dense::forward(Tape& tape, Var x) const {
    return tape.affine(weight, has_bias_ ? &bias : nullptr, x);
}

void Dense::init(Rng& rng) {
    init_uniform(weight, in_dim(), rng);
    if (has_bias_) init_uniform(bias, in_dim(), rng);
}

ParameterList Dense::parameters() {
    if (has_bias_) return {&weight, &bias};
    return {&weight};
}

CellKind parse_cell_kind(std::string_view name) {
    if (name == "tanh") return CellKind::tanh;
    if (name == "lstm") return CellKind::lstm;
    throw std::invalid_argument("unknown cell kind '" + std::string(name) + "' (expected tanh or lstm)");
}

std::string_view to_string(CellKind kind) {
    return kind == CellKind::lstm ? "lstm" : "tanh";
}

RecurrentCell::RecurrentCell(const std::string& name, CellKind kind, Eigen::Index input_dim, Eigen::Index hidden_dim)
    : kind_(kind), hidden_dim_(hidden_dim) {
    if (hidden_dim <= 0 || input_dim <= 0) throw std::invalid_argument("RecurrentCell: dimensions must be positive");
    const Eigen::Index rows = kind == CellKind::lstm ? 4 * hidden_dim : hidden_dim;
    input_ = Parameter(name + ".input", rows, input_dim);
    recurrent_ = Parameter(name + ".recurrent", rows, hidden_dim);
    if (kind == CellKind::lstm) bias_ = Parameter(name + ".bias", rows, 1);
}

Var RecurrentCell::initial_state(Tape& tape) const {
    return tape.constant(Vec::Zero(state_size()));
}

Var RecurrentCell::step(Tape& tape, Var state, Var input) const {
    if (state.size() != state_size()) throw std::invalid_argument("RecurrentCell::step: state size mismatch");
    if (kind_ == CellKind::tanh) {
        return tape.tanh(tape.affine2(input_, input, recurrent_, state, nullptr));
    }
    Var h = tape.slice(state, 0, hidden_dim_);
    Var c = tape.slice(state, hidden_dim_, hidden_dim_);
    Var z = tape.affine2(input_, input, recurrent_, h, &bias_);
    return tape.lstm_gates(z, c);
}

Var RecurrentCell::hidden(Tape& tape, Var state) const {
    if (kind_ == CellKind::tanh) return state;
    return tape.slice(state, 0, hidden_dim_);
}

void RecurrentCell::init(Rng& rng) {
    init_uniform(input_, hidden_dim_, rng);
    init_uniform(recurrent_, hidden_dim_, rng);
    if (kind_ == CellKind::lstm) init_uniform(bias_, hidden_dim_, rng);
}

ParameterList RecurrentCell::parameters() {
    if (kind_ == CellKind::lstm) return {&input_, &recurrent_, &bias_};
    return {&input_, &recurrent_};
}

}  // namespace tppmix::nn
