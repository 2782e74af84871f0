#pragma once

// Small reverse-mode differentiation tape over dense vectors.
//
// Values are Eigen column vectors. Trainable weights live in `Parameter`
// objects that outlive the tape; backward() accumulates into their gradient
// buffers. A tape records one forward pass and is discarded (or cleared)
// afterwards.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tppmix::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Tape;

/// Trainable matrix (a vector is a matrix with one column) together with its
/// gradient accumulator and the optimizer's moment buffers.
struct Parameter {
    Parameter() = default;
    Parameter(std::string name, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(name)),
          value(Mat::Zero(rows, cols)),
          grad(Mat::Zero(rows, cols)),
          moment1(Mat::Zero(rows, cols)),
          moment2(Mat::Zero(rows, cols)) {}

    std::string name;
    Mat value;
    // Written by Tape::backward through const references held on the tape.
    mutable Mat grad;
    Mat moment1;
    Mat moment2;

    Eigen::Index rows() const { return value.rows(); }
    Eigen::Index cols() const { return value.cols(); }
    Eigen::Index size() const { return value.size(); }
    void zero_grad() const { grad.setZero(); }
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(const ParameterList& params);

/// Handle to a node on a tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    const Vec& value() const;
    /// Value of a one-element node.
    double scalar() const;
    Eigen::Index size() const { return value().size(); }
    int id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf node with no gradient flowing anywhere.
    Var constant(Vec value);
    Var constant(double value);

    /// W x + b. `bias` may be null.
    Var affine(const Parameter& weight, const Parameter* bias, Var x);
    /// W x + U h + b, the pre-activation of a recurrent cell.
    Var affine2(const Parameter& w_in, Var x, const Parameter& w_rec, Var h, const Parameter* bias);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                 // elementwise
    Var scale(Var a, double k);
    Var add_scalar(Var a, double k);
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var sum(Var a);                        // -> one element
    Var slice(Var a, Eigen::Index start, Eigen::Index length);
    Var log_softmax(Var a);
    Var pick(Var a, Eigen::Index index);   // -> one element
    /// Sum of one-element nodes.
    Var sum_scalars(const std::vector<Var>& terms);
    /// sum_i k_i * v_i for one-element nodes v_i and constants k_i.
    Var weighted_sum(const std::vector<Var>& terms, const std::vector<double>& weights);
    /// Gated recurrent update. Input is the 4d pre-activation (input, forget,
    /// candidate, output blocks) and the previous cell memory; the output is
    /// the concatenation [h; c].
    Var lstm_gates(Var preact, Var prev_cell);

    /// Reverse sweep from a one-element node. Accumulates into every
    /// Parameter reached.
    void backward(Var loss);

    /// Gradient of the last backward() with respect to a node.
    const Vec& grad(Var v) const;

    void clear();
    std::size_t size() const { return nodes_.size(); }

private:
    friend class Var;

    enum class Op {
        Constant, Affine, Affine2, Add, Sub, Mul, Scale, AddScalar, Tanh, Sigmoid,
        Softplus, Exp, Log, Sum, Slice, LogSoftmax, Pick, WeightedSum, LstmGates
    };

    struct Node {
        Op op = Op::Constant;
        int a = -1;
        int b = -1;
        const Parameter* p1 = nullptr;
        const Parameter* p2 = nullptr;
        const Parameter* p3 = nullptr;
        double k = 0.0;
        Eigen::Index offset = 0;
        std::size_t extra_begin = 0;
        std::size_t extra_end = 0;
        Vec value;
        Vec cache;
    };

    Var push(Node node);
    const Node& node(Var v) const;
    void check(Var v) const;

    std::vector<Node> nodes_;
    std::vector<int> extra_ids_;
    std::vector<double> extra_weights_;
    std::vector<Vec> grads_;
    bool has_backward_ = false;
};

}  // namespace tppmix::nn
