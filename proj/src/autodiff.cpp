#include "tppmix/autodiff.hpp"

#include <cmath>

namespace tppmix::nn {

namespace {

double softplus_scalar(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void accumulate(Vec& slot, const Vec& g) {
    if (slot.size() == 0) {
        slot = g;
    } else {
        slot += g;
    }
}

}  // namespace

void zero_grads(const ParameterList& params) {
    for (auto* p : params) p->zero_grad();
}

const Vec& Var::value() const {
    if (tape_ == nullptr) throw std::logic_error("Var: empty handle");
    return tape_->node(*this).value;
}

double Var::scalar() const {
    const Vec& v = value();
    if (v.size() != 1) throw std::logic_error("Var::scalar: node has " + std::to_string(v.size()) + " elements");
    return v[0];
}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    has_backward_ = false;
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Tape::Node& Tape::node(Var v) const {
    check(v);
    return nodes_[static_cast<std::size_t>(v.id())];
}

void Tape::check(Var v) const {
    if (v.tape() != this || v.id() < 0 || static_cast<std::size_t>(v.id()) >= nodes_.size()) {
        throw std::logic_error("Tape: variable does not belong to this tape");
    }
}

Var Tape::constant(Vec value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::constant(double value) {
    return constant(Vec::Constant(1, value));
}

Var Tape::affine(const Parameter& weight, const Parameter* bias, Var x) {
    const Vec& xv = node(x).value;
    if (weight.cols() != xv.size()) {
        throw std::invalid_argument("affine: weight " + weight.name + " expects input of size " +
                                    std::to_string(weight.cols()) + ", got " + std::to_string(xv.size()));
    }
    if (bias != nullptr && (bias->rows() != weight.rows() || bias->cols() != 1)) {
        throw std::invalid_argument("affine: bias " + bias->name + " shape mismatch");
    }
    Node n;
    n.op = Op::Affine;
    n.a = x.id();
    n.p1 = &weight;
    n.p2 = bias;
    n.value = weight.value * xv;
    if (bias != nullptr) n.value += bias->value.col(0);
    return push(std::move(n));
}

Var Tape::affine2(const Parameter& w_in, Var x, const Parameter& w_rec, Var h, const Parameter* bias) {
    const Vec& xv = node(x).value;
    const Vec& hv = node(h).value;
    if (w_in.cols() != xv.size() || w_rec.cols() != hv.size() || w_in.rows() != w_rec.rows()) {
        throw std::invalid_argument("affine2: shape mismatch (" + w_in.name + ", " + w_rec.name + ")");
    }
    if (bias != nullptr && bias->rows() != w_in.rows()) {
        throw std::invalid_argument("affine2: bias " + bias->name + " shape mismatch");
    }
    Node n;
    n.op = Op::Affine2;
    n.a = x.id();
    n.b = h.id();
    n.p1 = &w_in;
    n.p2 = &w_rec;
    n.p3 = bias;
    n.value = w_in.value * xv + w_rec.value * hv;
    if (bias != nullptr) n.value += bias->value.col(0);
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    const Vec& av = node(a).value;
    const Vec& bv = node(b).value;
    if (av.size() != bv.size()) throw std::invalid_argument("add: size mismatch");
    Node n;
    n.op = Op::Add;
    n.a = a.id();
    n.b = b.id();
    n.value = av + bv;
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    const Vec& av = node(a).value;
    const Vec& bv = node(b).value;
    if (av.size() != bv.size()) throw std::invalid_argument("sub: size mismatch");
    Node n;
    n.op = Op::Sub;
    n.a = a.id();
    n.b = b.id();
    n.value = av - bv;
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    const Vec& av = node(a).value;
    const Vec& bv = node(b).value;
    if (av.size() != bv.size()) throw std::invalid_argument("mul: size mismatch");
    Node n;
    n.op = Op::Mul;
    n.a = a.id();
    n.b = b.id();
    n.value = av.cwiseProduct(bv);
    return push(std::move(n));
}

Var Tape::scale(Var a, double k) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id();
    n.k = k;
    n.value = node(a).value * k;
    return push(std::move(n));
}

Var Tape::add_scalar(Var a, double k) {
    Node n;
    n.op = Op::AddScalar;
    n.a = a.id();
    n.k = k;
    n.value = node(a).value.array() + k;
    return push(std::move(n));
}

Var Tape::tanh(Var a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a.id();
    n.value = node(a).value.array().tanh();
    return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a.id();
    n.value = node(a).value.unaryExpr(&sigmoid_scalar);
    return push(std::move(n));
}

Var Tape::softplus(Var a) {
    Node n;
    n.op = Op::Softplus;
    n.a = a.id();
    n.value = node(a).value.unaryExpr(&softplus_scalar);
    return push(std::move(n));
}

Var Tape::exp(Var a) {
    Node n;
    n.op = Op::Exp;
    n.a = a.id();
    n.value = node(a).value.array().exp();
    return push(std::move(n));
}

Var Tape::log(Var a) {
    Node n;
    n.op = Op::Log;
    n.a = a.id();
    n.value = node(a).value.array().log();
    return push(std::move(n));
}

Var Tape::sum(Var a) {
    Node n;
    n.op = Op::Sum;
    n.a = a.id();
    n.value = Vec::Constant(1, node(a).value.sum());
    return push(std::move(n));
}

Var Tape::slice(Var a, Eigen::Index start, Eigen::Index length) {
    const Vec& av = node(a).value;
    if (start < 0 || length < 0 || start + length > av.size()) throw std::invalid_argument("slice: out of range");
    Node n;
    n.op = Op::Slice;
    n.a = a.id();
    n.offset = start;
    n.value = av.segment(start, length);
    return push(std::move(n));
}

Var Tape::log_softmax(Var a) {
    const Vec& av = node(a).value;
    const double m = av.maxCoeff();
    const double lse = m + std::log((av.array() - m).exp().sum());
    Node n;
    n.op = Op::LogSoftmax;
    n.a = a.id();
    n.value = av.array() - lse;
    return push(std::move(n));
}

Var Tape::pick(Var a, Eigen::Index index) {
    const Vec& av = node(a).value;
    if (index < 0 || index >= av.size()) throw std::invalid_argument("pick: index out of range");
    Node n;
    n.op = Op::Pick;
    n.a = a.id();
    n.offset = index;
    n.value = Vec::Constant(1, av[index]);
    return push(std::move(n));
}

Var Tape::sum_scalars(const std::vector<Var>& terms) {
    return weighted_sum(terms, std::vector<double>(terms.size(), 1.0));
}

Var Tape::weighted_sum(const std::vector<Var>& terms, const std::vector<double>& weights) {
    if (terms.size() != weights.size()) throw std::invalid_argument("weighted_sum: size mismatch");
    Node n;
    n.op = Op::WeightedSum;
    n.extra_begin = extra_ids_.size();
    double total = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        total += weights[i] * terms[i].scalar();
        check(terms[i]);
        extra_ids_.push_back(terms[i].id());
        extra_weights_.push_back(weights[i]);
    }
    n.extra_end = extra_ids_.size();
    n.value = Vec::Constant(1, total);
    return push(std::move(n));
}

Var Tape::lstm_gates(Var preact, Var prev_cell) {
    const Vec& z = node(preact).value;
    const Vec& c_prev = node(prev_cell).value;
    const Eigen::Index d = c_prev.size();
    if (z.size() != 4 * d) throw std::invalid_argument("lstm_gates: pre-activation must have 4x the cell size");
    Node n;
    n.op = Op::LstmGates;
    n.a = preact.id();
    n.b = prev_cell.id();
    n.cache.resize(5 * d);
    auto i = n.cache.segment(0, d);
    auto f = n.cache.segment(d, d);
    auto g = n.cache.segment(2 * d, d);
    auto o = n.cache.segment(3 * d, d);
    auto tc = n.cache.segment(4 * d, d);
    i = z.segment(0, d).unaryExpr(&sigmoid_scalar);
    f = z.segment(d, d).unaryExpr(&sigmoid_scalar);
    g = z.segment(2 * d, d).array().tanh();
    o = z.segment(3 * d, d).unaryExpr(&sigmoid_scalar);
    n.value.resize(2 * d);
    n.value.segment(d, d) = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    tc = n.value.segment(d, d).array().tanh();
    n.value.segment(0, d) = o.cwiseProduct(tc);
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    check(loss);
    if (node(loss).value.size() != 1) throw std::invalid_argument("backward: loss must be a single element");
    grads_.assign(nodes_.size(), Vec());
    grads_[static_cast<std::size_t>(loss.id())] = Vec::Ones(1);

    for (int id = loss.id(); id >= 0; --id) {
        const Vec& g = grads_[static_cast<std::size_t>(id)];
        if (g.size() == 0) continue;
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        auto slot = [this](int target) -> Vec& { return grads_[static_cast<std::size_t>(target)]; };
        switch (n.op) {
            case Op::Constant:
                break;
            case Op::Affine: {
                const Vec& x = nodes_[static_cast<std::size_t>(n.a)].value;
                n.p1->grad.noalias() += g * x.transpose();
                if (n.p2 != nullptr) n.p2->grad.col(0) += g;
                accumulate(slot(n.a), n.p1->value.transpose() * g);
                break;
            }
            case Op::Affine2: {
                const Vec& x = nodes_[static_cast<std::size_t>(n.a)].value;
                const Vec& h = nodes_[static_cast<std::size_t>(n.b)].value;
                n.p1->grad.noalias() += g * x.transpose();
                n.p2->grad.noalias() += g * h.transpose();
                if (n.p3 != nullptr) n.p3->grad.col(0) += g;
                accumulate(slot(n.a), n.p1->value.transpose() * g);
                accumulate(slot(n.b), n.p2->value.transpose() * g);
                break;
            }
            case Op::Add:
                accumulate(slot(n.a), g);
                accumulate(slot(n.b), g);
                break;
            case Op::Sub:
                accumulate(slot(n.a), g);
                accumulate(slot(n.b), -g);
                break;
            case Op::Mul: {
                const Vec& av = nodes_[static_cast<std::size_t>(n.a)].value;
                const Vec& bv = nodes_[static_cast<std::size_t>(n.b)].value;
                accumulate(slot(n.a), g.cwiseProduct(bv));
                accumulate(slot(n.b), g.cwiseProduct(av));
                break;
            }
            case Op::Scale:
                accumulate(slot(n.a), g * n.k);
                break;
            case Op::AddScalar:
                accumulate(slot(n.a), g);
                break;
            case Op::Tanh:
                accumulate(slot(n.a), g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
                break;
            case Op::Sigmoid:
                accumulate(slot(n.a), g.cwiseProduct((n.value.array() * (1.0 - n.value.array())).matrix()));
                break;
            case Op::Softplus: {
                const Vec& av = nodes_[static_cast<std::size_t>(n.a)].value;
                accumulate(slot(n.a), g.cwiseProduct(av.unaryExpr(&sigmoid_scalar)));
                break;
            }
            case Op::Exp:
                accumulate(slot(n.a), g.cwiseProduct(n.value));
                break;
            case Op::Log: {
                const Vec& av = nodes_[static_cast<std::size_t>(n.a)].value;
                accumulate(slot(n.a), g.cwiseQuotient(av));
                break;
            }
            case Op::Sum: {
                const auto len = nodes_[static_cast<std::size_t>(n.a)].value.size();
                accumulate(slot(n.a), Vec::Constant(len, g[0]));
                break;
            }
            case Op::Slice: {
                Vec& target = slot(n.a);
                if (target.size() == 0) target = Vec::Zero(nodes_[static_cast<std::size_t>(n.a)].value.size());
                target.segment(n.offset, g.size()) += g;
                break;
            }
            case Op::LogSoftmax: {
                const Vec soft = n.value.array().exp();
                accumulate(slot(n.a), g - soft * g.sum());
                break;
            }
            case Op::Pick: {
                Vec& target = slot(n.a);
                if (target.size() == 0) target = Vec::Zero(nodes_[static_cast<std::size_t>(n.a)].value.size());
                target[n.offset] += g[0];
                break;
            }
            case Op::WeightedSum:
                for (std::size_t e = n.extra_begin; e < n.extra_end; ++e) {
                    Vec& target = slot(extra_ids_[e]);
                    if (target.size() == 0) target = Vec::Zero(1);
                    target[0] += g[0] * extra_weights_[e];
                }
                break;
            case Op::LstmGates: {
                const Vec& c_prev = nodes_[static_cast<std::size_t>(n.b)].value;
                const Eigen::Index d = c_prev.size();
                const auto i = n.cache.segment(0, d).array();
                const auto f = n.cache.segment(d, d).array();
                const auto gg = n.cache.segment(2 * d, d).array();
                const auto o = n.cache.segment(3 * d, d).array();
                const auto tc = n.cache.segment(4 * d, d).array();
                const auto gh = g.segment(0, d).array();
                const auto gc = g.segment(d, d).array();
                const Eigen::ArrayXd dc = gc + gh * o * (1.0 - tc.square());
                Vec dz(4 * d);
                dz.segment(0, d) = (dc * gg * i * (1.0 - i)).matrix();
                dz.segment(d, d) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
                dz.segment(2 * d, d) = (dc * i * (1.0 - gg.square())).matrix();
                dz.segment(3 * d, d) = (gh * tc * o * (1.0 - o)).matrix();
                accumulate(slot(n.a), dz);
                accumulate(slot(n.b), (dc * f).matrix());
                break;
            }
        }
    }
    has_backward_ = true;
}

const Vec& Tape::grad(Var v) const {
    check(v);
    if (!has_backward_) throw std::logic_error("Tape::grad: backward has not been run");
    static const Vec empty;
    const Vec& g = grads_[static_cast<std::size_t>(v.id())];
    return g.size() == 0 ? empty : g;
}

void Tape::clear() {
    nodes_.clear();
    extra_ids_.clear();
    extra_weights_.clear();
    grads_.clear();
    has_backward_ = false;
}

}  // namespace tppmix::nn
