#include "nextpp/autodiff.hpp"

#include <algorithm>

#include "nextpp/errors.hpp"

namespace nextpp {

std::size_t ParamStore::add(std::string name, Tensor init) {
    if (lookup_.contains(name)) throw ContractError("duplicate parameter '" + name + "'");
    lookup_.emplace(name, values_.size());
    names_.push_back(std::move(name));
    values_.push_back(std::move(init));
    return values_.size() - 1;
}

std::size_t ParamStore::index(std::string_view name) const {
    auto it = lookup_.find(std::string(name));
    if (it == lookup_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
    return it->second;
}

bool ParamStore::contains(std::string_view name) const {
    return lookup_.contains(std::string(name));
}

std::size_t ParamStore::total_elements() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

bool ParamStore::operator==(const ParamStore& other) const {
    return names_ == other.names_ && values_ == other.values_;
}

Gradients::Gradients(const ParamStore& params) : names_(params.names()) {
    grads_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        grads_.push_back(Tensor::zeros_like(params.get(i)));
    }
}

const Tensor& Gradients::operator[](std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ContractError("no gradient for '" + std::string(name) + "'");
    return grads_[static_cast<std::size_t>(it - names_.begin())];
}

void Gradients::accumulate(const Gradients& other) {
    if (grads_.empty()) {
        *this = other;
        return;
    }
    if (other.names_ != names_) throw ContractError("gradient sets do not align");
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        auto dst = grads_[i].data();
        auto src = other.grads_[i].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
}

void Gradients::scale(double factor) {
    for (auto& g : grads_) {
        for (double& v : g.data()) v *= factor;
    }
}

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.op = "constant";
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.op = "variable";
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::param(std::string_view name) {
    if (!params_) throw ContractError("tape has no parameter store");
    return param(params_->index(name));
}

Var Tape::param(std::size_t index) {
    if (!params_) throw ContractError("tape has no parameter store");
    if (auto it = param_nodes_.find(index); it != param_nodes_.end()) return {this, it->second};
    Node n;
    n.value = params_->get(index);
    n.op = "param";
    n.requires_grad = true;
    n.param = static_cast<long>(index);
    nodes_.push_back(std::move(n));
    param_nodes_.emplace(index, nodes_.size() - 1);
    return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::string_view op, std::vector<std::size_t> parents,
                 BackwardFn fn) {
    if (!value.all_finite()) {
        throw NumericError("op '" + std::string(op) + "' produced non-finite values");
    }
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                  [this](std::size_t p) { return nodes_[p].requires_grad; });
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) {
        n.grad = Tensor::zeros_like(n.value);
    }
    return n.grad;
}

Gradients Tape::backward(const Var& loss) {
    if (loss.tape() != this) throw ContractError("loss belongs to a different tape");
    if (loss.value().size() != 1) {
        throw ContractError("backward needs a scalar loss, got shape " +
                            shape_string(loss.shape()));
    }
    for (auto& n : nodes_) n.grad = Tensor();
    grad_buffer(loss.id())[0] = 1.0;

    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
        if (!n.grad.all_finite()) {
            throw NumericError("non-finite gradient at op '" + std::string(n.op) + "'");
        }
        n.backward(*this, i);
    }

    Gradients out = params_ ? Gradients(*params_) : Gradients();
    for (const auto& [pidx, nid] : param_nodes_) {
        const Node& n = nodes_[nid];
        if (n.grad.size() == 0) continue;
        if (!n.grad.all_finite()) {
            throw NumericError("non-finite gradient for parameter '" + params_->name(pidx) + "'");
        }
        out.at(pidx) = n.grad;
    }
    return out;
}

Tensor Tape::grad_of(const Var& v) const {
    const Node& n = nodes_[v.id()];
    if (n.grad.size() == 0) return Tensor::zeros_like(n.value);
    return n.grad;
}

}  // namespace nextpp
