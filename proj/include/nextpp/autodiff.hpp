#pragma once

// Tape-based reverse-mode differentiation over Tensor values.
//
// A Tape records every operation of one loss evaluation in creation order,
// which is already a topological order, so backward() is a single reverse
// sweep. Tapes are single-threaded; build one per sequence and reduce the
// resulting Gradients explicitly when parallelising.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nextpp/tensor.hpp"

namespace nextpp {

// Named, ordered collection of trainable tensors.
class ParamStore {
public:
    std::size_t add(std::string name, Tensor init);
    std::size_t index(std::string_view name) const;
    bool contains(std::string_view name) const;

    std::size_t size() const noexcept { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    const Tensor& get(std::size_t i) const { return values_[i]; }
    const Tensor& get(std::string_view name) const { return values_[index(name)]; }
    Tensor& mutable_get(std::size_t i) { return values_[i]; }
    Tensor& mutable_get(std::string_view name) { return values_[index(name)]; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::size_t total_elements() const;
    bool operator==(const ParamStore& other) const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

// One gradient tensor per parameter, aligned with a ParamStore.
class Gradients {
public:
    Gradients() = default;
    explicit Gradients(const ParamStore& params);

    std::size_t size() const noexcept { return grads_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    const Tensor& at(std::size_t i) const { return grads_[i]; }
    Tensor& at(std::size_t i) { return grads_[i]; }
    const Tensor& operator[](std::string_view name) const;

    void accumulate(const Gradients& other);
    void scale(double factor);

private:
    std::vector<std::string> names_;
    std::vector<Tensor> grads_;
};

class Tape;

// Handle to a recorded value. Cheap to copy; valid while its Tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    explicit Tape(const ParamStore* params = nullptr) : params_(params) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    // Leaf that receives a gradient but is not a ParamStore entry.
    Var variable(Tensor value);
    Var param(std::string_view name);
    Var param(std::size_t index);

    // Records an op. `fn` receives the node id and must push the node's
    // gradient into its parents via grad_buffer(). Non-finite outputs raise
    // a NumericError that names `op`.
    Var record(Tensor value, std::string_view op, std::vector<std::size_t> parents,
               BackwardFn fn);

    // Reverse sweep from a scalar. Returns a gradient for every parameter of
    // the attached store (zeros for parameters the loss does not touch).
    Gradients backward(const Var& loss);

    // Gradient of an arbitrary node after backward(); zeros if none flowed.
    Tensor grad_of(const Var& v) const;

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    Tensor& grad_buffer(std::size_t id);
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::string_view op;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad = false;
        long param = -1;
    };

    const ParamStore* params_;
    std::vector<Node> nodes_;
    std::unordered_map<std::size_t, std::size_t> param_nodes_;
};

}  // namespace nextpp
