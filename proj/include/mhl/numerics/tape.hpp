#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "mhl/error.hpp"
#include "mhl/numerics/matrix.hpp"

namespace mhl {

template <typename T>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
public:
    Var() = default;
    Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

    bool valid() const noexcept { return tape_ != nullptr; }
    Tape<T>& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }

    const Matrix<T>& value() const { return tape_->value(id_); }
    Matrix<T> grad() const { return tape_->grad(id_); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    T scalar() const { return value()[0]; }

private:
    Tape<T>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Append-only record of executed operations. Node ids are assigned in
/// execution order, so descending id is a reverse topological order.
template <typename T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Matrix<T>& upstream)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> constant(Matrix<T> value) { return leaf(std::move(value), false); }
    Var<T> variable(Matrix<T> value) { return leaf(std::move(value), true); }

    /// Appends the result of an operation. `backward` receives the node's
    /// adjoint and must accumulate into the adjoints of `inputs`.
    Var<T> record(const char* op, Matrix<T> value, std::initializer_list<Var<T>> inputs,
                  BackwardFn backward) {
        bool needs = false;
        for (const auto& in : inputs) needs = needs || nodes_[in.id()].needs_grad;
        return push(op, std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
    }

    Var<T> record(const char* op, Matrix<T> value, const std::vector<Var<T>>& inputs,
                  BackwardFn backward) {
        bool needs = false;
        for (const auto& in : inputs) needs = needs || nodes_[in.id()].needs_grad;
        return push(op, std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
    }

    const Matrix<T>& value(std::size_t id) const { return nodes_.at(id).value; }
    bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }
    bool needs_grad(const Var<T>& v) const { return needs_grad(v.id()); }
    const std::string& op_name(std::size_t id) const { return nodes_.at(id).op; }

    /// Mutable adjoint of a node, allocated as zeros on first use.
    Matrix<T>& adjoint(std::size_t id) {
        Node& n = nodes_[id];
        if (n.adjoint.empty() && !n.value.empty()) n.adjoint = Matrix<T>(n.value.rows(), n.value.cols());
        return n.adjoint;
    }

    /// Copy of the adjoint; all zeros for nodes the backward pass never reached.
    Matrix<T> grad(std::size_t id) const {
        const Node& n = nodes_.at(id);
        if (n.adjoint.empty()) return Matrix<T>(n.value.rows(), n.value.cols());
        return n.adjoint;
    }

    /// Seeds d(root)/d(root) = 1 and propagates adjoints. Returns the ids of
    /// nodes whose backward function ran, in visiting order.
    std::vector<std::size_t> backward(const Var<T>& root) {
        if (root.value().size() != 1) {
            throw DimensionError("backward: root must be 1x1, got " + root.value().shape());
        }
        adjoint(root.id())[0] = T{1};
        std::vector<std::size_t> visited;
        for (std::size_t i = root.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward || n.adjoint.empty()) continue;
            visited.push_back(i);
            n.backward(*this, n.adjoint);
        }
        return visited;
    }

    /// Label attached to numeric errors raised while recording.
    void set_scope(std::string scope) { scope_ = std::move(scope); }
    const std::string& scope() const noexcept { return scope_; }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        std::string op;
        Matrix<T> value;
        Matrix<T> adjoint;
        bool needs_grad = false;
        BackwardFn backward;
    };

    Var<T> leaf(Matrix<T> value, bool needs) {
        return push(needs ? "variable" : "constant", std::move(value), needs, BackwardFn{});
    }

    Var<T> push(const char* op, Matrix<T> value, bool needs, BackwardFn fn) {
        if (!value.all_finite()) {
            std::string where = scope_.empty() ? std::string() : " in stage '" + scope_ + "'";
            throw NumericError(std::string("non-finite value from op '") + op + "'" + where);
        }
        nodes_.push_back(Node{op, std::move(value), Matrix<T>{}, needs, std::move(fn)});
        return Var<T>(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
    std::string scope_;
};

}  // namespace mhl
