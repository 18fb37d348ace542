#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "snowshr/errors.hpp"

namespace snowshr {

// Dimensions are positive ints; data is row-major float32. The layout for
// feature tensors is NCHW and for convolution kernels OIHW throughout.
using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
    if (s.empty()) throw DimensionError("tensor: empty shape");
    std::size_t n = 1;
    for (int d : s) {
        if (d <= 0) throw DimensionError("tensor: non-positive dimension " + std::to_string(d));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ')';
    return os.str();
}

struct TensorNode {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty until first needed; same length as data otherwise
    bool requires_grad = false;
    int tape_id = -1;
};

// Value-semantics handle to shared tensor storage. Copies alias the same
// data, which is what the tape and the optimizer rely on.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape) {
        auto n = std::make_shared<TensorNode>();
        n->data.assign(shape_numel(shape), 0.0f);
        n->shape = std::move(shape);
        return Tensor(std::move(n));
    }

    static Tensor full(Shape shape, float value) {
        auto n = std::make_shared<TensorNode>();
        n->data.assign(shape_numel(shape), value);
        n->shape = std::move(shape);
        return Tensor(std::move(n));
    }

    static Tensor from_data(Shape shape, std::vector<float> data) {
        if (shape_numel(shape) != data.size())
            throw DimensionError("tensor: data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
        auto n = std::make_shared<TensorNode>();
        n->shape = std::move(shape);
        n->data = std::move(data);
        return Tensor(std::move(n));
    }

    static Tensor scalar_of(float v) { return from_data({1}, {v}); }

    bool defined() const { return static_cast<bool>(n_); }
    const Shape& shape() const { return n_->shape; }
    int rank() const { return static_cast<int>(n_->shape.size()); }
    int dim(int i) const { return n_->shape[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return n_->data.size(); }

    float* data() { return n_->data.data(); }
    const float* data() const { return n_->data.data(); }
    std::vector<float>& vec() { return n_->data; }
    const std::vector<float>& vec() const { return n_->data; }

    float scalar() const {
        if (size() != 1) throw ContractError("expected scalar tensor, got shape " + shape_str(shape()));
        return n_->data[0];
    }

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool v) { n_->requires_grad = v; }

    void ensure_grad() {
        if (n_->grad.empty()) n_->grad.assign(n_->data.size(), 0.0f);
    }
    bool has_grad() const { return !n_->grad.empty(); }
    float* grad() { return n_->grad.empty() ? nullptr : n_->grad.data(); }
    const float* grad() const { return n_->grad.empty() ? nullptr : n_->grad.data(); }
    std::vector<float>& grad_vec() { return n_->grad; }
    void zero_grad() {
        if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0f);
    }

    // Deep copy of the values with no grad tracking.
    Tensor detach_copy() const {
        auto n = std::make_shared<TensorNode>();
        n->shape = n_->shape;
        n->data = n_->data;
        return Tensor(std::move(n));
    }

    int tape_id() const { return n_->tape_id; }

    const std::shared_ptr<TensorNode>& node() const { return n_; }
    std::shared_ptr<TensorNode>& node() { return n_; }

  private:
    explicit Tensor(std::shared_ptr<TensorNode> n) : n_(std::move(n)) {}
    std::shared_ptr<TensorNode> n_;
};

// Define-by-run record of one forward pass. Operations append themselves in
// execution order, so reverse iteration is a valid topological order.
// A tape is confined to one logical thread and rebuilt per forward pass.
class Tape {
  public:
    // Assigns a node id on first sighting of a tensor.
    int track(const Tensor& t) {
        TensorNode* n = t.node().get();
        if (n->tape_id < 0) n->tape_id = next_id_++;
        return n->tape_id;
    }

    void record(const char* op_name, std::function<void()> backward_rule) {
        ops_.push_back(Recorded{op_name, std::move(backward_rule)});
    }

    std::size_t num_ops() const { return ops_.size(); }

    void run_backward() {
        for (std::size_t i = ops_.size(); i > 0; --i) ops_[i - 1].backward();
    }

    void clear() {
        ops_.clear();
        next_id_ = 0;
    }

  private:
    struct Recorded {
        const char* name;
        std::function<void()> backward;
    };
    std::vector<Recorded> ops_;
    int next_id_ = 0;
};

// Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule in reverse
// order. Grads accumulate; callers zero them between steps. Tensors never
// touched by the recorded ops keep an absent/zero grad.
inline void backward(Tensor& loss, Tape& tape) {
    if (loss.size() != 1)
        throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    loss.ensure_grad();
    loss.grad()[0] += 1.0f;
    tape.run_backward();
}

inline bool all_finite(const Tensor& t) {
    for (float v : t.vec())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace snowshr
