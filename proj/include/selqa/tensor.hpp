#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace selqa::ad {

class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix. Vectors are 1×n rows.
template <typename T>
class Tensor {
  public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, T fill = T(0)) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw ShapeError("tensor: data length does not match shape");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::span<const T> row(std::size_t r) const { return std::span<const T>(data_).subspan(r * cols_, cols_); }
    std::span<T> row(std::size_t r) { return std::span<T>(data_).subspan(r * cols_, cols_); }
    std::vector<T>& storage() { return data_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const { return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]"; }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return Tensor<U>(rows_, cols_, std::move(out));
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Gradient rows of an embedding table, keyed by row index.
template <typename T>
using SparseRows = std::map<std::size_t, std::vector<T>>;

template <typename T>
class Graph;

template <typename T>
struct Var {
    Graph<T>* graph = nullptr;
    std::size_t id = 0;

    const Tensor<T>& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    T scalar() const { return value()[0]; }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
/// index order is a valid reverse topological order.
template <typename T>
class Graph {
  public:
    using BackwardFn = std::function<void(Graph&, std::size_t)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var<T> constant(Tensor<T> value);
    /// Owned leaf that receives a gradient.
    Var<T> variable(Tensor<T> value);
    /// Leaf referencing caller-owned storage; must outlive the graph.
    Var<T> param(const Tensor<T>& value, bool requires_grad = true);
    /// Gathers rows of an embedding table; row id -1 yields a zero row that
    /// never receives gradient. When trainable, gradient goes to sparse_grad().
    Var<T> lookup(const Tensor<T>& table, std::span<const long> rows, bool trainable);

    const Tensor<T>& value(std::size_t id) const;
    const Tensor<T>& value(Var<T> v) const { return value(v.id); }
    /// nullptr when no gradient reached the node.
    const Tensor<T>* grad(Var<T> v) const;
    const SparseRows<T>* sparse_grad(const Tensor<T>& table) const;

    /// Loss must be 1×1. Accumulates gradients into every reachable node.
    void backward(Var<T> loss);

    std::size_t size() const { return nodes_.size(); }

    // Op-author interface.
    Var<T> record(Tensor<T> value, std::vector<std::size_t> parents, BackwardFn fn, const char* op);
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    Tensor<T>& grad_ref(std::size_t id);
    const Tensor<T>& grad_of(std::size_t id) const { return nodes_[id].grad; }
    SparseRows<T>& sparse_ref(const Tensor<T>& table) { return sparse_[&table]; }

  private:
    struct Node {
        Tensor<T> owned;
        const Tensor<T>* external = nullptr;
        Tensor<T> grad;
        bool has_grad = false;
        bool requires_grad = false;
        std::vector<std::size_t> parents;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::map<const Tensor<T>*, SparseRows<T>> sparse_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
    return graph->value(id);
}

// Differentiable operations. Shape errors name the op and both shapes.
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// a · bᵀ
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);
template <typename T> Var<T> transpose(Var<T> a);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
/// a[m,n] + row[1,n] broadcast over rows.
template <typename T> Var<T> add_row(Var<T> a, Var<T> row);
template <typename T> Var<T> scale(Var<T> a, T factor);
/// 1 - a
template <typename T> Var<T> one_minus(Var<T> a);
template <typename T> Var<T> tanh(Var<T> a);
template <typename T> Var<T> sigmoid(Var<T> a);
/// max(0, a)
template <typename T> Var<T> relu(Var<T> a);
/// axis 1 normalizes each row, axis 0 each column.
template <typename T> Var<T> softmax(Var<T> a, int axis);
/// axis 1 → [m,1], axis 0 → [1,n]. Gradient goes to the first maximal entry.
template <typename T> Var<T> max(Var<T> a, int axis);
/// axis 1 → [m,1], axis 0 → [1,n].
template <typename T> Var<T> mean(Var<T> a, int axis);
template <typename T> Var<T> mean(Var<T> a);
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, int axis);
template <typename T> Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t end);
template <typename T> Var<T> l2_norm(Var<T> a);
/// Cosine similarity of two same-shape tensors, 1×1. Zero norm is a NumericError.
template <typename T> Var<T> cosine(Var<T> u, Var<T> v);
/// Windows of `height` consecutive rows flattened: [r-height+1, height*cols].
template <typename T> Var<T> im2col(Var<T> image, std::size_t height);
/// Valid convolution with full-width filters [f, height*cols] and bias [1,f].
template <typename T> Var<T> conv2d_valid(Var<T> image, Var<T> filters, Var<T> bias, std::size_t height);
/// Binary cross-entropy of sigmoid(logit) against label, 1×1. Stable for large |logit|.
template <typename T> Var<T> bce_with_logits(Var<T> logit, T label);

}  // namespace selqa::ad
