#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "selqa/tensor.hpp"

namespace selqa {

template <typename T>
struct Param {
    std::string name;
    ad::Tensor<T> value;
    bool embedding = false;  // exempt from l2, gradient is row-sparse
    bool trainable = true;
};

/// Named parameters in insertion order.
template <typename T>
class ParamSet {
  public:
    Param<T>& add(std::string name, ad::Tensor<T> value, bool embedding = false, bool trainable = true) {
        if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
        index_.emplace(name, params_.size());
        params_.push_back({std::move(name), std::move(value), embedding, trainable});
        return params_.back();
    }

    const Param<T>* find(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &params_[it->second];
    }
    Param<T>* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &params_[it->second];
    }
    const Param<T>& at(const std::string& name) const {
        const auto* p = find(name);
        if (!p) throw std::out_of_range("unknown parameter " + name);
        return *p;
    }
    Param<T>& at(const std::string& name) {
        auto* p = find(name);
        if (!p) throw std::out_of_range("unknown parameter " + name);
        return *p;
    }

    std::vector<Param<T>>& items() { return params_; }
    const std::vector<Param<T>>& items() const { return params_; }
    std::size_t size() const { return params_.size(); }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        for (const auto& p : params_) out.add(p.name, p.value.template cast<U>(), p.embedding, p.trainable);
        return out;
    }

  private:
    std::vector<Param<T>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Dense gradients for ordinary parameters, row-sparse ones for embeddings.
template <typename T>
struct Gradients {
    std::map<std::string, ad::Tensor<T>> dense;
    std::map<std::string, ad::SparseRows<T>> sparse;

    /// Dense view of one parameter's gradient, zero where nothing flowed.
    ad::Tensor<T> densify(const Param<T>& p) const {
        ad::Tensor<T> out(p.value.rows(), p.value.cols());
        if (auto it = dense.find(p.name); it != dense.end()) out = it->second;
        if (auto it = sparse.find(p.name); it != sparse.end()) {
            for (const auto& [row, g] : it->second)
                for (std::size_t c = 0; c < g.size(); ++c) out(row, c) += g[c];
        }
        return out;
    }
};

/// Binds a parameter set into one graph, creating each leaf once.
template <typename T>
class Binder {
  public:
    /// With `inference` set, no leaf requires a gradient.
    Binder(ad::Graph<T>& graph, const ParamSet<T>& params, bool inference = false)
        : graph_(graph), params_(params), inference_(inference) {}

    ad::Graph<T>& graph() { return graph_; }
    const ParamSet<T>& params() const { return params_; }

    ad::Var<T> operator()(const std::string& name) {
        auto it = vars_.find(name);
        if (it != vars_.end()) return it->second;
        const auto& p = params_.at(name);
        ad::Var<T> v = graph_.param(p.value, p.trainable && !inference_);
        vars_.emplace(name, v);
        return v;
    }

    ad::Var<T> lookup(const std::string& name, std::span<const long> rows) {
        const auto& p = params_.at(name);
        used_tables_.insert(name);
        return graph_.lookup(p.value, rows, p.trainable && !inference_);
    }

    /// Call after graph().backward().
    Gradients<T> gradients() const {
        Gradients<T> out;
        for (const auto& [name, v] : vars_) {
            if (const auto* g = graph_.grad(v)) out.dense.emplace(name, *g);
        }
        for (const auto& name : used_tables_) {
            if (const auto* s = graph_.sparse_grad(params_.at(name).value)) out.sparse.emplace(name, *s);
        }
        return out;
    }

  private:
    ad::Graph<T>& graph_;
    const ParamSet<T>& params_;
    bool inference_ = false;
    std::map<std::string, ad::Var<T>> vars_;
    std::set<std::string> used_tables_;
};

}  // namespace selqa
