#include "selqa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selqa/error.hpp"
#include "selqa/kernels.hpp"

namespace selqa::ad {

namespace {

template <typename T>
[[noreturn]] void shape_error(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
    for (auto v : t.data()) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite value produced");
    }
}

template <typename T>
T sigmoid_scalar(T x) {
    if (x >= 0) {
        T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    T e = std::exp(x);
    return e / (T(1) + e);
}

// Unary elementwise op with derivative expressed through the output value.
template <typename T, typename F, typename D>
Var<T> unary(Var<T> a, const char* op, F f, D dydx_from_y) {
    const Tensor<T>& av = a.value();
    Tensor<T> out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
    std::size_t pa = a.id;
    return a.graph->record(std::move(out), {pa},
                           [pa, dydx_from_y](Graph<T>& g, std::size_t self) {
                               if (!g.requires_grad(pa)) return;
                               const auto& y = g.value(self);
                               const auto& gy = g.grad_of(self);
                               auto& ga = g.grad_ref(pa);
                               for (std::size_t i = 0; i < y.size(); ++i) ga[i] += gy[i] * dydx_from_y(y[i]);
                           },
                           op);
}

template <typename T>
void gemm_into(const kernels::GemmShape& s, const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
    kernels::gemm<T>(s, a.data(), b.data(), c.data());
}

}  // namespace

// --- Graph ------------------------------------------------------------------

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::variable(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::param(const Tensor<T>& value, bool requires_grad) {
    Node n;
    n.external = &value;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::lookup(const Tensor<T>& table, std::span<const long> rows, bool trainable) {
    const std::size_t dim = table.cols();
    Tensor<T> out(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        long r = rows[i];
        if (r < 0) continue;
        if (static_cast<std::size_t>(r) >= table.rows()) throw ShapeError("lookup: row index out of range");
        auto src = table.row(static_cast<std::size_t>(r));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    Node n;
    n.owned = std::move(out);
    if (trainable) {
        n.requires_grad = true;
        std::vector<long> ids(rows.begin(), rows.end());
        const Tensor<T>* key = &table;
        n.backward = [ids = std::move(ids), key, dim](Graph& g, std::size_t self) {
            const auto& gy = g.grad_of(self);
            auto& sparse = g.sparse_ref(*key);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (ids[i] < 0) continue;
                auto& row = sparse[static_cast<std::size_t>(ids[i])];
                if (row.empty()) row.assign(dim, T(0));
                for (std::size_t d = 0; d < dim; ++d) row[d] += gy(i, d);
            }
        };
    }
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Graph<T>::value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.owned;
}

template <typename T>
const Tensor<T>* Graph<T>::grad(Var<T> v) const {
    const Node& n = nodes_.at(v.id);
    return n.has_grad ? &n.grad : nullptr;
}

template <typename T>
const SparseRows<T>* Graph<T>::sparse_grad(const Tensor<T>& table) const {
    auto it = sparse_.find(&table);
    return it == sparse_.end() ? nullptr : &it->second;
}

template <typename T>
Tensor<T>& Graph<T>::grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        const auto& v = value(id);
        n.grad = Tensor<T>(v.rows(), v.cols());
        n.has_grad = true;
    }
    return n.grad;
}

template <typename T>
Var<T> Graph<T>::record(Tensor<T> value, std::vector<std::size_t> parents, BackwardFn fn, const char* op) {
    check_finite(value, op);
    Node n;
    n.owned = std::move(value);
    n.requires_grad = std::any_of(parents.begin(), parents.end(), [&](std::size_t p) { return nodes_[p].requires_grad; });
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

template <typename T>
void Graph<T>::backward(Var<T> loss) {
    const auto& lv = value(loss.id);
    if (lv.rows() != 1 || lv.cols() != 1)
        throw ShapeError("backward: loss must be a 1x1 scalar, got " + lv.shape_str());
    grad_ref(loss.id)[0] += T(1);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.has_grad || !n.backward) continue;
        n.backward(*this, id);
    }
}

// --- ops --------------------------------------------------------------------

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
    Tensor<T> out(av.rows(), bv.cols());
    gemm_into<T>({av.rows(), bv.cols(), av.cols(), false, false, false}, av, bv, out);
    std::size_t pa = a.id, pb = b.id;
    return a.graph->record(std::move(out), {pa, pb},
                           [pa, pb](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               const auto& A = g.value(pa);
                               const auto& B = g.value(pb);
                               if (g.requires_grad(pa)) {
                                   // dA = dY · Bᵀ
                                   gemm_into<T>({A.rows(), A.cols(), B.cols(), false, true, true}, gy, B, g.grad_ref(pa));
                               }
                               if (g.requires_grad(pb)) {
                                   // dB = Aᵀ · dY
                                   gemm_into<T>({B.rows(), B.cols(), A.rows(), true, false, true}, A, gy, g.grad_ref(pb));
                               }
                           },
                           "matmul");
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.cols() != bv.cols()) shape_error("matmul_nt", av, bv);
    Tensor<T> out(av.rows(), bv.rows());
    gemm_into<T>({av.rows(), bv.rows(), av.cols(), false, true, false}, av, bv, out);
    std::size_t pa = a.id, pb = b.id;
    return a.graph->record(std::move(out), {pa, pb},
                           [pa, pb](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               const auto& A = g.value(pa);
                               const auto& B = g.value(pb);
                               if (g.requires_grad(pa)) {
                                   // dA = dY · B
                                   gemm_into<T>({A.rows(), A.cols(), B.rows(), false, false, true}, gy, B, g.grad_ref(pa));
                               }
                               if (g.requires_grad(pb)) {
                                   // dB = dYᵀ · A
                                   gemm_into<T>({B.rows(), B.cols(), A.rows(), true, false, true}, gy, A, g.grad_ref(pb));
                               }
                           },
                           "matmul_nt");
}

template <typename T>
Var<T> transpose(Var<T> a) {
    const auto& av = a.value();
    Tensor<T> out(av.cols(), av.rows());
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
    std::size_t pa = a.id;
    return a.graph->record(std::move(out), {pa},
                           [pa](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               auto& ga = g.grad_ref(pa);
                               for (std::size_t r = 0; r < ga.rows(); ++r)
                                   for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += gy(c, r);
                           },
                           "transpose");
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (!av.same_shape(bv)) shape_error("add", av, bv);
    Tensor<T> out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    std::size_t pa = a.id, pb = b.id;
    return a.graph->record(std::move(out), {pa, pb},
                           [pa, pb](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               for (std::size_t p : {pa, pb}) {
                                   if (!g.requires_grad(p)) continue;
                                   auto& gp = g.grad_ref(p);
                                   for (std::size_t i = 0; i < gy.size(); ++i) gp[i] += gy[i];
                               }
                           },
                           "add");
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (!av.same_shape(bv)) shape_error("sub", av, bv);
    Tensor<T> out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
    std::size_t pa = a.id, pb = b.id;
    return a.graph->record(std::move(out), {pa, pb},
                           [pa, pb](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               if (g.requires_grad(pa)) {
                                   auto& ga = g.grad_ref(pa);
                                   for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
                               }
                               if (g.requires_grad(pb)) {
                                   auto& gb = g.grad_ref(pb);
                                   for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
                               }
                           },
                           "sub");
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (!av.same_shape(bv)) shape_error("mul", av, bv);
    Tensor<T> out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    std::size_t pa = a.id, pb = b.id;
    return a.graph->record(std::move(out), {pa, pb},
                           [pa, pb](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               const auto& A = g.value(pa);
                               const auto& B = g.value(pb);
                               if (g.requires_grad(pa)) {
                                   auto& ga = g.grad_ref(pa);
                                   for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * B[i];
                               }
                               if (g.requires_grad(pb)) {
                                   auto& gb = g.grad_ref(pb);
                                   for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * A[i];
                               }
                           },
                           "mul");
}

template <typename T>
Var<T> add_row(Var<T> a, Var<T> row) {
    const auto& av = a.value();
    const auto& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("add_row", av, rv);
    Tensor<T> out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(r, c) + rv[c];
    std::size_t pa = a.id, pr = row.id;
    return a.graph->record(std::move(out), {pa, pr},
                           [pa, pr](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               if (g.requires_grad(pa)) {
                                   auto& ga = g.grad_ref(pa);
                                   for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
                               }
                               if (g.requires_grad(pr)) {
                                   auto& gr = g.grad_ref(pr);
                                   for (std::size_t c = 0; c < gy.cols(); ++c) {
                                       double s = 0.0;
                                       for (std::size_t r = 0; r < gy.rows(); ++r) s += gy(r, c);
                                       gr[c] += static_cast<T>(s);
                                   }
                               }
                           },
                           "add_row");
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
    return unary<T>(a, "scale", [factor](T x) { return x * factor; }, [factor](T) { return factor; });
}

template <typename T>
Var<T> one_minus(Var<T> a) {
    return unary<T>(a, "one_minus", [](T x) { return T(1) - x; }, [](T) { return T(-1); });
}

template <typename T>
Var<T> tanh(Var<T> a) {
    return unary<T>(a, "tanh", [](T x) { return std::tanh(x); }, [](T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
    return unary<T>(a, "sigmoid", [](T x) { return sigmoid_scalar(x); }, [](T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> relu(Var<T> a) {
    return unary<T>(a, "relu", [](T x) { return x > T(0) ? x : T(0); }, [](T y) { return y > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> softmax(Var<T> a, int axis) {
    const auto& av = a.value();
    if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
    const bool rows = axis == 1;
    const std::size_t groups = rows ? av.rows() : av.cols();
    const std::size_t len = rows ? av.cols() : av.rows();
    auto at = [rows](auto& t, std::size_t gi, std::size_t k) -> auto& { return rows ? t(gi, k) : t(k, gi); };
    Tensor<T> out(av.rows(), av.cols());
    for (std::size_t gi = 0; gi < groups; ++gi) {
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, at(av, gi, k));
        double z = 0.0;
        for (std::size_t k = 0; k < len; ++k) z += std::exp(static_cast<double>(at(av, gi, k) - mx));
        for (std::size_t k = 0; k < len; ++k)
            at(out, gi, k) = static_cast<T>(std::exp(static_cast<double>(at(av, gi, k) - mx)) / z);
    }
    std::size_t pa = a.id;
    return a.graph->record(std::move(out), {pa},
                           [pa, rows, groups, len, at](Graph<T>& g, std::size_t self) {
                               const auto& y = g.value(self);
                               const auto& gy = g.grad_of(self);
                               auto& ga = g.grad_ref(pa);
                               for (std::size_t gi = 0; gi < groups; ++gi) {
                                   double dot = 0.0;
                                   for (std::size_t k = 0; k < len; ++k) dot += at(gy, gi, k) * at(y, gi, k);
                                   for (std::size_t k = 0; k < len; ++k)
                                       at(ga, gi, k) += static_cast<T>(at(y, gi, k) * (at(gy, gi, k) - dot));
                               }
                           },
                           "softmax");
}

template <typename T>
Var<T> max(Var<T> a, int axis) {
    const auto& av = a.value();
    if (axis != 0 && axis != 1) throw ShapeError("max: axis must be 0 or 1");
    if (av.empty()) throw ShapeError("max: empty input");
    const bool rows = axis == 1;
    const std::size_t groups = rows ? av.rows() : av.cols();
    const std::size_t len = rows ? av.cols() : av.rows();
    Tensor<T> out(rows ? av.rows() : 1, rows ? 1 : av.cols());
    std::vector<std::size_t> argmax(groups);
    for (std::size_t gi = 0; gi < groups; ++gi) {
        std::size_t best = 0;
        T bv = rows ? av(gi, 0) : av(0, gi);
        for (std::size_t k = 1; k < len; ++k) {
            T v = rows ? av(gi, k) : av(k, gi);
            if (v > bv) {
                bv = v;
                best = k;
            }
        }
        argmax[gi] = best;
        out[gi] = bv;
    }
    std::size_t pa = a.id;
    return a.graph->record(std::move(out), {pa},
                           [pa, rows, argmax = std::move(argmax)](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               auto& ga = g.grad_ref(pa);
                               for (std::size_t gi = 0; gi < argmax.size(); ++gi) {
                                   if (rows)
                                       ga(gi, argmax[gi]) += gy[gi];
                                   else
                                       ga(argmax[gi], gi) += gy[gi];
                               }
                           },
                           "max");
}

template <typename T>
Var<T> mean(Var<T> a, int axis) {
    const auto& av = a.value();
    if (axis != 0 && axis != 1) throw ShapeError("mean: axis must be 0 or 1");
    if (av.empty()) throw ShapeError("mean: empty input");
    const bool rows = axis == 1;
    const std::size_t groups = rows ? av.rows() : av.cols();
    const std::size_t len = rows ? av.cols() : av.rows();
    Tensor<T> out(rows ? av.rows() : 1, rows ? 1 : av.cols());
    for (std::size_t gi = 0; gi < groups; ++gi) {
        double s = 0.0;
        for (std::size_t k = 0; k < len; ++k) s += rows ? av(gi, k) : av(k, gi);
        out[gi] = static_cast<T>(s / static_cast<double>(len));
    }
    std::size_t pa = a.id;
    return a.graph->record(std::move(out), {pa},
                           [pa, rows, groups, len](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               auto& ga = g.grad_ref(pa);
                               const T inv = T(1) / static_cast<T>(len);
                               for (std::size_t gi = 0; gi < groups; ++gi)
                                   for (std::size_t k = 0; k < len; ++k) (rows ? ga(gi, k) : ga(k, gi)) += gy[gi] * inv;
                           },
                           "mean");
}

template <typename T>
Var<T> sum(Var<T> a) {
    const auto& av = a.value();
    double s = 0.0;
    for (auto v : av.data()) s += v;
    std::size_t pa = a.id;
    return a.graph->record(Tensor<T>(1, 1, static_cast<T>(s)), {pa},
                           [pa](Graph<T>& g, std::size_t self) {
                               const T gy = g.grad_of(self)[0];
                               auto& ga = g.grad_ref(pa);
                               for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy;
                           },
                           "sum");
}

template <typename T>
Var<T> mean(Var<T> a) {
    const std::size_t n = a.value().size();
    if (n == 0) throw ShapeError("mean: empty input");
    return scale(sum(a), T(1) / static_cast<T>(n));
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    const auto& first = parts.front().value();
    std::size_t rows = 0, cols = 0;
    for (const auto& p : parts) {
        const auto& v = p.value();
        if (axis == 0) {
            if (v.cols() != first.cols()) shape_error("concat", first, v);
            rows += v.rows();
            cols = v.cols();
        } else {
            if (v.rows() != first.rows()) shape_error("concat", first, v);
            cols += v.cols();
            rows = v.rows();
        }
    }
    Tensor<T> out(rows, cols);
    std::vector<std::size_t> ids;
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const auto& v = p.value();
        for (std::size_t r = 0; r < v.rows(); ++r)
            for (std::size_t c = 0; c < v.cols(); ++c) {
                if (axis == 0)
                    out(offset + r, c) = v(r, c);
                else
                    out(r, offset + c) = v(r, c);
            }
        offset += axis == 0 ? v.rows() : v.cols();
        ids.push_back(p.id);
    }
    Graph<T>* graph = parts.front().graph;
    auto parents = ids;
    return graph->record(std::move(out), std::move(parents),
                         [ids, axis](Graph<T>& g, std::size_t self) {
                             const auto& gy = g.grad_of(self);
                             std::size_t off = 0;
                             for (std::size_t p : ids) {
                                 const auto& v = g.value(p);
                                 if (g.requires_grad(p)) {
                                     auto& gp = g.grad_ref(p);
                                     for (std::size_t r = 0; r < v.rows(); ++r)
                                         for (std::size_t c = 0; c < v.cols(); ++c)
                                             gp(r, c) += axis == 0 ? gy(off + r, c) : gy(r, off + c);
                                 }
                                 off += axis == 0 ? v.rows() : v.cols();
                             }
                         },
                         "concat");
}

template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t end) {
    const auto& av = a.value();
    if (begin > end || end > av.rows())
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) + ") outside " +
                         av.shape_str());
    Tensor<T> out(end - begin, av.cols());
    std::copy(av.data().begin() + static_cast<std::ptrdiff_t>(begin * av.cols()),
              av.data().begin() + static_cast<std::ptrdiff_t>(end * av.cols()), out.data().begin());
    std::size_t pa = a.id;
    return a.graph->record(std::move(out), {pa},
                           [pa, begin](Graph<T>& g, std::size_t self) {
                               const auto& gy = g.grad_of(self);
                               auto& ga = g.grad_ref(pa);
                               const std::size_t off = begin * ga.cols();
                               for (std::size_t i = 0; i < gy.size(); ++i) ga[off + i] += gy[i];
                           },
                           "slice_rows");
}

template <typename T>
Var<T> l2_norm(Var<T> a) {
    const auto& av = a.value();
    double s = 0.0;
    for (auto v : av.data()) s += static_cast<double>(v) * v;
    const double norm = std::sqrt(s);
    std::size_t pa = a.id;
    return a.graph->record(Tensor<T>(1, 1, static_cast<T>(norm)), {pa},
                           [pa, norm](Graph<T>& g, std::size_t self) {
                               if (norm == 0.0) return;  // subgradient 0 at the origin
                               const T gy = g.grad_of(self)[0];
                               const auto& A = g.value(pa);
                               auto& ga = g.grad_ref(pa);
                               for (std::size_t i = 0; i < A.size(); ++i) ga[i] += static_cast<T>(gy * A[i] / norm);
                           },
                           "l2_norm");
}

template <typename T>
Var<T> cosine(Var<T> u, Var<T> v) {
    const auto& uv = u.value();
    const auto& vv = v.value();
    if (!uv.same_shape(vv)) shape_error("cosine", uv, vv);
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < uv.size(); ++i) {
        dot += static_cast<double>(uv[i]) * vv[i];
        nu += static_cast<double>(uv[i]) * uv[i];
        nv += static_cast<double>(vv[i]) * vv[i];
    }
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    if (nu == 0.0 || nv == 0.0) throw NumericError("cosine: zero-norm representation");
    const double cos = std::clamp(dot / (nu * nv), -1.0, 1.0);
    std::size_t pu = u.id, pv = v.id;
    return u.graph->record(Tensor<T>(1, 1, static_cast<T>(cos)), {pu, pv},
                           [pu, pv, nu, nv, cos](Graph<T>& g, std::size_t self) {
                               const double gy = g.grad_of(self)[0];
                               const auto& U = g.value(pu);
                               const auto& V = g.value(pv);
                               // d cos / du = v/(|u||v|) - cos · u/|u|²
                               if (g.requires_grad(pu)) {
                                   auto& gu = g.grad_ref(pu);
                                   for (std::size_t i = 0; i < U.size(); ++i)
                                       gu[i] += static_cast<T>(gy * (V[i] / (nu * nv) - cos * U[i] / (nu * nu)));
                               }
                               if (g.requires_grad(pv)) {
                                   auto& gv = g.grad_ref(pv);
                                   for (std::size_t i = 0; i < V.size(); ++i)
                                       gv[i] += static_cast<T>(gy * (U[i] / (nu * nv) - cos * V[i] / (nv * nv)));
                               }
                           },
                           "cosine");
}

template <typename T>
Var<T> im2col(Var<T> image, std::size_t height) {
    const auto& iv = image.value();
    if (height == 0 || height > iv.rows())
        throw ShapeError("im2col: window height " + std::to_string(height) + " does not fit " + iv.shape_str());
    const std::size_t windows = iv.rows() - height + 1;
    const std::size_t width = height * iv.cols();
    Tensor<T> out(windows, width);
    for (std::size_t w = 0; w < windows; ++w) {
        auto src = iv.data().subspan(w * iv.cols(), width);
        std::copy(src.begin(), src.end(), out.row(w).begin());
    }
    std::size_t pa = image.id;
    return image.graph->record(std::move(out), {pa},
                               [pa, windows, width](Graph<T>& g, std::size_t self) {
                                   const auto& gy = g.grad_of(self);
                                   auto& ga = g.grad_ref(pa);
                                   const std::size_t cols = ga.cols();
                                   for (std::size_t w = 0; w < windows; ++w)
                                       for (std::size_t k = 0; k < width; ++k) ga[w * cols + k] += gy(w, k);
                               },
                               "im2col");
}

template <typename T>
Var<T> conv2d_valid(Var<T> image, Var<T> filters, Var<T> bias, std::size_t height) {
    const auto& iv = image.value();
    const auto& fv = filters.value();
    if (fv.cols() != height * iv.cols()) shape_error("conv2d_valid", iv, fv);
    return add_row(matmul_nt(im2col(image, height), filters), bias);
}

template <typename T>
Var<T> bce_with_logits(Var<T> logit, T label) {
    const auto& lv = logit.value();
    if (lv.size() != 1) throw ShapeError("bce_with_logits: expected a 1x1 logit, got " + lv.shape_str());
    const double x = lv[0];
    const double y = label;
    const double loss = std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    std::size_t pa = logit.id;
    return logit.graph->record(Tensor<T>(1, 1, static_cast<T>(loss)), {pa},
                               [pa, x, y](Graph<T>& g, std::size_t self) {
                                   const double gy = g.grad_of(self)[0];
                                   g.grad_ref(pa)[0] += static_cast<T>(gy * (sigmoid_scalar(x) - y));
                               },
                               "bce_with_logits");
}

#define SELQA_INSTANTIATE(T)                                                         \
    template class Graph<T>;                                                         \
    template Var<T> matmul(Var<T>, Var<T>);                                          \
    template Var<T> matmul_nt(Var<T>, Var<T>);                                       \
    template Var<T> transpose(Var<T>);                                               \
    template Var<T> add(Var<T>, Var<T>);                                             \
    template Var<T> sub(Var<T>, Var<T>);                                             \
    template Var<T> mul(Var<T>, Var<T>);                                             \
    template Var<T> add_row(Var<T>, Var<T>);                                         \
    template Var<T> scale(Var<T>, T);                                                \
    template Var<T> one_minus(Var<T>);                                               \
    template Var<T> tanh(Var<T>);                                                    \
    template Var<T> sigmoid(Var<T>);                                                 \
    template Var<T> relu(Var<T>);                                                    \
    template Var<T> softmax(Var<T>, int);                                            \
    template Var<T> max(Var<T>, int);                                                \
    template Var<T> mean(Var<T>, int);                                               \
    template Var<T> mean(Var<T>);                                                    \
    template Var<T> sum(Var<T>);                                                     \
    template Var<T> concat(const std::vector<Var<T>>&, int);                         \
    template Var<T> slice_rows(Var<T>, std::size_t, std::size_t);                    \
    template Var<T> l2_norm(Var<T>);                                                 \
    template Var<T> cosine(Var<T>, Var<T>);                                          \
    template Var<T> im2col(Var<T>, std::size_t);                                     \
    template Var<T> conv2d_valid(Var<T>, Var<T>, Var<T>, std::size_t);               \
    template Var<T> bce_with_logits(Var<T>, T);

SELQA_INSTANTIATE(float)
SELQA_INSTANTIATE(double)

#undef SELQA_INSTANTIATE

}  // namespace selqa::ad
