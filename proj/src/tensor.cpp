#include "flagforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace flagforge {

namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

void check_finite(const TensorImpl& t, const char* op) {
    for (double v : t.data)
        if (!std::isfinite(v))
            throw NonFiniteValue(std::string(op) + " produced a non-finite value");
}

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> data,
                   std::vector<ImplPtr> parents,
                   std::function<void(TensorImpl&)> backward_fn, const char* op) {
    auto impl = std::make_shared<TensorImpl>();
    impl->rows = rows;
    impl->cols = cols;
    impl->data = std::move(data);
    check_finite(*impl, op);
    bool needs_grad = false;
    for (const auto& p : parents)
        if (p && p->requires_grad) needs_grad = true;
    impl->requires_grad = needs_grad;
    if (needs_grad) {
        impl->parents = std::move(parents);
        impl->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(impl));
}

std::vector<double>& grad_of(TensorImpl& t) {
    if (t.grad.size() != t.data.size()) t.grad.assign(t.data.size(), 0.0);
    return t.grad;
}

void require_same_size(const Tensor& t, std::size_t rows, std::size_t cols, const char* op) {
    if (t.rows() != rows || t.cols() != cols)
        throw ShapeMismatch(std::string(op) + ": unexpected shape " +
                            std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
}

}  // namespace

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->rows = rows;
    impl->cols = cols;
    impl->data.assign(rows * cols, 0.0);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data,
                    bool requires_grad) {
    if (data.size() != rows * cols) throw ShapeMismatch("Tensor::from: data length mismatch");
    auto impl = std::make_shared<TensorImpl>();
    impl->rows = rows;
    impl->cols = cols;
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    check_finite(*impl, "Tensor::from");
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return from(1, 1, {value}); }

Tensor Tensor::glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> data(rows * cols);
    for (double& v : data) v = rng.uniform(-a, a);
    return from(rows, cols, std::move(data), true);
}

std::size_t Tensor::rows() const { return impl_->rows; }
std::size_t Tensor::cols() const { return impl_->cols; }
std::size_t Tensor::size() const { return impl_->data.size(); }
double Tensor::at(std::size_t r, std::size_t c) const { return impl_->data[r * impl_->cols + c]; }
double Tensor::item() const {
    if (size() != 1) throw ShapeMismatch("item() on non-scalar tensor");
    return impl_->data[0];
}
std::vector<double>& Tensor::data() { return impl_->data; }
const std::vector<double>& Tensor::data() const { return impl_->data; }
std::vector<double>& Tensor::grad() { return grad_of(*impl_); }
const std::vector<double>& Tensor::grad() const { return grad_of(*impl_); }
bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_name(const std::string& name) { impl_->name = name; }
const std::string& Tensor::name() const { return impl_->name; }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeMismatch("matmul: " + std::to_string(a.cols()) + " vs " +
                            std::to_string(b.rows()));
    std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    std::vector<double> out(n * m, 0.0);
    const auto& A = a.data();
    const auto& B = b.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            double av = A[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) out[i * m + j] += av * B[p * m + j];
        }
    auto ai = a.share(), bi = b.share();
    return make_result(
        n, m, std::move(out), {ai, bi},
        [ai, bi, n, k, m](TensorImpl& o) {
            const auto& G = o.grad;
            if (ai->requires_grad) {
                auto& da = grad_of(*ai);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) {
                        double gv = G[i * m + j];
                        if (gv == 0.0) continue;
                        for (std::size_t p = 0; p < k; ++p)
                            da[i * k + p] += gv * bi->data[p * m + j];
                    }
            }
            if (bi->requires_grad) {
                auto& db = grad_of(*bi);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double av = ai->data[i * k + p];
                        if (av == 0.0) continue;
                        for (std::size_t j = 0; j < m; ++j)
                            db[p * m + j] += av * G[i * m + j];
                    }
            }
        },
        "matmul");
}

Tensor add(const Tensor& a, const Tensor& b) {
    bool broadcast = b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
    if (!broadcast && (a.rows() != b.rows() || a.cols() != b.cols()))
        throw ShapeMismatch("add: incompatible shapes");
    std::size_t n = a.rows(), m = a.cols();
    std::vector<double> out(a.data());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out[i * m + j] += broadcast ? b.data()[j] : b.data()[i * m + j];
    auto ai = a.share(), bi = b.share();
    return make_result(
        n, m, std::move(out), {ai, bi},
        [ai, bi, broadcast, n, m](TensorImpl& o) {
            if (ai->requires_grad) {
                auto& da = grad_of(*ai);
                for (std::size_t i = 0; i < o.grad.size(); ++i) da[i] += o.grad[i];
            }
            if (bi->requires_grad) {
                auto& db = grad_of(*bi);
                if (broadcast) {
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < m; ++j) db[j] += o.grad[i * m + j];
                } else {
                    for (std::size_t i = 0; i < o.grad.size(); ++i) db[i] += o.grad[i];
                }
            }
        },
        "add");
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) throw ShapeMismatch("concat_cols: row count mismatch");
    std::size_t n = a.rows(), ca = a.cols(), cb = b.cols();
    std::vector<double> out(n * (ca + cb));
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(a.data().begin() + i * ca, ca, out.begin() + i * (ca + cb));
        std::copy_n(b.data().begin() + i * cb, cb, out.begin() + i * (ca + cb) + ca);
    }
    auto ai = a.share(), bi = b.share();
    return make_result(
        n, ca + cb, std::move(out), {ai, bi},
        [ai, bi, n, ca, cb](TensorImpl& o) {
            for (std::size_t i = 0; i < n; ++i) {
                if (ai->requires_grad) {
                    auto& da = grad_of(*ai);
                    for (std::size_t j = 0; j < ca; ++j)
                        da[i * ca + j] += o.grad[i * (ca + cb) + j];
                }
                if (bi->requires_grad) {
                    auto& db = grad_of(*bi);
                    for (std::size_t j = 0; j < cb; ++j)
                        db[i * cb + j] += o.grad[i * (ca + cb) + ca + j];
                }
            }
        },
        "concat_cols");
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.data());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    auto xi = x.share();
    return make_result(
        x.rows(), x.cols(), std::move(out), {xi},
        [xi](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            // derivative at exactly 0 is 0
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                if (xi->data[i] > 0.0) dx[i] += o.grad[i];
        },
        "relu");
}

Tensor leaky_relu(const Tensor& x, double slope) {
    std::vector<double> out(x.data());
    for (double& v : out) v = v > 0.0 ? v : slope * v;
    auto xi = x.share();
    return make_result(
        x.rows(), x.cols(), std::move(out), {xi},
        [xi, slope](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                dx[i] += o.grad[i] * (xi->data[i] > 0.0 ? 1.0 : slope);
        },
        "leaky_relu");
}

Tensor dropout(const Tensor& x, double p, bool train_mode, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw ShapeMismatch("dropout: p must be in [0,1)");
    if (!train_mode || p == 0.0) return x;
    double scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<double>>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        (*mask)[i] = rng.uniform() < p ? 0.0 : scale;
        out[i] = x.data()[i] * (*mask)[i];
    }
    auto xi = x.share();
    return make_result(
        x.rows(), x.cols(), std::move(out), {xi},
        [xi, mask](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            for (std::size_t i = 0; i < o.grad.size(); ++i) dx[i] += o.grad[i] * (*mask)[i];
        },
        "dropout");
}

Tensor row_softmax(const Tensor& x) {
    std::size_t n = x.rows(), m = x.cols();
    std::vector<double> out(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = x.data()[i * m];
        for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, x.data()[i * m + j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            out[i * m + j] = std::exp(x.data()[i * m + j] - mx);
            denom += out[i * m + j];
        }
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= denom;
    }
    auto xi = x.share();
    auto y = std::make_shared<std::vector<double>>(out);
    return make_result(
        n, m, std::move(out), {xi},
        [xi, y, n, m](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < m; ++j)
                    dot += o.grad[i * m + j] * (*y)[i * m + j];
                for (std::size_t j = 0; j < m; ++j)
                    dx[i * m + j] += (*y)[i * m + j] * (o.grad[i * m + j] - dot);
            }
        },
        "row_softmax");
}

Tensor mean_over_rows(const Tensor& x, const std::vector<std::vector<int>>& groups) {
    std::size_t g = groups.size(), m = x.cols();
    std::vector<double> out(g * m, 0.0);
    for (std::size_t gi = 0; gi < g; ++gi) {
        if (groups[gi].empty()) continue;  // zero row
        for (int r : groups[gi]) {
            if (r < 0 || static_cast<std::size_t>(r) >= x.rows())
                throw ShapeMismatch("mean_over_rows: row index out of range");
            for (std::size_t j = 0; j < m; ++j) out[gi * m + j] += x.at(r, j);
        }
        double inv = 1.0 / static_cast<double>(groups[gi].size());
        for (std::size_t j = 0; j < m; ++j) out[gi * m + j] *= inv;
    }
    auto xi = x.share();
    auto gr = std::make_shared<std::vector<std::vector<int>>>(groups);
    return make_result(
        g, m, std::move(out), {xi},
        [xi, gr, m](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            for (std::size_t gi = 0; gi < gr->size(); ++gi) {
                if ((*gr)[gi].empty()) continue;
                double inv = 1.0 / static_cast<double>((*gr)[gi].size());
                for (int r : (*gr)[gi])
                    for (std::size_t j = 0; j < m; ++j)
                        dx[r * m + j] += o.grad[gi * m + j] * inv;
            }
        },
        "mean_over_rows");
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
    std::size_t m = x.cols();
    std::vector<double> out(idx.size() * m);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= x.rows())
            throw ShapeMismatch("gather_rows: index out of range");
        std::copy_n(x.data().begin() + idx[i] * m, m, out.begin() + i * m);
    }
    auto xi = x.share();
    auto ix = std::make_shared<std::vector<int>>(idx);
    return make_result(
        idx.size(), m, std::move(out), {xi},
        [xi, ix, m](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            for (std::size_t i = 0; i < ix->size(); ++i)
                for (std::size_t j = 0; j < m; ++j)
                    dx[(*ix)[i] * m + j] += o.grad[i * m + j];
        },
        "gather_rows");
}

Tensor segment_softmax(const Tensor& logits, const std::vector<int>& seg, int n_segments) {
    if (logits.cols() != 1 || seg.size() != logits.rows())
        throw ShapeMismatch("segment_softmax: expects m x 1 logits with m segment ids");
    std::size_t m = seg.size();
    std::vector<double> mx(n_segments, -1e300), denom(n_segments, 0.0);
    for (std::size_t i = 0; i < m; ++i) mx[seg[i]] = std::max(mx[seg[i]], logits.data()[i]);
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = std::exp(logits.data()[i] - mx[seg[i]]);
        denom[seg[i]] += out[i];
    }
    for (std::size_t i = 0; i < m; ++i) out[i] /= denom[seg[i]];
    auto li = logits.share();
    auto sg = std::make_shared<std::vector<int>>(seg);
    auto y = std::make_shared<std::vector<double>>(out);
    return make_result(
        m, 1, std::move(out), {li},
        [li, sg, y, n_segments](TensorImpl& o) {
            auto& dx = grad_of(*li);
            std::vector<double> dot(n_segments, 0.0);
            for (std::size_t i = 0; i < sg->size(); ++i)
                dot[(*sg)[i]] += o.grad[i] * (*y)[i];
            for (std::size_t i = 0; i < sg->size(); ++i)
                dx[i] += (*y)[i] * (o.grad[i] - dot[(*sg)[i]]);
        },
        "segment_softmax");
}

Tensor segment_sum_rows(const Tensor& x, const std::vector<int>& seg, int n_out) {
    if (seg.size() != x.rows()) throw ShapeMismatch("segment_sum_rows: id count mismatch");
    std::size_t m = x.cols();
    std::vector<double> out(static_cast<std::size_t>(n_out) * m, 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg[i] < 0 || seg[i] >= n_out)
            throw ShapeMismatch("segment_sum_rows: segment id out of range");
        for (std::size_t j = 0; j < m; ++j) out[seg[i] * m + j] += x.at(i, j);
    }
    auto xi = x.share();
    auto sg = std::make_shared<std::vector<int>>(seg);
    return make_result(
        n_out, m, std::move(out), {xi},
        [xi, sg, m](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            for (std::size_t i = 0; i < sg->size(); ++i)
                for (std::size_t j = 0; j < m; ++j)
                    dx[i * m + j] += o.grad[(*sg)[i] * m + j];
        },
        "segment_sum_rows");
}

Tensor mul_rows(const Tensor& x, const Tensor& w) {
    if (w.cols() != 1 || w.rows() != x.rows())
        throw ShapeMismatch("mul_rows: weight must be m x 1");
    std::size_t n = x.rows(), m = x.cols();
    std::vector<double> out(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] = x.at(i, j) * w.data()[i];
    auto xi = x.share(), wi = w.share();
    return make_result(
        n, m, std::move(out), {xi, wi},
        [xi, wi, n, m](TensorImpl& o) {
            for (std::size_t i = 0; i < n; ++i) {
                if (xi->requires_grad) {
                    auto& dx = grad_of(*xi);
                    for (std::size_t j = 0; j < m; ++j)
                        dx[i * m + j] += o.grad[i * m + j] * wi->data[i];
                }
                if (wi->requires_grad) {
                    auto& dw = grad_of(*wi);
                    for (std::size_t j = 0; j < m; ++j)
                        dw[i] += o.grad[i * m + j] * xi->data[i * m + j];
                }
            }
        },
        "mul_rows");
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    auto xi = x.share();
    return make_result(
        1, 1, {total}, {xi},
        [xi](TensorImpl& o) {
            auto& dx = grad_of(*xi);
            for (double& v : dx) v += o.grad[0];
        },
        "sum");
}

Tensor neg_log_likelihood(const Tensor& probs, const std::vector<int>& labels,
                          const std::vector<double>& class_weights) {
    std::size_t n = probs.rows(), c = probs.cols();
    if (labels.size() != n) throw ShapeMismatch("neg_log_likelihood: label count mismatch");
    if (!class_weights.empty() && class_weights.size() != c)
        throw ShapeMismatch("neg_log_likelihood: weight count mismatch");
    double total_w = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw ShapeMismatch("neg_log_likelihood: label out of range");
        double w = class_weights.empty() ? 1.0 : class_weights[labels[i]];
        total_w += w;
        loss += -w * std::log(std::max(probs.at(i, labels[i]), 1e-300));
    }
    loss /= total_w;
    auto pi = probs.share();
    auto lb = std::make_shared<std::vector<int>>(labels);
    auto cw = std::make_shared<std::vector<double>>(class_weights);
    return make_result(
        1, 1, {loss}, {pi},
        [pi, lb, cw, c, total_w](TensorImpl& o) {
            auto& dp = grad_of(*pi);
            for (std::size_t i = 0; i < lb->size(); ++i) {
                double w = cw->empty() ? 1.0 : (*cw)[(*lb)[i]];
                double p = std::max(pi->data[i * c + (*lb)[i]], 1e-300);
                dp[i * c + (*lb)[i]] += o.grad[0] * (-w / (p * total_w));
            }
        },
        "neg_log_likelihood");
}

void backward(const Tensor& loss) {
    if (!loss.valid() || loss.size() != 1)
        throw NotScalarLoss("backward expects a scalar loss");
    // Topological order over the recorded graph.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<TensorImpl*, std::size_t>> stack{{loss.impl(), 0}};
    seen.insert(loss.impl());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorImpl* p = node->parents[next++].get();
            if (p && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (TensorImpl* t : order) t->grad.assign(t->data.size(), 0.0);
    loss.impl()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

}  // namespace flagforge
