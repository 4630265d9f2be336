#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace flagforge {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotScalarLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic RNG. Raw engine is mt19937_64; uniform doubles are derived
/// from the top 53 bits so streams are identical across platforms
/// (std::uniform_real_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    double uniform() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 gen_;
};

struct TensorImpl;

/// 2-D dense float64 tensor with reverse-mode autodiff. Scalars are 1x1.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double value);
    /// Glorot-style init: uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
    static Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng);

    bool valid() const { return impl_ != nullptr; }
    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t size() const;
    double at(std::size_t r, std::size_t c) const;
    double item() const;  // scalar value

    std::vector<double>& data();
    const std::vector<double>& data() const;
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    bool requires_grad() const;
    void set_name(const std::string& name);
    const std::string& name() const;

    TensorImpl* impl() const { return impl_.get(); }
    std::shared_ptr<TensorImpl> share() const { return impl_; }
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

private:
    std::shared_ptr<TensorImpl> impl_;
};

struct TensorImpl {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::string name;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void(TensorImpl&)> backward_fn;
};

// Forward ops. Every op validates shapes and rejects non-finite outputs.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Elementwise add; a 1xN right operand broadcasts over rows (bias).
Tensor add(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
/// Train mode keeps activations with probability 1-p and scales by 1/(1-p);
/// eval mode is the exact identity.
Tensor dropout(const Tensor& x, double p, bool train_mode, Rng& rng);
Tensor row_softmax(const Tensor& x);
/// out[g] = mean of x rows in groups[g]; an empty group yields a zero row.
Tensor mean_over_rows(const Tensor& x, const std::vector<std::vector<int>>& groups);
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);
/// Softmax of an m x 1 logit column within each segment.
Tensor segment_softmax(const Tensor& logits, const std::vector<int>& seg, int n_segments);
Tensor segment_sum_rows(const Tensor& x, const std::vector<int>& seg, int n_out);
/// Scale row i of x by w[i] (w is m x 1).
Tensor mul_rows(const Tensor& x, const Tensor& w);
Tensor sum(const Tensor& x);
/// Mean negative log-likelihood of probability rows; optional per-class
/// weights (normalized by total selected weight).
Tensor neg_log_likelihood(const Tensor& probs, const std::vector<int>& labels,
                          const std::vector<double>& class_weights = {});

/// Reverse-mode sweep from a scalar loss. Grads of all reachable tensors are
/// reset, then populated; parameter grads are read afterwards.
void backward(const Tensor& loss);

}  // namespace flagforge
