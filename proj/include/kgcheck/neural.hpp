#ifndef KGCHECK_NEURAL_HPP
#define KGCHECK_NEURAL_HPP

#include <cassert>

#include "kgcheck/common.hpp"

namespace kgcheck {

// Row-major dense array. Rank 1 for vectors, rank 2 for weight matrices.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool all_finite() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

Tensor zeros_like(const Tensor& t);

double sigmoid(double x);

enum class Activation : std::uint8_t { Sigmoid, Tanh, Identity };

// Fills t with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) draws.
void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng);

// y = act(W x + b)
struct DenseParams {
    Tensor W;  // [out, in]
    Tensor b;  // [out]
    Activation act = Activation::Identity;

    void init(std::size_t out, std::size_t in, Activation a, Rng& rng);
    std::size_t in_size() const { return W.cols(); }
    std::size_t out_size() const { return W.rows(); }
    std::vector<Tensor*> params() { return {&W, &b}; }
    std::vector<const Tensor*> params() const { return {&W, &b}; }
};

struct DenseGrads {
    Tensor W, b;
    void init_like(const DenseParams& p);
    std::vector<Tensor*> params() { return {&W, &b}; }
};

struct DenseCache {
    Tensor x;
    Tensor y;  // post-activation
};

Tensor dense_forward(const Tensor& x, const DenseParams& p, DenseCache* cache = nullptr);
// Returns dL/dx; accumulates parameter gradients into g.
Tensor dense_backward(const Tensor& grad_y, const DenseParams& p, const DenseCache& cache,
                      DenseGrads& g);

// Standard LSTM cell: sigmoid input/forget/output gates, tanh candidate and
// cell squash, zero initial hidden and cell state.
struct LstmParams {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    Tensor Wxi, Whi, bi;
    Tensor Wxf, Whf, bf;  // forget bias starts at 1
    Tensor Wxo, Who, bo;
    Tensor Wxg, Whg, bg;

    void init(std::size_t in, std::size_t hidden, Rng& rng);
    std::vector<Tensor*> params() {
        return {&Wxi, &Whi, &bi, &Wxf, &Whf, &bf, &Wxo, &Who, &bo, &Wxg, &Whg, &bg};
    }
    std::vector<const Tensor*> params() const {
        return {&Wxi, &Whi, &bi, &Wxf, &Whf, &bf, &Wxo, &Who, &bo, &Wxg, &Whg, &bg};
    }
};

struct LstmGrads {
    Tensor Wxi, Whi, bi, Wxf, Whf, bf, Wxo, Who, bo, Wxg, Whg, bg;
    void init_like(const LstmParams& p);
    std::vector<Tensor*> params() {
        return {&Wxi, &Whi, &bi, &Wxf, &Whf, &bf, &Wxo, &Who, &bo, &Wxg, &Whg, &bg};
    }
};

struct LstmCache {
    // Post-gate values per step; indexed [t].
    std::vector<Tensor> x, i, f, o, g, c, h;
};

// Returns the hidden state after every step; the final hidden state is
// .back(). Empty input is an error.
std::vector<Tensor> lstm_forward(const std::vector<Tensor>& seq, const LstmParams& p,
                                 LstmCache* cache = nullptr);
// grad_h[t] = dL/dh_t (zero tensors for unused steps). Returns dL/dx per
// step; accumulates parameter gradients into g.
std::vector<Tensor> lstm_backward(const std::vector<Tensor>& grad_h, const LstmParams& p,
                                  const LstmCache& cache, LstmGrads& g);

// Elementwise mean / max over equal-length rows. Max ties go to the first
// row attaining the maximum.
Tensor avg_pool_1d(const std::vector<Tensor>& rows);
std::vector<Tensor> avg_pool_backward(const Tensor& grad, std::size_t n_rows);
Tensor max_pool_1d(const std::vector<Tensor>& rows, std::vector<std::size_t>* argmax = nullptr);
std::vector<Tensor> max_pool_backward(const Tensor& grad, const std::vector<std::size_t>& argmax,
                                      std::size_t n_rows);

// Binary cross-entropy summed over the batch, predictions clamped to
// [1e-7, 1-1e-7]. Returns (loss, dL/dprediction).
std::pair<double, Tensor> bce_loss(const Tensor& predictions, const Tensor& labels);

// Bias-corrected Adam over a fixed parameter list; moment slots are created
// from the list on construction and must be applied to the same list.
struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<Tensor> m, v;

    AdamState(const std::vector<Tensor*>& params, double lr_);
    void apply(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);
};

// Scales gradients in place so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm);

// Versioned binary container for parameter snapshots: magic "KGCK",
// format version, meta block, tensor shapes, little-endian float64 data in
// list order, trailing checksum.
std::string serialize_tensors(const std::vector<const Tensor*>& tensors, const std::string& meta);
std::pair<std::vector<Tensor>, std::string> deserialize_tensors(const std::string& bytes,
                                                                const std::string& origin);

}  // namespace kgcheck

#endif
