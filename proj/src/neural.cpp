#include "kgcheck/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace kgcheck {

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
        n *= d;
    }
    data.assign(shape.empty() ? 0 : n, 0.0);
}

bool Tensor::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

double apply_act(double x, Activation a) {
    switch (a) {
        case Activation::Sigmoid: return sigmoid(x);
        case Activation::Tanh: return std::tanh(x);
        case Activation::Identity: return x;
    }
    return x;
}

// Derivative in terms of the activation output.
double act_grad_from_output(double y, Activation a) {
    switch (a) {
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in ? fan_in : 1));
    for (double& x : t.data) x = rng.next_double(-bound, bound);
}

void DenseParams::init(std::size_t out, std::size_t in, Activation a, Rng& rng) {
    W = Tensor({out, in});
    b = Tensor({out});
    act = a;
    init_uniform(W, in, rng);
}

void DenseGrads::init_like(const DenseParams& p) {
    W = zeros_like(p.W);
    b = zeros_like(p.b);
}

Tensor dense_forward(const Tensor& x, const DenseParams& p, DenseCache* cache) {
    if (x.size() != p.in_size()) throw std::invalid_argument("dense_forward: input size mismatch");
    Tensor y({p.out_size()});
    for (std::size_t r = 0; r < p.out_size(); ++r) {
        double acc = p.b[r];
        for (std::size_t c = 0; c < p.in_size(); ++c) acc += p.W.at(r, c) * x[c];
        y[r] = apply_act(acc, p.act);
    }
    assert(y.all_finite());
    if (cache) {
        cache->x = x;
        cache->y = y;
    }
    return y;
}

Tensor dense_backward(const Tensor& grad_y, const DenseParams& p, const DenseCache& cache,
                      DenseGrads& g) {
    if (grad_y.size() != p.out_size() || cache.x.size() != p.in_size())
        throw std::invalid_argument("dense_backward: shape mismatch");
    Tensor grad_x({p.in_size()});
    for (std::size_t r = 0; r < p.out_size(); ++r) {
        double dz = grad_y[r] * act_grad_from_output(cache.y[r], p.act);
        g.b[r] += dz;
        for (std::size_t c = 0; c < p.in_size(); ++c) {
            g.W.at(r, c) += dz * cache.x[c];
            grad_x[c] += dz * p.W.at(r, c);
        }
    }
    return grad_x;
}

void LstmParams::init(std::size_t in, std::size_t hidden, Rng& rng) {
    input_size = in;
    hidden_size = hidden;
    for (Tensor* t : {&Wxi, &Wxf, &Wxo, &Wxg}) {
        *t = Tensor({hidden, in});
        init_uniform(*t, in, rng);
    }
    for (Tensor* t : {&Whi, &Whf, &Who, &Whg}) {
        *t = Tensor({hidden, hidden});
        init_uniform(*t, hidden, rng);
    }
    for (Tensor* t : {&bi, &bf, &bo, &bg}) *t = Tensor({hidden});
    for (double& x : bf.data) x = 1.0;
}

void LstmGrads::init_like(const LstmParams& p) {
    auto mine = params();
    auto theirs = p.params();
    for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] = zeros_like(*theirs[i]);
}

namespace {

// z = Wx * x + Wh * h + b
Tensor gate_pre(const Tensor& Wx, const Tensor& Wh, const Tensor& b, const Tensor& x,
                const Tensor& h) {
    std::size_t n = b.size();
    Tensor z({n});
    for (std::size_t r = 0; r < n; ++r) {
        double acc = b[r];
        for (std::size_t c = 0; c < Wx.cols(); ++c) acc += Wx.at(r, c) * x[c];
        for (std::size_t c = 0; c < Wh.cols(); ++c) acc += Wh.at(r, c) * h[c];
        z[r] = acc;
    }
    return z;
}

void gate_backward(const Tensor& dz, const Tensor& Wx, const Tensor& Wh, const Tensor& x,
                   const Tensor& h, Tensor& gWx, Tensor& gWh, Tensor& gb, Tensor& dx, Tensor& dh) {
    for (std::size_t r = 0; r < dz.size(); ++r) {
        gb[r] += dz[r];
        for (std::size_t c = 0; c < Wx.cols(); ++c) {
            gWx.at(r, c) += dz[r] * x[c];
            dx[c] += dz[r] * Wx.at(r, c);
        }
        for (std::size_t c = 0; c < Wh.cols(); ++c) {
            gWh.at(r, c) += dz[r] * h[c];
            dh[c] += dz[r] * Wh.at(r, c);
        }
    }
}

}  // namespace

std::vector<Tensor> lstm_forward(const std::vector<Tensor>& seq, const LstmParams& p,
                                 LstmCache* cache) {
    if (seq.empty()) throw std::invalid_argument("lstm_forward: empty sequence");
    for (const Tensor& x : seq)
        if (x.size() != p.input_size)
            throw std::invalid_argument("lstm_forward: input size mismatch");

    Tensor h({p.hidden_size});
    Tensor c({p.hidden_size});
    std::vector<Tensor> hidden;
    hidden.reserve(seq.size());
    if (cache) *cache = LstmCache{};

    for (const Tensor& x : seq) {
        Tensor zi = gate_pre(p.Wxi, p.Whi, p.bi, x, h);
        Tensor zf = gate_pre(p.Wxf, p.Whf, p.bf, x, h);
        Tensor zo = gate_pre(p.Wxo, p.Who, p.bo, x, h);
        Tensor zg = gate_pre(p.Wxg, p.Whg, p.bg, x, h);
        Tensor i_t({p.hidden_size}), f_t({p.hidden_size}), o_t({p.hidden_size}),
            g_t({p.hidden_size}), c_t({p.hidden_size}), h_t({p.hidden_size});
        for (std::size_t j = 0; j < p.hidden_size; ++j) {
            i_t[j] = sigmoid(zi[j]);
            f_t[j] = sigmoid(zf[j]);
            o_t[j] = sigmoid(zo[j]);
            g_t[j] = std::tanh(zg[j]);
            c_t[j] = f_t[j] * c[j] + i_t[j] * g_t[j];
            h_t[j] = o_t[j] * std::tanh(c_t[j]);
        }
        if (cache) {
            cache->x.push_back(x);
            cache->i.push_back(i_t);
            cache->f.push_back(f_t);
            cache->o.push_back(o_t);
            cache->g.push_back(g_t);
            cache->c.push_back(c_t);
            cache->h.push_back(h_t);
        }
        c = std::move(c_t);
        h = h_t;
        hidden.push_back(std::move(h_t));
    }
    assert(hidden.back().all_finite());
    return hidden;
}

std::vector<Tensor> lstm_backward(const std::vector<Tensor>& grad_h, const LstmParams& p,
                                  const LstmCache& cache, LstmGrads& g) {
    std::size_t steps = cache.x.size();
    if (steps == 0 || grad_h.size() != steps)
        throw std::invalid_argument("lstm_backward: step count mismatch");

    std::vector<Tensor> grad_x(steps);
    Tensor dh_next({p.hidden_size});
    Tensor dc_next({p.hidden_size});
    const Tensor zero({p.hidden_size});

    for (std::size_t t = steps; t-- > 0;) {
        const Tensor& c_prev = t == 0 ? zero : cache.c[t - 1];
        const Tensor& h_prev = t == 0 ? zero : cache.h[t - 1];
        Tensor dh = dh_next;
        for (std::size_t j = 0; j < p.hidden_size; ++j) dh[j] += grad_h[t][j];

        Tensor dzi({p.hidden_size}), dzf({p.hidden_size}), dzo({p.hidden_size}),
            dzg({p.hidden_size}), dc({p.hidden_size});
        for (std::size_t j = 0; j < p.hidden_size; ++j) {
            double tc = std::tanh(cache.c[t][j]);
            double do_ = dh[j] * tc;
            dc[j] = dc_next[j] + dh[j] * cache.o[t][j] * (1.0 - tc * tc);
            double di = dc[j] * cache.g[t][j];
            double df = dc[j] * c_prev[j];
            double dg = dc[j] * cache.i[t][j];
            dzi[j] = di * cache.i[t][j] * (1.0 - cache.i[t][j]);
            dzf[j] = df * cache.f[t][j] * (1.0 - cache.f[t][j]);
            dzo[j] = do_ * cache.o[t][j] * (1.0 - cache.o[t][j]);
            dzg[j] = dg * (1.0 - cache.g[t][j] * cache.g[t][j]);
        }

        Tensor dx({p.input_size});
        Tensor dh_prev({p.hidden_size});
        gate_backward(dzi, p.Wxi, p.Whi, cache.x[t], h_prev, g.Wxi, g.Whi, g.bi, dx, dh_prev);
        gate_backward(dzf, p.Wxf, p.Whf, cache.x[t], h_prev, g.Wxf, g.Whf, g.bf, dx, dh_prev);
        gate_backward(dzo, p.Wxo, p.Who, cache.x[t], h_prev, g.Wxo, g.Who, g.bo, dx, dh_prev);
        gate_backward(dzg, p.Wxg, p.Whg, cache.x[t], h_prev, g.Wxg, g.Whg, g.bg, dx, dh_prev);

        grad_x[t] = std::move(dx);
        dh_next = std::move(dh_prev);
        for (std::size_t j = 0; j < p.hidden_size; ++j) dc_next[j] = dc[j] * cache.f[t][j];
    }
    return grad_x;
}

namespace {

void require_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("pool: empty input");
    for (const Tensor& r : rows)
        if (r.size() != rows[0].size()) throw std::invalid_argument("pool: ragged rows");
}

}  // namespace

Tensor avg_pool_1d(const std::vector<Tensor>& rows) {
    require_rows(rows);
    Tensor out({rows[0].size()});
    for (const Tensor& r : rows)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += r[j];
    for (double& x : out.data) x /= static_cast<double>(rows.size());
    return out;
}

std::vector<Tensor> avg_pool_backward(const Tensor& grad, std::size_t n_rows) {
    if (n_rows == 0) throw std::invalid_argument("avg_pool_backward: zero rows");
    Tensor per_row({grad.size()});
    for (std::size_t j = 0; j < grad.size(); ++j)
        per_row[j] = grad[j] / static_cast<double>(n_rows);
    return std::vector<Tensor>(n_rows, per_row);
}

Tensor max_pool_1d(const std::vector<Tensor>& rows, std::vector<std::size_t>* argmax) {
    require_rows(rows);
    Tensor out = rows[0];
    std::vector<std::size_t> arg(out.size(), 0);
    for (std::size_t i = 1; i < rows.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j)
            if (rows[i][j] > out[j]) {
                out[j] = rows[i][j];
                arg[j] = i;
            }
    if (argmax) *argmax = std::move(arg);
    return out;
}

std::vector<Tensor> max_pool_backward(const Tensor& grad, const std::vector<std::size_t>& argmax,
                                      std::size_t n_rows) {
    if (argmax.size() != grad.size())
        throw std::invalid_argument("max_pool_backward: argmax size mismatch");
    std::vector<Tensor> out(n_rows, Tensor({grad.size()}));
    for (std::size_t j = 0; j < grad.size(); ++j) out[argmax[j]][j] += grad[j];
    return out;
}

std::pair<double, Tensor> bce_loss(const Tensor& predictions, const Tensor& labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("bce_loss: size mismatch");
    constexpr double kEps = 1e-7;
    double loss = 0;
    Tensor grad({predictions.size()});
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double y = labels[i];
        if (y != 0.0 && y != 1.0) throw std::invalid_argument("bce_loss: label outside {0,1}");
        double p = std::clamp(predictions[i], kEps, 1.0 - kEps);
        loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        grad[i] = (p - y) / (p * (1.0 - p));
    }
    return {loss, grad};
}

AdamState::AdamState(const std::vector<Tensor*>& params, double lr_) : lr(lr_) {
    for (const Tensor* p : params) {
        m.push_back(zeros_like(*p));
        v.push_back(zeros_like(*p));
    }
}

void AdamState::apply(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
    if (params.size() != m.size() || grads.size() != m.size())
        throw std::invalid_argument("adam: parameter list mismatch");
    ++step;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (p.size() != m[i].size() || g.size() != m[i].size())
            throw std::invalid_argument("adam: shape mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g[j];
            v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g[j] * g[j];
            double mh = m[i][j] / bc1;
            double vh = v[i][j] / bc2;
            p[j] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm) {
    double sq = 0;
    for (const Tensor* g : grads)
        for (double x : g->data) sq += x * x;
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0) {
        double scale = max_norm / norm;
        for (Tensor* g : grads)
            for (double& x : g->data) x *= scale;
    }
    return norm;
}

namespace {

constexpr char kMagic[4] = {'K', 'G', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct ByteReader {
    const std::string& bytes;
    std::size_t pos = 0;
    const std::string& origin;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw UserError(origin + ": truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
};

}  // namespace

std::string serialize_tensors(const std::vector<const Tensor*>& tensors, const std::string& meta) {
    std::string out(kMagic, 4);
    put_u32(out, kFormatVersion);
    put_u64(out, meta.size());
    out += meta;
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor* t : tensors) {
        put_u32(out, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t d : t->shape) put_u64(out, d);
        for (double x : t->data) put_f64(out, x);
    }
    put_u64(out, fnv1a64(out));
    return out;
}

std::pair<std::vector<Tensor>, std::string> deserialize_tensors(const std::string& bytes,
                                                                const std::string& origin) {
    if (bytes.size() < 16) throw UserError(origin + ": truncated checkpoint");
    ByteReader tail{bytes, bytes.size() - 8, origin};
    std::uint64_t stored = tail.u64();
    if (fnv1a64(std::string_view(bytes.data(), bytes.size() - 8)) != stored)
        throw UserError(origin + ": checkpoint checksum mismatch");

    ByteReader r{bytes, 0, origin};
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw UserError(origin + ": not a checkpoint file");
    r.pos = 4;
    std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw UserError(origin + ": unsupported checkpoint version " + std::to_string(version));
    std::uint64_t meta_len = r.u64();
    r.need(meta_len);
    std::string meta = bytes.substr(r.pos, meta_len);
    r.pos += meta_len;
    std::uint32_t count = r.u32();
    std::vector<Tensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t rank = r.u32();
        if (rank > 4) throw UserError(origin + ": corrupt tensor rank");
        std::vector<std::size_t> shape;
        for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.u64());
        Tensor t(shape);
        for (double& x : t.data) x = r.f64();
        tensors.push_back(std::move(t));
    }
    if (r.pos != bytes.size() - 8) throw UserError(origin + ": trailing bytes in checkpoint");
    return {std::move(tensors), std::move(meta)};
}

}  // namespace kgcheck
