#include "kgcheck/aggregate.hpp"

#include <algorithm>

namespace kgcheck {

const char* aggregator_name(AggregatorKind k) {
    switch (k) {
        case AggregatorKind::AvgPool: return "avgpool";
        case AggregatorKind::MaxPool: return "maxpool";
        case AggregatorKind::LstmMaxPool: return "lstmmaxpool";
    }
    return "?";
}

AggregatorKind parse_aggregator(std::string_view name) {
    if (name == "avgpool") return AggregatorKind::AvgPool;
    if (name == "maxpool") return AggregatorKind::MaxPool;
    if (name == "lstmmaxpool") return AggregatorKind::LstmMaxPool;
    throw UserError("unknown aggregator '" + std::string(name) +
                    "' (expected avgpool, maxpool or lstmmaxpool)");
}

EmbeddedPathSet embed_path_set(const PathSet& ps, const FactEmbedder& embedder,
                               const StringPool& symbols) {
    EmbeddedPathSet out(ps.l_max, embedder.fact_dim());
    for (std::size_t l = 1; l <= ps.l_max; ++l) {
        out.by_length[l].reserve(ps.by_length[l].size());
        for (const DataPath& path : ps.by_length[l]) {
            EmbeddedPath ep;
            ep.pattern_score = path.pattern_score;
            ep.order_key = path_render(path, symbols);
            ep.facts.reserve(path.steps.size());
            for (const OrientedFact& f : path.steps) {
                Tensor t({embedder.fact_dim()});
                t.data = embedder.embed(f.triple);
                ep.facts.push_back(std::move(t));
            }
            out.by_length[l].push_back(std::move(ep));
        }
    }
    return out;
}

void AggregatorParams::init(AggregatorKind kind_, std::size_t l_max_, std::size_t fact_dim_,
                            std::size_t hidden_, Rng& rng) {
    kind = kind_;
    l_max = l_max_;
    fact_dim = fact_dim_;
    hidden = hidden_;
    dense.clear();
    inner.clear();
    outer.clear();
    if (kind == AggregatorKind::MaxPool) {
        dense.resize(l_max);
        for (std::size_t l = 1; l <= l_max; ++l)
            dense[l - 1].init(hidden, l * fact_dim, Activation::Sigmoid, rng);
    } else if (kind == AggregatorKind::LstmMaxPool) {
        inner.resize(l_max);
        outer.resize(l_max);
        for (std::size_t l = 1; l <= l_max; ++l) {
            inner[l - 1].init(fact_dim, hidden, rng);
            outer[l - 1].init(hidden, hidden, rng);
        }
    }
}

std::size_t AggregatorParams::slot_width(std::size_t l) const {
    return kind == AggregatorKind::AvgPool ? l * fact_dim : hidden;
}

std::size_t AggregatorParams::combined_width() const {
    std::size_t w = 0;
    for (std::size_t l = 1; l <= l_max; ++l) w += slot_width(l);
    return w;
}

std::vector<Tensor*> AggregatorParams::params() {
    std::vector<Tensor*> out;
    for (auto& d : dense)
        for (Tensor* t : d.params()) out.push_back(t);
    for (std::size_t i = 0; i < inner.size(); ++i) {
        for (Tensor* t : inner[i].params()) out.push_back(t);
        for (Tensor* t : outer[i].params()) out.push_back(t);
    }
    return out;
}

std::vector<const Tensor*> AggregatorParams::params() const {
    std::vector<const Tensor*> out;
    for (const auto& d : dense)
        for (const Tensor* t : d.params()) out.push_back(t);
    for (std::size_t i = 0; i < inner.size(); ++i) {
        for (const Tensor* t : inner[i].params()) out.push_back(t);
        for (const Tensor* t : outer[i].params()) out.push_back(t);
    }
    return out;
}

void AggregatorGrads::init_like(const AggregatorParams& p) {
    dense.resize(p.dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i) dense[i].init_like(p.dense[i]);
    inner.resize(p.inner.size());
    outer.resize(p.outer.size());
    for (std::size_t i = 0; i < inner.size(); ++i) {
        inner[i].init_like(p.inner[i]);
        outer[i].init_like(p.outer[i]);
    }
}

std::vector<Tensor*> AggregatorGrads::params() {
    std::vector<Tensor*> out;
    for (auto& d : dense)
        for (Tensor* t : d.params()) out.push_back(t);
    for (std::size_t i = 0; i < inner.size(); ++i) {
        for (Tensor* t : inner[i].params()) out.push_back(t);
        for (Tensor* t : outer[i].params()) out.push_back(t);
    }
    return out;
}

namespace {

Tensor concat_facts(const EmbeddedPath& path) {
    std::size_t dim = path.facts.empty() ? 0 : path.facts[0].size();
    Tensor row({path.facts.size() * dim});
    std::size_t at = 0;
    for (const Tensor& f : path.facts)
        for (std::size_t d = 0; d < f.size(); ++d) row[at++] = f[d];
    return row;
}

std::vector<std::size_t> lstm_order(const std::vector<EmbeddedPath>& batch) {
    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (batch[a].pattern_score != batch[b].pattern_score)
            return batch[a].pattern_score > batch[b].pattern_score;
        return batch[a].order_key < batch[b].order_key;
    });
    return order;
}

}  // namespace

Tensor aggregate_avg(const std::vector<EmbeddedPath>& batch) {
    if (batch.empty()) throw std::invalid_argument("aggregate_avg: empty batch");
    std::vector<Tensor> rows;
    rows.reserve(batch.size());
    for (const EmbeddedPath& p : batch) rows.push_back(concat_facts(p));
    return avg_pool_1d(rows);
}

Tensor aggregate_max(const std::vector<EmbeddedPath>& batch, const DenseParams& p,
                     MaxPoolCache* cache) {
    if (batch.empty()) throw std::invalid_argument("aggregate_max: empty batch");
    std::vector<Tensor> activations;
    activations.reserve(batch.size());
    std::vector<DenseCache> caches(cache ? batch.size() : 0);
    for (std::size_t i = 0; i < batch.size(); ++i)
        activations.push_back(
            dense_forward(concat_facts(batch[i]), p, cache ? &caches[i] : nullptr));
    std::vector<std::size_t> argmax;
    Tensor out = max_pool_1d(activations, &argmax);
    if (cache) {
        cache->rows = std::move(caches);
        cache->argmax = std::move(argmax);
    }
    return out;
}

Tensor aggregate_lstm_maxpool(const std::vector<EmbeddedPath>& batch, const LstmParams& inner,
                              const LstmParams& outer, LstmAggCache* cache) {
    if (batch.empty()) throw std::invalid_argument("aggregate_lstm_maxpool: empty batch");
    std::vector<std::size_t> order = lstm_order(batch);

    std::vector<Tensor> path_vecs;
    path_vecs.reserve(batch.size());
    std::vector<LstmCache> inner_caches(cache ? batch.size() : 0);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const EmbeddedPath& p = batch[order[rank]];
        auto hidden = lstm_forward(p.facts, inner, cache ? &inner_caches[rank] : nullptr);
        path_vecs.push_back(std::move(hidden.back()));
    }

    LstmCache outer_cache;
    auto outer_hidden = lstm_forward(path_vecs, outer, cache ? &outer_cache : nullptr);
    std::vector<std::size_t> argmax;
    Tensor out = max_pool_1d(outer_hidden, &argmax);
    if (cache) {
        cache->order = std::move(order);
        cache->inner = std::move(inner_caches);
        cache->outer = std::move(outer_cache);
        cache->outer_hidden = std::move(outer_hidden);
        cache->argmax = std::move(argmax);
    }
    return out;
}

AggregateRepr build_aggregate_repr(const EmbeddedPathSet& eps, const AggregatorParams& params,
                                   AggregateCache* cache) {
    if (eps.l_max != params.l_max || (eps.fact_dim && eps.fact_dim != params.fact_dim))
        throw std::invalid_argument("build_aggregate_repr: shape mismatch");
    AggregateRepr repr;
    repr.per_length.reserve(params.l_max);
    if (cache) cache->per_length.assign(params.l_max + 1, LengthCache{});

    for (std::size_t l = 1; l <= params.l_max; ++l) {
        const auto& bucket = eps.by_length[l];
        Tensor slot;
        if (bucket.empty()) {
            slot = Tensor({params.slot_width(l)});
        } else if (params.kind == AggregatorKind::AvgPool) {
            slot = aggregate_avg(bucket);
        } else if (params.kind == AggregatorKind::MaxPool) {
            slot = aggregate_max(bucket, params.dense[l - 1],
                                 cache ? &cache->per_length[l].max_pool : nullptr);
        } else {
            slot = aggregate_lstm_maxpool(bucket, params.inner[l - 1], params.outer[l - 1],
                                          cache ? &cache->per_length[l].lstm : nullptr);
        }
        if (cache) cache->per_length[l].n_paths = bucket.size();
        repr.per_length.push_back(std::move(slot));
    }

    Tensor combined({params.combined_width()});
    std::size_t at = 0;
    for (const Tensor& slot : repr.per_length)
        for (std::size_t i = 0; i < slot.size(); ++i) combined[at++] = slot[i];
    repr.combined = std::move(combined);
    return repr;
}

void aggregate_backward(const Tensor& grad_combined, const EmbeddedPathSet& eps,
                        const AggregatorParams& params, const AggregateCache& cache,
                        AggregatorGrads& grads) {
    if (grad_combined.size() != params.combined_width())
        throw std::invalid_argument("aggregate_backward: grad width mismatch");
    if (params.kind == AggregatorKind::AvgPool) return;  // no learned state

    std::size_t at = 0;
    for (std::size_t l = 1; l <= params.l_max; ++l) {
        std::size_t width = params.slot_width(l);
        const auto& bucket = eps.by_length[l];
        const LengthCache& lc = cache.per_length[l];
        Tensor slot_grad({width});
        for (std::size_t i = 0; i < width; ++i) slot_grad[i] = grad_combined[at + i];
        at += width;
        if (bucket.empty()) continue;

        if (params.kind == AggregatorKind::MaxPool) {
            auto row_grads = max_pool_backward(slot_grad, lc.max_pool.argmax, bucket.size());
            std::set<std::size_t> touched(lc.max_pool.argmax.begin(), lc.max_pool.argmax.end());
            for (std::size_t i : touched)
                dense_backward(row_grads[i], params.dense[l - 1], lc.max_pool.rows[i],
                               grads.dense[l - 1]);
        } else {
            auto hidden_grads =
                max_pool_backward(slot_grad, lc.lstm.argmax, lc.lstm.outer_hidden.size());
            auto outer_dx =
                lstm_backward(hidden_grads, params.outer[l - 1], lc.lstm.outer, grads.outer[l - 1]);
            for (std::size_t rank = 0; rank < lc.lstm.order.size(); ++rank) {
                const EmbeddedPath& p = bucket[lc.lstm.order[rank]];
                std::vector<Tensor> grad_h(p.facts.size(), Tensor({params.hidden}));
                grad_h.back() = outer_dx[rank];
                lstm_backward(grad_h, params.inner[l - 1], lc.lstm.inner[rank],
                              grads.inner[l - 1]);
            }
        }
    }
}

}  // namespace kgcheck
