#ifndef KGCHECK_AGGREGATE_HPP
#define KGCHECK_AGGREGATE_HPP

#include "kgcheck/fact_embed.hpp"
#include "kgcheck/neural.hpp"

namespace kgcheck {

enum class AggregatorKind : std::uint8_t { AvgPool, MaxPool, LstmMaxPool };

const char* aggregator_name(AggregatorKind k);
AggregatorKind parse_aggregator(std::string_view name);

// A path in vectorized form: one tensor per fact, plus the keys that fix the
// sequence order fed to the recurrent aggregator.
struct EmbeddedPath {
    std::vector<Tensor> facts;
    double pattern_score = 0.0;
    std::string order_key;  // rendered path, unique per path
};

struct EmbeddedPathSet {
    std::size_t l_max = 0;
    std::size_t fact_dim = 0;
    std::vector<std::vector<EmbeddedPath>> by_length;  // slot 0 unused

    explicit EmbeddedPathSet(std::size_t l_max_ = 0, std::size_t fact_dim_ = 0)
        : l_max(l_max_), fact_dim(fact_dim_), by_length(l_max_ + 1) {}
};

EmbeddedPathSet embed_path_set(const PathSet& ps, const FactEmbedder& embedder,
                               const StringPool& symbols);

// Per-length learned state. AvgPool owns nothing; MaxPool owns one dense
// layer per length (input l*fact_dim); LstmMaxPool owns an inner and an
// outer LSTM per length.
struct AggregatorParams {
    AggregatorKind kind = AggregatorKind::AvgPool;
    std::size_t l_max = 0;
    std::size_t fact_dim = 0;
    std::size_t hidden = 64;
    std::vector<DenseParams> dense;  // MaxPool, index l-1
    std::vector<LstmParams> inner;   // LstmMaxPool, index l-1
    std::vector<LstmParams> outer;

    void init(AggregatorKind kind_, std::size_t l_max_, std::size_t fact_dim_,
              std::size_t hidden_, Rng& rng);
    std::size_t slot_width(std::size_t l) const;
    std::size_t combined_width() const;
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
};

struct AggregatorGrads {
    std::vector<DenseGrads> dense;
    std::vector<LstmGrads> inner, outer;

    void init_like(const AggregatorParams& p);
    std::vector<Tensor*> params();
};

struct MaxPoolCache {
    std::vector<DenseCache> rows;
    std::vector<std::size_t> argmax;
};

struct LstmAggCache {
    std::vector<std::size_t> order;  // path indices, aggregation order
    std::vector<LstmCache> inner;    // aligned with order
    LstmCache outer;
    std::vector<Tensor> outer_hidden;
    std::vector<std::size_t> argmax;
};

struct LengthCache {
    std::size_t n_paths = 0;
    MaxPoolCache max_pool;
    LstmAggCache lstm;
};

struct AggregateCache {
    std::vector<LengthCache> per_length;  // slot 0 unused
};

// Elementwise mean of the concatenated fact vectors; width l*fact_dim.
Tensor aggregate_avg(const std::vector<EmbeddedPath>& batch);

// Dense+sigmoid per concatenated path, then columnwise max; width = hidden.
Tensor aggregate_max(const std::vector<EmbeddedPath>& batch, const DenseParams& p,
                     MaxPoolCache* cache = nullptr);

// Inner LSTM over each path's fact sequence; outer LSTM over the per-path
// final hidden vectors in (pattern_score desc, order_key asc) order;
// elementwise max over the outer hidden sequence.
Tensor aggregate_lstm_maxpool(const std::vector<EmbeddedPath>& batch, const LstmParams& inner,
                              const LstmParams& outer, LstmAggCache* cache = nullptr);

struct AggregateRepr {
    std::vector<Tensor> per_length;  // index l-1
    Tensor combined;
};

// Per-length aggregation with zero vectors for empty buckets, concatenated
// in increasing length order.
AggregateRepr build_aggregate_repr(const EmbeddedPathSet& eps, const AggregatorParams& params,
                                   AggregateCache* cache = nullptr);

// Routes dL/dcombined back into the aggregator parameters. The embedded
// paths are fixed inputs; no gradient flows into them.
void aggregate_backward(const Tensor& grad_combined, const EmbeddedPathSet& eps,
                        const AggregatorParams& params, const AggregateCache& cache,
                        AggregatorGrads& grads);

}  // namespace kgcheck

#endif
