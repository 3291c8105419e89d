#include "kgcheck/checker.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <set>

namespace kgcheck {

namespace {

std::map<std::string, std::string> parse_meta(const std::string& meta, const std::string& origin) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    while (pos < meta.size()) {
        std::size_t eol = meta.find('\n', pos);
        if (eol == std::string::npos) eol = meta.size();
        std::string line = meta.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UserError(origin + ": checkpoint meta line without '=': " + line);
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

const std::string& meta_value(const std::map<std::string, std::string>& meta,
                              const std::string& key, const std::string& origin) {
    auto it = meta.find(key);
    if (it == meta.end()) throw UserError(origin + ": checkpoint meta missing '" + key + "'");
    return it->second;
}

std::size_t meta_size(const std::map<std::string, std::string>& meta, const std::string& key,
                      const std::string& origin) {
    const std::string& raw = meta_value(meta, key, origin);
    char* end = nullptr;
    unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0')
        throw UserError(origin + ": bad checkpoint value " + key + "=" + raw);
    return static_cast<std::size_t>(v);
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

}  // namespace

void FactCheckModel::init(AggregatorKind kind_, EmbeddingMode mode_, std::size_t fact_dim_,
                          std::size_t l_max_, std::size_t hidden_, std::uint64_t seed) {
    if (fact_dim_ == 0) throw std::invalid_argument("fact_dim must be positive");
    if (l_max_ == 0) throw std::invalid_argument("l_max must be positive");
    kind = kind_;
    embedding_mode = mode_;
    fact_dim = fact_dim_;
    l_max = l_max_;
    hidden = hidden_;
    Rng rng(Rng::derive(seed, 0x4d4f44454cull));
    agg.init(kind_, l_max_, fact_dim_, hidden_, rng);
    head.init(1, agg.combined_width(), Activation::Sigmoid, rng);
}

std::vector<Tensor*> FactCheckModel::params() {
    std::vector<Tensor*> out = agg.params();
    for (Tensor* t : head.params()) out.push_back(t);
    return out;
}

std::vector<const Tensor*> FactCheckModel::params() const {
    std::vector<const Tensor*> out = agg.params();
    for (const Tensor* t : head.params()) out.push_back(t);
    return out;
}

double FactCheckModel::forward(const EmbeddedPathSet& paths, AggregateCache* agg_cache,
                               DenseCache* head_cache) const {
    AggregateRepr repr = build_aggregate_repr(paths, agg, agg_cache);
    Tensor y = dense_forward(repr.combined, head, head_cache);
    return y[0];
}

std::string FactCheckModel::serialize() const {
    std::string meta;
    meta += "kind=" + std::string(aggregator_name(kind)) + "\n";
    meta += "embedding=" + std::string(embedding_mode_name(embedding_mode)) + "\n";
    meta += "fact_dim=" + std::to_string(fact_dim) + "\n";
    meta += "l_max=" + std::to_string(l_max) + "\n";
    meta += "hidden=" + std::to_string(hidden) + "\n";
    for (const auto& [key, value] : hyper) {
        if (key.find_first_of("=\n") != std::string::npos ||
            value.find('\n') != std::string::npos)
            throw std::invalid_argument("hyper entries must be single-line, key without '='");
        meta += "hyper." + key + "=" + value + "\n";
    }
    return serialize_tensors(params(), meta);
}

FactCheckModel FactCheckModel::deserialize(const std::string& bytes, const std::string& origin) {
    auto [tensors, meta_str] = deserialize_tensors(bytes, origin);
    auto meta = parse_meta(meta_str, origin);

    FactCheckModel model;
    model.init(parse_aggregator(meta_value(meta, "kind", origin)),
               parse_embedding_mode(meta_value(meta, "embedding", origin)),
               meta_size(meta, "fact_dim", origin), meta_size(meta, "l_max", origin),
               meta_size(meta, "hidden", origin), /*seed=*/1);
    for (const auto& [key, value] : meta)
        if (key.rfind("hyper.", 0) == 0) model.hyper[key.substr(6)] = value;

    std::vector<Tensor*> slots = model.params();
    if (slots.size() != tensors.size())
        throw UserError(origin + ": checkpoint holds " + std::to_string(tensors.size()) +
                         " tensors, model needs " + std::to_string(slots.size()));
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]->shape != tensors[i].shape)
            throw UserError(origin + ": checkpoint tensor " + std::to_string(i) +
                             " has the wrong shape");
        *slots[i] = std::move(tensors[i]);
    }
    return model;
}

void save_model(const FactCheckModel& model, const std::string& path) {
    write_file(path, model.serialize());
}

FactCheckModel load_model(const std::string& path) {
    return FactCheckModel::deserialize(read_file(path), path);
}

TrainResult train(FactCheckModel& model, const std::vector<TrainExample>& examples,
                  const TrainConfig& cfg) {
    if (examples.empty()) throw UserError("training set is empty");
    if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (cfg.lr <= 0) throw std::invalid_argument("learning rate must be positive");
    if (cfg.validation_fraction < 0 || cfg.validation_fraction >= 1)
        throw std::invalid_argument("validation_fraction must lie in [0, 1)");
    for (const auto& ex : examples) {
        if (ex.label != 0.0 && ex.label != 1.0) throw UserError("labels must be 0 or 1");
        if (ex.paths.l_max != model.l_max || ex.paths.fact_dim != model.fact_dim)
            throw std::invalid_argument("example path set does not match the model dimensions");
    }

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < examples.size(); ++i)
        (examples[i].label > 0.5 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw UserError("training set must contain both true and false facts");

    TrainResult result;
    if (cfg.epochs == 0) return result;
    if (cfg.patience >= cfg.epochs)
        throw std::invalid_argument("patience must be smaller than epochs");

    // Stratified validation slice; the floors keep at least one training
    // example per class.
    Rng split_rng(Rng::derive(cfg.seed, 0x53504c4954ull));
    shuffle_indices(pos, split_rng);
    shuffle_indices(neg, split_rng);
    auto val_count = [&](std::size_t n) {
        return static_cast<std::size_t>(static_cast<double>(n) * cfg.validation_fraction);
    };
    std::size_t val_pos = val_count(pos.size());
    std::size_t val_neg = val_count(neg.size());

    std::vector<std::size_t> val_idx, train_idx;
    val_idx.insert(val_idx.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(val_pos));
    val_idx.insert(val_idx.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(val_neg));
    train_idx.insert(train_idx.end(), pos.begin() + static_cast<std::ptrdiff_t>(val_pos),
                     pos.end());
    train_idx.insert(train_idx.end(), neg.begin() + static_cast<std::ptrdiff_t>(val_neg),
                     neg.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    const bool has_val = !val_idx.empty();

    std::vector<Tensor*> params = model.params();
    AdamState adam(params, cfg.lr);
    AggregatorGrads agg_grads;
    agg_grads.init_like(model.agg);
    DenseGrads head_grads;
    head_grads.init_like(model.head);
    std::vector<Tensor*> grads = agg_grads.params();
    for (Tensor* t : head_grads.params()) grads.push_back(t);

    auto run_example = [&](const TrainExample& ex, bool backprop) {
        AggregateCache agg_cache;
        DenseCache head_cache;
        double p = model.forward(ex.paths, backprop ? &agg_cache : nullptr,
                                 backprop ? &head_cache : nullptr);
        Tensor pred({1}), label({1});
        pred[0] = p;
        label[0] = ex.label;
        auto [loss, grad] = bce_loss(pred, label);
        if (backprop) {
            Tensor dx = dense_backward(grad, model.head, head_cache, head_grads);
            aggregate_backward(dx, ex.paths, model.agg, agg_cache, agg_grads);
        }
        return loss;
    };

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_snapshot;
    std::size_t wait = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng(Rng::derive(cfg.seed, 0x45504f4348ull, epoch));
        shuffle_indices(train_idx, epoch_rng);

        double train_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            std::size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
            for (Tensor* t : grads) std::fill(t->data.begin(), t->data.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i)
                train_loss += run_example(examples[train_idx[i]], true);
            clip_global_norm(grads, cfg.clip_norm);
            adam.apply(params, grads);
        }
        result.train_losses.push_back(train_loss / static_cast<double>(train_idx.size()));

        if (!has_val) continue;
        double val_loss = 0.0;
        for (std::size_t i : val_idx) val_loss += run_example(examples[i], false);
        val_loss /= static_cast<double>(val_idx.size());
        result.val_losses.push_back(val_loss);

        if (val_loss < best_val) {
            best_val = val_loss;
            result.best_epoch = epoch;
            best_snapshot.clear();
            for (const Tensor* t : std::as_const(model).params()) best_snapshot.push_back(*t);
            wait = 0;
        } else if (++wait >= cfg.patience) {
            break;
        }
    }

    if (has_val) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] = std::move(best_snapshot[i]);
    } else {
        result.best_epoch = result.train_losses.size() - 1;
    }
    return result;
}

double score_from_paths(const FactCheckModel& model, const EmbeddedPathSet& paths) {
    return model.forward(paths);
}

Pipeline::Pipeline(const ABoxGraph& g, const TBoxGraph* tbox, const RelatednessMatrix& rel,
                   const FactEmbedder& embedder, const StringPool& symbols, PipelineConfig cfg)
    : g_(&g),
      tbox_(tbox),
      rel_(&rel),
      embedder_(&embedder),
      symbols_(&symbols),
      cfg_(std::move(cfg)) {
    if (cfg_.k == 0) throw std::invalid_argument("k must be positive");
}

void Pipeline::require_known_predicate(PredicateId p) const {
    if (!rel_->contains(p))
        throw UserError("predicate '" + symbols_->name(p) +
                        "' is not covered by the relatedness matrix; rebuild the matrix from "
                        "embeddings that include it");
}

const std::vector<SchemaPattern>& Pipeline::patterns_for(PredicateId p) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = pattern_cache_.find(p);
        if (it != pattern_cache_.end()) return it->second;
    }
    std::vector<SchemaPattern> mined;
    if (tbox_ != nullptr && !cfg_.schema_less) {
        require_known_predicate(p);
        mined = extract_schema_patterns(p, cfg_.k, cfg_.d, *tbox_, *rel_, *symbols_,
                                        cfg_.pattern_cap, cfg_.threads);
    }
    std::lock_guard<std::mutex> lock(mu_);
    return pattern_cache_.emplace(p, std::move(mined)).first->second;
}

PathSet Pipeline::paths_for(const Triple& fact) {
    require_known_predicate(fact.p);
    const std::vector<SchemaPattern>& patterns = patterns_for(fact.p);

    PathExtractConfig pcfg = cfg_.paths;
    pcfg.seed = Rng::derive(cfg_.paths.seed, fnv1a64(fact_key(fact, *symbols_)));
    // Across-fact parallelism lives in the batch helpers.
    pcfg.threads = 1;
    if (tbox_ == nullptr || cfg_.schema_less) {
        auto ranked = top_k_predicates(*rel_, fact.p, cfg_.k);
        pcfg.allowed_predicates.emplace(ranked.begin(), ranked.end());
    }

    GraphView view = leave_out_ ? GraphView(*g_, *leave_out_) : GraphView(*g_);
    const TBoxSpec& spec = tbox_ ? tbox_->spec : no_schema_;
    return extract_paths(view, fact, patterns, spec, pcfg);
}

EmbeddedPathSet Pipeline::embedded_paths_for(const Triple& fact) {
    return embed_path_set(paths_for(fact), *embedder_, *symbols_);
}

Verdict score_fact(const FactCheckModel& model, const Triple& fact, Pipeline& ctx) {
    if (model.fact_dim != ctx.embedder().fact_dim())
        throw UserError("model expects fact dimension " + std::to_string(model.fact_dim) +
                        " but the embedder produces " +
                        std::to_string(ctx.embedder().fact_dim()));
    if (model.l_max != ctx.config().paths.l_max)
        throw UserError("model was trained with l_max=" + std::to_string(model.l_max) +
                        " but the pipeline extracts up to length " +
                        std::to_string(ctx.config().paths.l_max));

    Verdict v;
    v.evidence = ctx.paths_for(fact);
    EmbeddedPathSet eps = embed_path_set(v.evidence, ctx.embedder(), ctx.symbols());
    v.score = model.forward(eps);
    v.label = v.score >= 0.5;
    return v;
}

std::vector<TrainExample> prepare_examples(Pipeline& ctx, const std::vector<Triple>& facts,
                                           const std::vector<double>& labels) {
    if (facts.size() != labels.size())
        throw std::invalid_argument("facts and labels differ in length");

    // Mine every needed pattern list up front so the per-fact loop only reads
    // the cache.
    std::set<PredicateId> preds;
    for (const Triple& f : facts) preds.insert(f.p);
    for (PredicateId p : preds) ctx.patterns_for(p);

    std::vector<TrainExample> out(facts.size());
    parallel_for(facts.size(), ctx.config().threads, [&](std::size_t i) {
        out[i].fact = facts[i];
        out[i].label = labels[i];
        out[i].paths = ctx.embedded_paths_for(facts[i]);
    });
    return out;
}

std::vector<double> score_examples(const FactCheckModel& model,
                                   const std::vector<TrainExample>& examples, unsigned threads) {
    std::vector<double> out(examples.size());
    parallel_for(examples.size(), threads,
                 [&](std::size_t i) { out[i] = model.forward(examples[i].paths); });
    return out;
}

}  // namespace kgcheck
