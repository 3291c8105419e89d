#ifndef KGCHECK_CHECKER_HPP
#define KGCHECK_CHECKER_HPP

#include <mutex>

#include "kgcheck/aggregate.hpp"

namespace kgcheck {

struct TrainConfig {
    double lr = 0.001;
    std::size_t epochs = 100;
    std::size_t patience = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    // Share of labeled facts used for training; the split itself happens in
    // the benchmark layer, this is carried along for manifests.
    double train_fraction = 0.5;
    double validation_fraction = 0.1;
    double clip_norm = 5.0;
};

// Aggregator plus a sigmoid dense head of one output over the combined
// representation.
struct FactCheckModel {
    AggregatorKind kind = AggregatorKind::AvgPool;
    EmbeddingMode embedding_mode = EmbeddingMode::Compositional;
    std::size_t fact_dim = 0;
    std::size_t l_max = 4;
    std::size_t hidden = 64;
    AggregatorParams agg;
    DenseParams head;
    // Free-form run settings snapshot, persisted with the checkpoint.
    std::map<std::string, std::string> hyper;

    void init(AggregatorKind kind_, EmbeddingMode mode_, std::size_t fact_dim_,
              std::size_t l_max_, std::size_t hidden_, std::uint64_t seed);
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;

    double forward(const EmbeddedPathSet& paths, AggregateCache* agg_cache = nullptr,
                   DenseCache* head_cache = nullptr) const;

    std::string serialize() const;
    static FactCheckModel deserialize(const std::string& bytes, const std::string& origin);
};

void save_model(const FactCheckModel& model, const std::string& path);
FactCheckModel load_model(const std::string& path);

struct TrainExample {
    Triple fact{};
    double label = 0.0;
    EmbeddedPathSet paths;
};

struct TrainResult {
    std::vector<double> train_losses;  // mean loss per epoch
    std::vector<double> val_losses;    // empty when the set is too small to split
    std::size_t best_epoch = 0;        // epoch whose weights the model carries
};

// Adam on summed cross-entropy with gradient clipping; early stopping on a
// stratified seeded validation slice with best-weights restore. Sequential
// and fully determined by cfg.seed.
TrainResult train(FactCheckModel& model, const std::vector<TrainExample>& examples,
                  const TrainConfig& cfg);

double score_from_paths(const FactCheckModel& model, const EmbeddedPathSet& paths);

struct PipelineConfig {
    std::size_t k = 10;
    std::size_t d = 4;
    std::size_t pattern_cap = 50;
    PathExtractConfig paths;
    // Schema-less graphs skip pattern mining; the unconstrained walk is
    // restricted to the top-k predicates related to the checked one.
    bool schema_less = false;
    unsigned threads = 1;
};

// Shared read-only context for path production: graph, schema, relatedness,
// embedder. Mined pattern lists are cached per predicate. All referenced
// objects must outlive the pipeline.
class Pipeline {
public:
    Pipeline(const ABoxGraph& g, const TBoxGraph* tbox, const RelatednessMatrix& rel,
             const FactEmbedder& embedder, const StringPool& symbols, PipelineConfig cfg);

    // Additional triples masked from every path search (evaluation holdout).
    void set_leave_out(const TripleSet* excluded) { leave_out_ = excluded; }

    const std::vector<SchemaPattern>& patterns_for(PredicateId p);
    PathSet paths_for(const Triple& fact);
    EmbeddedPathSet embedded_paths_for(const Triple& fact);

    const PipelineConfig& config() const { return cfg_; }
    const StringPool& symbols() const { return *symbols_; }
    const FactEmbedder& embedder() const { return *embedder_; }
    const ABoxGraph& graph() const { return *g_; }

private:
    const ABoxGraph* g_;
    const TBoxGraph* tbox_;  // null on schema-less graphs
    const RelatednessMatrix* rel_;
    const FactEmbedder* embedder_;
    const StringPool* symbols_;
    PipelineConfig cfg_;
    const TripleSet* leave_out_ = nullptr;
    TBoxSpec no_schema_;  // stand-in spec when tbox_ is null

    std::mutex mu_;
    std::map<PredicateId, std::vector<SchemaPattern>> pattern_cache_;

    void require_known_predicate(PredicateId p) const;
};

struct Verdict {
    double score = 0.0;
    bool label = false;
    PathSet evidence;
};

// Full pipeline for one fact: patterns, paths, embedding, aggregation, head.
Verdict score_fact(const FactCheckModel& model, const Triple& fact, Pipeline& ctx);

// Path extraction and embedding for a labeled fact list; parallel over
// facts, output independent of worker count.
std::vector<TrainExample> prepare_examples(Pipeline& ctx, const std::vector<Triple>& facts,
                                           const std::vector<double>& labels);

// Scores for pre-embedded examples, in order.
std::vector<double> score_examples(const FactCheckModel& model,
                                   const std::vector<TrainExample>& examples, unsigned threads = 1);

}  // namespace kgcheck

#endif
