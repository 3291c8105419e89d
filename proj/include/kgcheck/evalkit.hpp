#ifndef KGCHECK_EVALKIT_HPP
#define KGCHECK_EVALKIT_HPP

#include "kgcheck/benchmark.hpp"
#include "kgcheck/checker.hpp"

namespace kgcheck {

struct ScoredExample {
    double score = 0.0;
    int label = 0;  // 1 positive, 0 negative
};

// Mann-Whitney estimate: the probability that a uniformly random positive
// outscores a uniformly random negative, ties counted half. Needs both
// classes and finite scores.
double auc(const std::vector<ScoredExample>& examples);
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

struct ExperimentGrid {
    std::vector<EmbeddingMode> modes;
    std::vector<AggregatorKind> aggregators;
    std::vector<double> train_fractions;
    std::size_t repeats = 4;  // runs averaged per cell, one row each
};

struct ExperimentConfig {
    PipelineConfig pipeline;
    SkipgramConfig skipgram;
    std::size_t walks_per_node = 10;
    std::size_t walk_length = 20;
    TrainConfig trainer;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    // One model and row per predicate instead of one pooled model.
    bool per_predicate = false;
    std::optional<PredicateId> only_predicate;
};

struct ExperimentRow {
    std::string predicate;  // predicate name, or "all" for the pooled model
    EmbeddingMode mode = EmbeddingMode::Compositional;
    AggregatorKind aggregator = AggregatorKind::AvgPool;
    double train_fraction = 0.0;
    std::uint64_t seed = 0;  // the repeat's run seed
    double auc = 0.0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

// Full protocol over the benchmark: every positive is masked from the graph,
// fact embeddings are trained on the masked copy, paths are extracted once
// through the masked view and shared by all grid cells. Each cell re-splits
// the pools at its train fraction with the repeat's seed, trains a fresh
// model and reports test AUC. Cells run in parallel; a failing cell is
// recorded and the run continues.
std::vector<ExperimentRow> run_experiment(const ABoxGraph& g, const TBoxGraph* tbox,
                                          const StringPool& symbols, const BenchmarkSet& bench,
                                          const ExperimentGrid& grid, const ExperimentConfig& cfg);

// `predicate  embedding  aggregator  train_frac  seed  auc  seconds` rows
// (tab-separated, header first). The seconds column is zeroed unless
// with_timings: wall time would break byte-reproducibility.
std::string results_to_tsv(const std::vector<ExperimentRow>& rows, bool with_timings);

}  // namespace kgcheck

#endif
