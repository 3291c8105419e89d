#ifndef KGCHECK_FACT_EMBED_HPP
#define KGCHECK_FACT_EMBED_HPP

#include "kgcheck/path_extract.hpp"

namespace kgcheck {

// Triples become nodes; an undirected edge joins two triples sharing at
// least one entity, in any position.
struct LineGraph {
    std::size_t node_count = 0;
    std::vector<std::vector<std::uint32_t>> adjacency;  // sorted, no self loops
};

LineGraph build_line_graph(const ABoxGraph& g);

struct WalkCorpus {
    std::vector<std::vector<std::uint32_t>> walks;
    std::size_t walks_per_node = 0;
    std::size_t walk_length = 0;
};

// walks_per_node uniform-neighbor walks from every node, truncated at dead
// ends. Walk (node, w) draws from its own derived stream, so output does not
// depend on worker count.
WalkCorpus generate_walks(const LineGraph& lg, std::size_t walks_per_node,
                          std::size_t walk_length, std::uint64_t seed, unsigned threads = 1);

struct SkipgramConfig {
    std::size_t dim = 128;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double lr = 0.025;  // linearly decayed to lr/10000 over all epochs
    std::uint64_t seed = 0;
    // 1 = deterministic sequential training; >1 = lock-free parallel walks
    // (fast, non-deterministic).
    unsigned threads = 1;
};

// One (center, target, label) term of the negative sampling objective:
// -label*log(sigmoid(u.v)) - (1-label)*log(1-sigmoid(u.v)). The trainer
// applies exactly these gradients scaled by the step size.
double sgns_pair_loss(const std::vector<double>& u, const std::vector<double>& v, double label,
                      std::vector<double>* grad_u = nullptr,
                      std::vector<double>* grad_v = nullptr);

// Skip-gram with negative sampling over the walk corpus; negatives drawn
// from the unigram^(3/4) node distribution, plain SGD. Returns one vector
// per ABox triple, keyed `s|p|o`. epoch_losses, when given, receives the
// mean pair loss of each epoch.
EmbeddingTable train_skipgram(const WalkCorpus& corpus, const ABoxGraph& g,
                              const StringPool& symbols, const SkipgramConfig& cfg,
                              std::vector<double>* epoch_losses = nullptr);

// Mean of the fact vectors grouped by predicate / by incident entity; used
// to derive component tables when facts were embedded directly.
EmbeddingTable predicate_embeddings_from_facts(const EmbeddingTable& facts, const ABoxGraph& g,
                                               const StringPool& symbols);
EmbeddingTable entity_embeddings_from_facts(const EmbeddingTable& facts, const ABoxGraph& g,
                                            const StringPool& symbols);

// s + p + o concatenated; all three must share one dim.
std::vector<double> compose_fact_embedding(const std::vector<double>& s,
                                           const std::vector<double>& p,
                                           const std::vector<double>& o);

enum class EmbeddingMode : std::uint8_t { Compositional, SkipGram };

const char* embedding_mode_name(EmbeddingMode m);
EmbeddingMode parse_embedding_mode(std::string_view name);

// Total embedding function over triples.
//
// Compositional mode concatenates component vectors and fails loudly on a
// missing component. SkipGram mode returns the trained vector for observed
// facts; an unseen fact gets the mean vector of the training facts sharing
// its subject, predicate or object (each fact counted once), or the global
// mean when nothing is shared. Holds references: the graph, pool and tables
// must outlive the embedder.
class FactEmbedder {
public:
    static FactEmbedder compositional(const EmbeddingTable& components, const StringPool& symbols);
    static FactEmbedder skip_gram(const EmbeddingTable& facts, const ABoxGraph& g,
                                  const StringPool& symbols);

    EmbeddingMode mode() const { return mode_; }
    std::size_t fact_dim() const { return fact_dim_; }
    std::vector<double> embed(const Triple& t) const;

private:
    FactEmbedder() = default;

    EmbeddingMode mode_ = EmbeddingMode::Compositional;
    std::size_t fact_dim_ = 0;
    const EmbeddingTable* table_ = nullptr;
    const ABoxGraph* g_ = nullptr;
    const StringPool* symbols_ = nullptr;
    // Fallback accumulators (skip-gram mode): per-role sums over training
    // facts plus the global mean.
    std::unordered_map<EntityId, std::pair<std::vector<double>, std::size_t>> subj_sum_;
    std::unordered_map<EntityId, std::pair<std::vector<double>, std::size_t>> obj_sum_;
    std::unordered_map<PredicateId, std::pair<std::vector<double>, std::size_t>> pred_sum_;
    std::vector<double> global_mean_;

    std::vector<double> fallback(const Triple& t) const;
};

// One vector per step, in path order; a step's orientation does not change
// how its triple is embedded.
std::vector<std::vector<double>> embed_path(const DataPath& path, const FactEmbedder& embedder);

}  // namespace kgcheck

#endif
