#ifndef KGCHECK_RELATEDNESS_HPP
#define KGCHECK_RELATEDNESS_HPP

#include <set>

#include "kgcheck/kg.hpp"

namespace kgcheck {

// Vectors keyed by name: predicate/entity names or `s|p|o` fact keys.
// File form: header `dim=<d>`, then `<key>\t<v1> <v2> ... <vd>`.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::vector<std::vector<double>> vectors;
    std::unordered_map<std::string, std::size_t> index;

    std::size_t add(const std::string& key, std::vector<double> v);
    const std::vector<double>* find(const std::string& key) const;
    std::size_t size() const { return vectors.size(); }
    // Keys in insertion order.
    std::vector<std::string> keys;
};

std::string fact_key(const Triple& t, const StringPool& symbols);

EmbeddingTable load_embedding_table(const std::string& path);
void save_embedding_table(const EmbeddingTable& table, const std::string& path);

// a.b / (|a||b|); zero when either vector has zero norm.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Symmetric predicate-pair cosine scores (dense, indexed by rank of the
// predicate handle). Persisted as `<p_i>\t<p_j>\t<score>` upper-triangle TSV.
class RelatednessMatrix {
public:
    RelatednessMatrix() = default;
    explicit RelatednessMatrix(std::vector<PredicateId> preds);

    bool contains(PredicateId p) const { return index_.count(p) != 0; }
    std::size_t size() const { return preds_.size(); }
    const std::vector<PredicateId>& predicates() const { return preds_; }

    double score(PredicateId a, PredicateId b) const;
    void set_score(PredicateId a, PredicateId b, double v);

    std::uint64_t content_hash(const StringPool& symbols) const;

private:
    std::vector<PredicateId> preds_;  // sorted
    std::unordered_map<PredicateId, std::size_t> index_;
    std::vector<double> scores_;  // n*n, symmetric

    std::size_t at(PredicateId p) const;
};

// Full pairwise cosine matrix; predicates without a vector get the zero
// vector (score 0 against everything) and a warning on stderr.
RelatednessMatrix build_relatedness_matrix(const EmbeddingTable& emb,
                                           const std::set<PredicateId>& preds,
                                           const StringPool& symbols, unsigned threads = 1);

RelatednessMatrix load_relatedness_matrix(const std::string& path, StringPool& symbols);
void save_relatedness_matrix(const RelatednessMatrix& m, const StringPool& symbols,
                             const std::string& path);

// The k predicates most related to p; p itself always first, ties broken by
// ascending handle. Returns fewer than k when the matrix is smaller.
std::vector<PredicateId> top_k_predicates(const RelatednessMatrix& m, PredicateId p, std::size_t k);

// Mean Rel(p, q) over the pattern's predicates, with multiplicity.
double path_relatedness(PredicateId p, const std::vector<PredicateId>& pattern_predicates,
                        const RelatednessMatrix& m);

}  // namespace kgcheck

#endif
