#ifndef KGCHECK_BENCHMARK_HPP
#define KGCHECK_BENCHMARK_HPP

#include <optional>

#include "kgcheck/kg.hpp"

namespace kgcheck {

enum class FactOrigin : std::uint8_t { KgPositive, LcwaNegative, External };

struct LabeledFact {
    Triple triple{};
    int label = 0;  // 1 true, 0 false
    FactOrigin origin = FactOrigin::KgPositive;

    friend bool operator==(const LabeledFact&, const LabeledFact&) = default;
};

// Train/test pools for one predicate. Positives are KG facts; negatives are
// corrupted copies that never occur in the KG.
struct PredicateBenchmark {
    PredicateId predicate = kNoSym;
    std::vector<LabeledFact> train_pos, train_neg, test_pos, test_neg;
};

struct BenchmarkSet {
    std::vector<PredicateBenchmark> per_predicate;  // predicate name order
    std::size_t neg_ratio = 2;
    double train_fraction = 0.5;
    std::uint64_t seed = 0;
    std::uint64_t kg_fingerprint = 0;
};

// Seeded uniform sample without replacement of the graph's p-facts, size
// min(n, count), returned in canonical triple order with label 1.
std::vector<LabeledFact> generate_positives(const ABoxGraph& g, const StringPool& symbols,
                                            PredicateId p, std::size_t n, std::uint64_t seed);

// Corrupts one side of each positive, chosen uniformly per draw. The
// replacement must occur in the same role of some p-fact and share a type
// with the replaced entity; entities typed only Thing (or untyped) match any
// type. The corrupted triple must be absent from the graph and is never
// emitted twice. Aims for `ratio` negatives per positive; a positive whose
// candidate pool runs dry contributes fewer (noted on stderr).
std::vector<LabeledFact> generate_lcwa_negatives(const ABoxGraph& g, const StringPool& symbols,
                                                 PredicateId p,
                                                 const std::vector<LabeledFact>& positives,
                                                 std::size_t ratio, std::uint64_t seed);

// Stratified seeded split into floor(n*fraction) training facts per label
// plus the complement. A side that would come out empty is an error.
PredicateBenchmark split_benchmark(PredicateId p, const std::vector<LabeledFact>& positives,
                                   const std::vector<LabeledFact>& negatives,
                                   double train_fraction, std::uint64_t seed);

// Read-only adjacency view hiding the given triples; both referents must
// outlive the view.
inline GraphView leave_out_view(const ABoxGraph& g, const TripleSet& facts) {
    return {g, facts};
}

// Materialized copy of g without the excluded triples; type assertions are
// kept. Used where a real graph is required (embedding training).
ABoxGraph masked_copy(const ABoxGraph& g, const TripleSet& excluded, const StringPool& symbols);

struct BenchmarkConfig {
    std::size_t max_per_predicate = 200;
    std::size_t neg_ratio = 2;
    double train_fraction = 0.5;
    std::uint64_t seed = 0;
    // Predicates with fewer sampled positives are skipped.
    std::size_t min_positives = 4;
    unsigned threads = 1;
};

// Samples positives proportionally to predicate frequency (everything up to
// the cap), generates negatives and splits, one bundle per usable predicate.
// Predicates that cannot fill both split sides are skipped with a note.
BenchmarkSet build_benchmark(const ABoxGraph& g, const StringPool& symbols,
                             const std::vector<PredicateId>& predicates,
                             const BenchmarkConfig& cfg);

// Every label-1 triple, both splits: the set masked from the graph during
// evaluation.
TripleSet benchmark_positives(const BenchmarkSet& b);

// Facts and labels of one split, optionally restricted to one predicate.
void collect_split(const BenchmarkSet& b, bool train, std::optional<PredicateId> only,
                   std::vector<Triple>& facts, std::vector<double>& labels);

// `<split>\t<label>\t<s>\t<p>\t<o>` rows under a manifest comment carrying
// seed, ratio, fraction and the source KG fingerprint.
std::string benchmark_to_string(const BenchmarkSet& b, const StringPool& symbols);
void save_benchmark(const BenchmarkSet& b, const StringPool& symbols, const std::string& path);
BenchmarkSet load_benchmark(const std::string& path, StringPool& symbols);

// `<s>\t<p>\t<o>\t<label>` rows from an externally produced corpus.
std::vector<LabeledFact> load_external_facts(const std::string& path, StringPool& symbols);

// Splits an external corpus per predicate; predicates lacking a label are
// skipped with a note.
BenchmarkSet benchmark_from_external(const std::vector<LabeledFact>& facts, double train_fraction,
                                     std::uint64_t seed, const StringPool& symbols);

}  // namespace kgcheck

#endif
