#ifndef KGCHECK_SCHEMA_PATTERNS_HPP
#define KGCHECK_SCHEMA_PATTERNS_HPP

#include "kgcheck/relatedness.hpp"

namespace kgcheck {

// One oriented property step at the schema level. Backward means the edge is
// traversed range-to-domain. subClassOf hops never appear as steps; they are
// folded into class compatibility between consecutive steps.
struct PatternStep {
    Direction direction;
    PredicateId predicate;
    ClassId to_class;

    friend bool operator==(const PatternStep&, const PatternStep&) = default;
    friend auto operator<=>(const PatternStep&, const PatternStep&) = default;
};

struct SchemaPattern {
    ClassId start_class = kNoSym;
    std::vector<PatternStep> steps;  // non-empty, |steps| <= d
    double relatedness = 0.0;

    std::size_t length() const { return steps.size(); }
    // Step predicates with multiplicity, in order.
    std::vector<PredicateId> predicates() const;

    friend bool operator==(const SchemaPattern& a, const SchemaPattern& b) {
        return a.start_class == b.start_class && a.steps == b.steps;
    }
};

// `<start_class>\t(<dir>,<pred>,<class>)...` with dir '>' or '<'. Also the
// lexicographic tie-break key for equal scores.
std::string pattern_body(const SchemaPattern& sp, const StringPool& symbols);

// Bounded max-queue: keeps the best `cap` patterns by (relatedness desc,
// length asc, body asc). Re-pushing an identical pattern is a no-op.
class PatternQueue {
public:
    PatternQueue(std::size_t cap, const StringPool& symbols);

    void push(SchemaPattern sp);
    std::size_t size() const { return entries_.size(); }
    // Best-first; the queue is empty afterwards.
    std::vector<SchemaPattern> drain();

private:
    struct Entry {
        double score;
        std::size_t len;
        std::string body;
        SchemaPattern pattern;
    };
    struct Before {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.score != b.score) return a.score > b.score;
            if (a.len != b.len) return a.len < b.len;
            return a.body < b.body;
        }
    };

    std::size_t cap_;
    const StringPool* symbols_;
    std::set<Entry, Before> entries_;
};

// True iff the pattern's terminal class is one of `ranges` or a subclass of
// one under the closed subClassOf relation.
bool check_range(const SchemaPattern& sp, const std::set<ClassId>& ranges, const TBoxSpec& spec);

// Relatedness-pruned traversal of the schema graph. Seeds length-1 patterns
// from every property edge of the top-k related predicates, in both
// orientations, keeping those whose start class is subClassOf-comparable with
// a domain of p. Longer patterns chain further edges whose near endpoint is
// comparable with the current end class, never reusing an (edge, orientation)
// pair. A pattern is emitted when its terminal passes check_range against the
// ranges of p. Returns at most `cap` patterns, best score first.
std::vector<SchemaPattern> extract_schema_patterns(PredicateId p, std::size_t k, std::size_t d,
                                                   const TBoxGraph& gs, const RelatednessMatrix& m,
                                                   const StringPool& symbols, std::size_t cap = 50,
                                                   unsigned threads = 1);

// Cache identity for a mined pattern list. Files carry it as a comment so a
// stale cache (different k, d or relatedness matrix) is detectable.
struct PatternCacheKey {
    std::string predicate;
    std::size_t k = 0;
    std::size_t d = 0;
    std::uint64_t matrix_hash = 0;

    std::string comment() const;
    std::string filename() const;

    friend bool operator==(const PatternCacheKey&, const PatternCacheKey&) = default;
};

std::optional<PatternCacheKey> parse_cache_key(std::string_view comment_line);

// One pattern per line: `<score>\t<start_class>\t(<dir>,<pred>,<class>)...`,
// score-descending. Class, predicate and entity names must not contain tabs,
// parentheses or commas.
std::string patterns_to_string(const std::vector<SchemaPattern>& patterns,
                               const StringPool& symbols, const PatternCacheKey* key = nullptr);
void save_pattern_cache(const std::string& path, const std::vector<SchemaPattern>& patterns,
                        const StringPool& symbols, const PatternCacheKey* key = nullptr);
std::vector<SchemaPattern> parse_patterns(const std::vector<std::string>& lines,
                                          StringPool& symbols, const std::string& origin,
                                          PatternCacheKey* key_out = nullptr);
std::vector<SchemaPattern> load_pattern_cache(const std::string& path, StringPool& symbols,
                                              PatternCacheKey* key_out = nullptr);

}  // namespace kgcheck

#endif
