#ifndef KGCHECK_PATH_EXTRACT_HPP
#define KGCHECK_PATH_EXTRACT_HPP

#include "kgcheck/schema_patterns.hpp"

namespace kgcheck {

// A fact traversed in a given orientation; Backward means o -> s.
struct OrientedFact {
    Triple triple;
    Direction direction;

    EntityId entry() const { return direction == Direction::Forward ? triple.s : triple.o; }
    EntityId exit() const { return direction == Direction::Forward ? triple.o : triple.s; }

    friend bool operator==(const OrientedFact&, const OrientedFact&) = default;
    friend auto operator<=>(const OrientedFact&, const OrientedFact&) = default;
};

// Chain of oriented facts from the checked subject to the checked object.
// pattern_index / pattern_score identify the schema pattern that produced the
// path; fallback paths carry index -1 and score 0.
struct DataPath {
    std::vector<OrientedFact> steps;
    double pattern_score = 0.0;
    std::int32_t pattern_index = -1;

    std::size_t length() const { return steps.size(); }
    EntityId entry() const { return steps.front().entry(); }
    EntityId exit() const { return steps.back().exit(); }
};

// Paths bucketed by length; by_length[l] holds the length-l paths, slot 0 is
// always empty.
struct PathSet {
    std::size_t l_max = 0;
    std::vector<std::vector<DataPath>> by_length;

    explicit PathSet(std::size_t l_max_ = 0) : l_max(l_max_), by_length(l_max_ + 1) {}
    bool empty() const;
    std::size_t total_paths() const;
};

struct PathExtractConfig {
    std::size_t l_max = 4;
    std::size_t max_paths_per_length = 150;
    std::uint64_t seed = 0;
    // Pattern DFS stops collecting beyond this; a guard against pathological
    // graphs, far above the subsample cap so it never binds on realistic
    // inputs. The unconstrained walk needs no guard (reservoir sampling).
    std::size_t per_pattern_cap = 3000;
    unsigned threads = 1;
    // When set, the unconstrained walk may only traverse these predicates
    // (used on schema-less graphs with the top-k related predicates).
    std::optional<std::set<PredicateId>> allowed_predicates;
};

// Entity/class admission used at every pattern step: untyped entities and
// entities typed only Thing pass everything; otherwise some type must be a
// subclass of `to_class` under the closed relation.
bool entity_type_ok(const GraphView& g, const TBoxSpec& spec, EntityId v, ClassId to_class);

// All simple paths s..o whose step i traverses pattern.steps[i].predicate in
// the step's direction onto an entity passing entity_type_ok. Exhaustive up
// to max_paths, in deterministic traversal order.
std::vector<DataPath> extract_paths_for_pattern(const GraphView& g, EntityId s, EntityId o,
                                                const SchemaPattern& pattern, const TBoxSpec& spec,
                                                std::size_t max_paths = SIZE_MAX);

// Pools compliant paths over the ranked patterns into length buckets,
// deduplicates, and keeps a seeded uniform subsample of any bucket above
// max_paths_per_length. The checked fact's own edge is masked from the graph
// during the search. When every bucket ends up empty the unconstrained walk
// runs instead.
PathSet extract_paths(const GraphView& g, const Triple& fact,
                      const std::vector<SchemaPattern>& patterns, const TBoxSpec& spec,
                      const PathExtractConfig& cfg);

// Type- and pattern-free simple-path enumeration, optionally restricted to
// cfg.allowed_predicates, capped and grouped like extract_paths.
PathSet unconstrained_dfs(const GraphView& g, EntityId s, EntityId o,
                          const PathExtractConfig& cfg);

// `s -[p>]- e1 -[<q]- e2 ...`; '>' marks forward traversal, '<' backward.
std::string path_render(const DataPath& path, const StringPool& symbols);
// `<len>\t<pattern score>\t<rendered path>`.
std::string path_dump_line(const DataPath& path, const StringPool& symbols);
// One dump line per path, buckets in increasing length.
std::string paths_to_string(const PathSet& ps, const StringPool& symbols);

}  // namespace kgcheck

#endif
