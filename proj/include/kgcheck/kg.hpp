#ifndef KGCHECK_KG_HPP
#define KGCHECK_KG_HPP

#include <map>
#include <set>
#include <unordered_set>

#include "kgcheck/common.hpp"

namespace kgcheck {

struct Triple {
    EntityId s;
    PredicateId p;
    EntityId o;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        h = (h ^ t.s) * 0x100000001b3ull;
        h = (h ^ t.p) * 0x100000001b3ull;
        h = (h ^ t.o) * 0x100000001b3ull;
        return static_cast<std::size_t>(h);
    }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// The name given to entities/classes with no domain, range or type annotation.
inline constexpr std::string_view kThingName = "Thing";
inline constexpr std::string_view kSubClassOfName = "subClassOf";

enum class Direction : std::uint8_t { Forward, Backward };

inline char direction_marker(Direction d) { return d == Direction::Forward ? '>' : '<'; }

enum class TripleFormat { Tsv, NTriples };

// Directed labeled multigraph of facts, interned against a shared pool and
// indexed in both directions. Immutable after load; reads are thread-safe.
class ABoxGraph {
public:
    using Adjacency = std::vector<std::pair<PredicateId, EntityId>>;

    void add_triple(EntityId s, PredicateId p, EntityId o);
    void finalize(const StringPool& symbols);  // sorts indexes, freezes

    bool has_triple(const Triple& t) const { return triples_.count(t) != 0; }
    std::size_t triple_count() const { return triples_.size(); }
    const std::vector<Triple>& triples() const { return ordered_; }

    const Adjacency& out_edges(EntityId v) const;
    const Adjacency& in_edges(EntityId v) const;
    // Types recorded via rdf:type; empty means "typed Thing only".
    const std::vector<ClassId>& types_of(EntityId v) const;
    void set_type(EntityId v, ClassId c);

    bool known_entity(EntityId v) const { return v < out_.size(); }
    // One past the largest id the adjacency tables cover.
    Sym entity_ceiling() const { return static_cast<Sym>(out_.size()); }
    const std::vector<EntityId>& entities() const { return entity_list_; }
    const std::vector<PredicateId>& predicates() const { return predicate_list_; }

private:
    TripleSet triples_;
    std::vector<Triple> ordered_;  // insertion order of first appearance
    std::vector<Adjacency> out_;
    std::vector<Adjacency> in_;
    std::vector<std::vector<ClassId>> types_;
    std::vector<EntityId> entity_list_;
    std::vector<PredicateId> predicate_list_;
};

// Read-only overlay that hides a set of triples from every adjacency answer.
// Used to remove checked facts from the evidence pool.
class GraphView {
public:
    GraphView(const ABoxGraph& g) : g_(&g), excluded_(nullptr) {}  // NOLINT: implicit by design
    GraphView(const ABoxGraph& g, const TripleSet& excluded) : g_(&g), excluded_(&excluded) {}

    const ABoxGraph& base() const { return *g_; }
    const TripleSet* excluded() const { return excluded_; }
    bool excludes(const Triple& t) const { return excluded_ && excluded_->count(t); }
    bool has_triple(const Triple& t) const { return !excludes(t) && g_->has_triple(t); }

    template <typename Fn>
    void for_each_out(EntityId v, Fn&& fn) const {
        for (const auto& [p, o] : g_->out_edges(v))
            if (!excludes({v, p, o})) fn(p, o);
    }
    template <typename Fn>
    void for_each_in(EntityId v, Fn&& fn) const {
        for (const auto& [p, s] : g_->in_edges(v))
            if (!excludes({s, p, v})) fn(p, s);
    }
    const std::vector<ClassId>& types_of(EntityId v) const { return g_->types_of(v); }

private:
    const ABoxGraph* g_;
    const TripleSet* excluded_;
};

enum class AxiomKind : std::uint8_t { SubClassOf, SubPropertyOf, Domain, Range };

const char* axiom_kind_name(AxiomKind k);
std::optional<AxiomKind> parse_axiom_kind(std::string_view name);

struct Axiom {
    Sym u;
    AxiomKind kind;
    Sym v;

    friend bool operator==(const Axiom&, const Axiom&) = default;
    friend auto operator<=>(const Axiom&, const Axiom&) = default;
};

// Schema: classes, properties and the four-rule RDFS axiom set. A closed spec
// additionally carries the transitive subClassOf/subPropertyOf relations and
// the propagated domain/range maps.
class TBoxSpec {
public:
    std::set<ClassId> classes;
    std::set<PredicateId> properties;
    std::set<Axiom> axioms;
    ClassId thing = kNoSym;

    bool closed() const { return closed_; }

    // Validates role consistency (a name cannot be both class and property).
    void validate(const StringPool& symbols) const;

    std::set<ClassId> domains_of(PredicateId p) const;
    std::set<ClassId> ranges_of(PredicateId p) const;

    // c <= d under the closed relation; every class is a subclass of Thing.
    bool is_subclass_of(ClassId c, ClassId d) const;
    bool comparable(ClassId c, ClassId d) const { return is_subclass_of(c, d) || is_subclass_of(d, c); }
    // {d : d <= c}. Thing yields all classes.
    std::set<ClassId> subclass_down_closure(ClassId c) const;

    friend TBoxSpec rdfs_closure(const TBoxSpec& spec);
    friend bool operator==(const TBoxSpec& a, const TBoxSpec& b) {
        return a.classes == b.classes && a.properties == b.properties && a.axioms == b.axioms;
    }

private:
    bool closed_ = false;
    std::map<ClassId, std::set<ClassId>> superclasses_;       // transitive, non-reflexive
    std::map<PredicateId, std::set<PredicateId>> superprops_;
    std::map<PredicateId, std::set<ClassId>> domains_;
    std::map<PredicateId, std::set<ClassId>> ranges_;
};

// Transitive closure of subClassOf/subPropertyOf plus domain/range propagation
// up the subPropertyOf hierarchy. Idempotent; cycles collapse to mutual
// reachability.
TBoxSpec rdfs_closure(const TBoxSpec& spec);

struct TBoxEdge {
    ClassId from;
    PredicateId pred;
    ClassId to;

    friend bool operator==(const TBoxEdge&, const TBoxEdge&) = default;
    friend auto operator<=>(const TBoxEdge&, const TBoxEdge&) = default;
};

// Schema graph: class nodes, one property edge per (domain, range) pair,
// subClassOf axioms as edges. Always contains Thing.
struct TBoxGraph {
    std::set<ClassId> nodes;
    std::vector<TBoxEdge> edges;  // sorted, deduplicated; includes subClassOf edges
    PredicateId subclassof_pred = kNoSym;
    ClassId thing = kNoSym;
    TBoxSpec spec;  // the closed spec the graph was built from

    std::map<ClassId, std::vector<std::pair<PredicateId, ClassId>>> out_adj;
    std::map<ClassId, std::vector<std::pair<PredicateId, ClassId>>> in_adj;
    // Property edges only (no subClassOf), for the pattern search.
    std::vector<TBoxEdge> property_edges;
};

TBoxGraph build_tbox_graph(const TBoxSpec& closed_spec, StringPool& symbols);

// Loaders. TSV lines are `s \t p \t o`; `#` starts a comment line. The
// N-Triples reader handles the `<iri>` / plain-literal subset.
ABoxGraph load_triples(const std::string& path, TripleFormat format, StringPool& symbols);
TBoxSpec load_schema(const std::string& path, TripleFormat format, StringPool& symbols);

ABoxGraph parse_triples(const std::vector<std::string>& lines, TripleFormat format,
                        StringPool& symbols, const std::string& origin);
TBoxSpec parse_schema(const std::vector<std::string>& lines, TripleFormat format,
                      StringPool& symbols, const std::string& origin);

// Sorted canonical TSV; loading the result reproduces the graph exactly.
std::string export_triples(const ABoxGraph& g, const StringPool& symbols);
std::string export_schema(const TBoxSpec& t, const StringPool& symbols);

// Content hash over the canonical export, for manifests and cache keys.
std::uint64_t kg_hash(const ABoxGraph& g, const StringPool& symbols);

}  // namespace kgcheck

#endif
