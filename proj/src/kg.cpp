#include "kgcheck/kg.hpp"

#include <algorithm>
#include <sstream>

namespace kgcheck {

namespace {

const ABoxGraph::Adjacency kEmptyAdjacency;
const std::vector<ClassId> kNoTypes;

bool is_type_predicate(std::string_view name) {
    return name == "rdf:type" || name == "type" ||
           name == "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
}

std::optional<AxiomKind> schema_predicate(std::string_view name) {
    if (auto k = parse_axiom_kind(name)) return k;
    if (name.starts_with("rdfs:")) return parse_axiom_kind(name.substr(5));
    constexpr std::string_view rdfs = "http://www.w3.org/2000/01/rdf-schema#";
    if (name.starts_with(rdfs)) return parse_axiom_kind(name.substr(rdfs.size()));
    return std::nullopt;
}

// Strips angle brackets from IRIs; literals stay verbatim (opaque entities).
std::string_view nt_token(std::string_view tok) {
    if (tok.size() >= 2 && tok.front() == '<' && tok.back() == '>')
        return tok.substr(1, tok.size() - 2);
    return tok;
}

struct RawTriple {
    std::string_view s, p, o;
};

std::optional<RawTriple> parse_record(const std::string& line, TripleFormat format,
                                      const std::string& origin, std::size_t lineno) {
    if (line.empty() || line[0] == '#') return std::nullopt;
    if (format == TripleFormat::Tsv) {
        auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw ParseError(origin, lineno,
                             "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
        if (fields[0].empty() || fields[1].empty() || fields[2].empty())
            throw ParseError(origin, lineno, "empty field");
        return RawTriple{fields[0], fields[1], fields[2]};
    }
    // N-Triples subset: <s> <p> <o_or_literal> .
    auto tokens = split_ws(line);
    if (!tokens.empty() && tokens.back() == ".") tokens.pop_back();
    if (tokens.empty()) return std::nullopt;
    if (tokens.size() < 3) throw ParseError(origin, lineno, "truncated N-Triples statement");
    // Literal objects may contain spaces; rejoin everything past the predicate.
    std::string_view s = tokens[0], p = tokens[1];
    std::size_t obj_begin = static_cast<std::size_t>(tokens[2].data() - line.data());
    std::string_view o(line);
    o = o.substr(obj_begin);
    while (!o.empty() && (o.back() == ' ' || o.back() == '\t')) o.remove_suffix(1);
    if (!o.empty() && o.back() == '.') o.remove_suffix(1);
    while (!o.empty() && (o.back() == ' ' || o.back() == '\t')) o.remove_suffix(1);
    if (s.empty() || p.empty() || o.empty()) throw ParseError(origin, lineno, "empty term");
    return RawTriple{nt_token(s), nt_token(p), nt_token(o)};
}

}  // namespace

void ABoxGraph::add_triple(EntityId s, PredicateId p, EntityId o) {
    Triple t{s, p, o};
    if (triples_.insert(t).second) ordered_.push_back(t);
}

void ABoxGraph::set_type(EntityId v, ClassId c) {
    if (types_.size() <= v) types_.resize(v + 1);
    types_[v].push_back(c);
}

void ABoxGraph::finalize(const StringPool& symbols) {
    Sym max_sym = static_cast<Sym>(symbols.size());
    out_.assign(max_sym, {});
    in_.assign(max_sym, {});
    if (types_.size() < max_sym) types_.resize(max_sym);

    std::set<EntityId> ents;
    std::set<PredicateId> preds;
    for (const Triple& t : ordered_) {
        out_[t.s].emplace_back(t.p, t.o);
        in_[t.o].emplace_back(t.p, t.s);
        ents.insert(t.s);
        ents.insert(t.o);
        preds.insert(t.p);
    }
    for (auto& adj : out_) std::sort(adj.begin(), adj.end());
    for (auto& adj : in_) std::sort(adj.begin(), adj.end());
    for (auto& tv : types_) {
        std::sort(tv.begin(), tv.end());
        tv.erase(std::unique(tv.begin(), tv.end()), tv.end());
    }
    entity_list_.assign(ents.begin(), ents.end());
    predicate_list_.assign(preds.begin(), preds.end());
}

const ABoxGraph::Adjacency& ABoxGraph::out_edges(EntityId v) const {
    return v < out_.size() ? out_[v] : kEmptyAdjacency;
}

const ABoxGraph::Adjacency& ABoxGraph::in_edges(EntityId v) const {
    return v < in_.size() ? in_[v] : kEmptyAdjacency;
}

const std::vector<ClassId>& ABoxGraph::types_of(EntityId v) const {
    return v < types_.size() ? types_[v] : kNoTypes;
}

const char* axiom_kind_name(AxiomKind k) {
    switch (k) {
        case AxiomKind::SubClassOf: return "subClassOf";
        case AxiomKind::SubPropertyOf: return "subPropertyOf";
        case AxiomKind::Domain: return "domain";
        case AxiomKind::Range: return "range";
    }
    return "?";
}

std::optional<AxiomKind> parse_axiom_kind(std::string_view name) {
    if (name == "subClassOf") return AxiomKind::SubClassOf;
    if (name == "subPropertyOf") return AxiomKind::SubPropertyOf;
    if (name == "domain") return AxiomKind::Domain;
    if (name == "range") return AxiomKind::Range;
    return std::nullopt;
}

void TBoxSpec::validate(const StringPool& symbols) const {
    for (ClassId c : classes) {
        if (properties.count(c))
            throw UserError("schema uses '" + symbols.name(c) + "' as both class and property");
    }
    for (const Axiom& a : axioms) {
        switch (a.kind) {
            case AxiomKind::SubClassOf:
                if (!classes.count(a.u) || !classes.count(a.v))
                    throw UserError("subClassOf axiom over non-class symbols");
                break;
            case AxiomKind::SubPropertyOf:
                if (!properties.count(a.u) || !properties.count(a.v))
                    throw UserError("subPropertyOf axiom over non-property symbols");
                break;
            case AxiomKind::Domain:
            case AxiomKind::Range:
                if (!properties.count(a.u) || !classes.count(a.v))
                    throw UserError(std::string(axiom_kind_name(a.kind)) +
                                    " axiom must relate a property to a class");
                break;
        }
    }
}

namespace {

// Reachability over one axiom kind; cycles make nodes mutually reachable.
template <typename SymSet>
std::map<Sym, std::set<Sym>> transitive_reach(const SymSet& nodes, const std::set<Axiom>& axioms,
                                              AxiomKind kind) {
    std::map<Sym, std::vector<Sym>> direct;
    for (const Axiom& a : axioms)
        if (a.kind == kind) direct[a.u].push_back(a.v);
    std::map<Sym, std::set<Sym>> reach;
    for (Sym start : nodes) {
        std::set<Sym>& out = reach[start];
        std::vector<Sym> stack;
        auto it = direct.find(start);
        if (it != direct.end()) stack = it->second;
        while (!stack.empty()) {
            Sym v = stack.back();
            stack.pop_back();
            if (!out.insert(v).second) continue;
            auto jt = direct.find(v);
            if (jt != direct.end())
                for (Sym w : jt->second) stack.push_back(w);
        }
    }
    return reach;
}

}  // namespace

TBoxSpec rdfs_closure(const TBoxSpec& spec) {
    TBoxSpec out = spec;
    out.superclasses_ = transitive_reach(spec.classes, spec.axioms, AxiomKind::SubClassOf);
    out.superprops_ = transitive_reach(spec.properties, spec.axioms, AxiomKind::SubPropertyOf);

    for (const auto& [c, supers] : out.superclasses_)
        for (ClassId d : supers) out.axioms.insert({c, AxiomKind::SubClassOf, d});
    for (const auto& [p, supers] : out.superprops_)
        for (PredicateId q : supers) out.axioms.insert({p, AxiomKind::SubPropertyOf, q});

    for (const Axiom& a : spec.axioms) {
        if (a.kind == AxiomKind::Domain) out.domains_[a.u].insert(a.v);
        if (a.kind == AxiomKind::Range) out.ranges_[a.u].insert(a.v);
    }
    // Sub-properties inherit domains and ranges of their super-properties.
    for (PredicateId q : out.properties) {
        auto it = out.superprops_.find(q);
        if (it == out.superprops_.end()) continue;
        for (PredicateId p : it->second) {
            if (auto d = out.domains_.find(p); d != out.domains_.end())
                out.domains_[q].insert(d->second.begin(), d->second.end());
            if (auto r = out.ranges_.find(p); r != out.ranges_.end())
                out.ranges_[q].insert(r->second.begin(), r->second.end());
        }
    }
    for (const auto& [p, ds] : out.domains_)
        for (ClassId c : ds) out.axioms.insert({p, AxiomKind::Domain, c});
    for (const auto& [p, rs] : out.ranges_)
        for (ClassId c : rs) out.axioms.insert({p, AxiomKind::Range, c});

    out.closed_ = true;
    return out;
}

std::set<ClassId> TBoxSpec::domains_of(PredicateId p) const {
    if (!closed_) throw std::logic_error("domains_of requires a closed TBox");
    if (!properties.count(p)) throw UserError("unknown predicate in TBox lookup");
    auto it = domains_.find(p);
    if (it == domains_.end() || it->second.empty()) return {thing};
    return it->second;
}

std::set<ClassId> TBoxSpec::ranges_of(PredicateId p) const {
    if (!closed_) throw std::logic_error("ranges_of requires a closed TBox");
    if (!properties.count(p)) throw UserError("unknown predicate in TBox lookup");
    auto it = ranges_.find(p);
    if (it == ranges_.end() || it->second.empty()) return {thing};
    return it->second;
}

bool TBoxSpec::is_subclass_of(ClassId c, ClassId d) const {
    if (c == d || d == thing) return true;
    auto it = superclasses_.find(c);
    return it != superclasses_.end() && it->second.count(d) != 0;
}

std::set<ClassId> TBoxSpec::subclass_down_closure(ClassId c) const {
    std::set<ClassId> down{c};
    if (c == thing) {
        down.insert(classes.begin(), classes.end());
        return down;
    }
    for (const auto& [sub, supers] : superclasses_)
        if (supers.count(c)) down.insert(sub);
    return down;
}

TBoxGraph build_tbox_graph(const TBoxSpec& closed_spec, StringPool& symbols) {
    if (!closed_spec.closed()) throw std::logic_error("build_tbox_graph requires a closed TBox");
    TBoxGraph g;
    g.spec = closed_spec;
    g.thing = symbols.intern(kThingName);
    g.subclassof_pred = symbols.intern(kSubClassOfName);
    g.spec.thing = g.thing;

    g.nodes = closed_spec.classes;
    g.nodes.insert(g.thing);

    std::set<TBoxEdge> edges;
    for (PredicateId p : closed_spec.properties) {
        for (ClassId d : g.spec.domains_of(p))
            for (ClassId r : g.spec.ranges_of(p)) edges.insert({d, p, r});
    }
    for (const Axiom& a : closed_spec.axioms)
        if (a.kind == AxiomKind::SubClassOf) edges.insert({a.u, g.subclassof_pred, a.v});

    for (const TBoxEdge& e : edges) {
        g.nodes.insert(e.from);
        g.nodes.insert(e.to);
        g.edges.push_back(e);
        g.out_adj[e.from].emplace_back(e.pred, e.to);
        g.in_adj[e.to].emplace_back(e.pred, e.from);
        if (e.pred != g.subclassof_pred) g.property_edges.push_back(e);
    }
    for (auto& [_, adj] : g.out_adj) std::sort(adj.begin(), adj.end());
    for (auto& [_, adj] : g.in_adj) std::sort(adj.begin(), adj.end());
    return g;
}

ABoxGraph parse_triples(const std::vector<std::string>& lines, TripleFormat format,
                        StringPool& symbols, const std::string& origin) {
    ABoxGraph g;
    std::size_t lineno = 0;
    for (const std::string& line : lines) {
        ++lineno;
        auto rec = parse_record(line, format, origin, lineno);
        if (!rec) continue;
        EntityId s = symbols.intern(rec->s);
        PredicateId p = symbols.intern(rec->p);
        EntityId o = symbols.intern(rec->o);
        g.add_triple(s, p, o);
        if (is_type_predicate(rec->p)) g.set_type(s, o);
    }
    g.finalize(symbols);
    return g;
}

ABoxGraph load_triples(const std::string& path, TripleFormat format, StringPool& symbols) {
    return parse_triples(read_lines(path), format, symbols, path);
}

TBoxSpec parse_schema(const std::vector<std::string>& lines, TripleFormat format,
                      StringPool& symbols, const std::string& origin) {
    TBoxSpec t;
    t.thing = symbols.intern(kThingName);
    t.classes.insert(t.thing);
    std::size_t lineno = 0;
    for (const std::string& line : lines) {
        ++lineno;
        auto rec = parse_record(line, format, origin, lineno);
        if (!rec) continue;
        auto kind = schema_predicate(rec->p);
        if (!kind)
            throw ParseError(origin, lineno,
                             "schema predicate must be one of subClassOf/subPropertyOf/domain/range, got '" +
                                 std::string(rec->p) + "'");
        Sym u = symbols.intern(rec->s);
        Sym v = symbols.intern(rec->o);
        switch (*kind) {
            case AxiomKind::SubClassOf:
                t.classes.insert(u);
                t.classes.insert(v);
                break;
            case AxiomKind::SubPropertyOf:
                t.properties.insert(u);
                t.properties.insert(v);
                break;
            case AxiomKind::Domain:
            case AxiomKind::Range:
                t.properties.insert(u);
                t.classes.insert(v);
                break;
        }
        t.axioms.insert({u, *kind, v});
    }
    t.validate(symbols);
    return t;
}

TBoxSpec load_schema(const std::string& path, TripleFormat format, StringPool& symbols) {
    return parse_schema(read_lines(path), format, symbols, path);
}

std::string export_triples(const ABoxGraph& g, const StringPool& symbols) {
    std::vector<std::string> lines;
    lines.reserve(g.triple_count());
    for (const Triple& t : g.triples())
        lines.push_back(symbols.name(t.s) + "\t" + symbols.name(t.p) + "\t" + symbols.name(t.o));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const std::string& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::string export_schema(const TBoxSpec& t, const StringPool& symbols) {
    std::vector<std::string> lines;
    for (const Axiom& a : t.axioms)
        lines.push_back(symbols.name(a.u) + "\t" + axiom_kind_name(a.kind) + "\t" + symbols.name(a.v));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const std::string& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::uint64_t kg_hash(const ABoxGraph& g, const StringPool& symbols) {
    return fnv1a64(export_triples(g, symbols));
}

}  // namespace kgcheck
