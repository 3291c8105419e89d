#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"

using namespace kgcheck;
using kgcheck::testing::ClosureOracle;
using kgcheck::testing::FilmFixture;
using kgcheck::testing::random_spec;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("triple loading dedups and indexes both directions") {
    StringPool symbols;
    ABoxGraph g = parse_triples({"Dune\tstarring\tJ_Nance", "Eraserhead\tdirector\tD_Lynch",
                                 "Dune\tstarring\tJ_Nance"},
                                TripleFormat::Tsv, symbols, "test");
    CHECK(g.triple_count() == 2);
    CHECK(g.entities().size() == 4);
    CHECK(g.predicates().size() == 2);

    Sym dune = *symbols.lookup("Dune");
    Sym starring = *symbols.lookup("starring");
    Sym nance = *symbols.lookup("J_Nance");
    REQUIRE(g.out_edges(dune).size() == 1);
    CHECK(g.out_edges(dune)[0] == std::pair<PredicateId, EntityId>{starring, nance});
    REQUIRE(g.in_edges(nance).size() == 1);
    CHECK(g.in_edges(nance)[0] == std::pair<PredicateId, EntityId>{starring, dune});
}

TEST_CASE("malformed lines report the line number") {
    StringPool symbols;
    CHECK_THROWS_WITH_AS(
        parse_triples({"a\tb\tc", "only_two\tfields"}, TripleFormat::Tsv, symbols, "bad.tsv"),
        doctest::Contains("bad.tsv:2"), ParseError);
}

TEST_CASE("out/in indexes mirror each other on a random graph") {
    Rng rng(7);
    StringPool symbols;
    TBoxSpec spec = rdfs_closure(random_spec(rng, symbols, 4, 4, 8));
    ABoxGraph g = kgcheck::testing::random_typed_graph(rng, symbols, spec, 30, 120);

    std::size_t out_total = 0, in_total = 0;
    for (EntityId e : g.entities()) {
        out_total += g.out_edges(e).size();
        in_total += g.in_edges(e).size();
        for (const auto& [p, o] : g.out_edges(e)) CHECK(g.has_triple({e, p, o}));
    }
    CHECK(out_total == g.triple_count());
    CHECK(in_total == g.triple_count());
}

TEST_CASE("rdfs closure matches the single-rule fixpoint oracle") {
    Rng rng(11);
    for (int round = 0; round < 30; ++round) {
        StringPool symbols;
        TBoxSpec open = random_spec(rng, symbols, 6, 5, 50);
        TBoxSpec closed = rdfs_closure(open);
        ClosureOracle oracle(open);

        std::vector<Sym> cls(open.classes.begin(), open.classes.end());
        cls.push_back(closed.thing);
        for (Sym c : cls)
            for (Sym d : cls)
                CHECK(closed.is_subclass_of(c, d) == oracle.is_subclass(c, d, closed.thing));
        for (Sym p : open.properties) {
            CHECK(closed.domains_of(p) == oracle.domains_of(p, closed.thing));
            CHECK(closed.ranges_of(p) == oracle.ranges_of(p, closed.thing));
        }
    }
}

TEST_CASE("closure is idempotent") {
    Rng rng(13);
    StringPool symbols;
    TBoxSpec open = random_spec(rng, symbols, 8, 6, 40);
    TBoxSpec once = rdfs_closure(open);
    TBoxSpec twice = rdfs_closure(once);
    CHECK(once == twice);
    for (Sym p : open.properties) {
        CHECK(once.domains_of(p) == twice.domains_of(p));
        CHECK(once.ranges_of(p) == twice.ranges_of(p));
    }
}

TEST_CASE("subclass cycles collapse to mutual reachability") {
    StringPool symbols;
    Sym a = symbols.intern("A"), b = symbols.intern("B");
    TBoxSpec spec;
    spec.classes = {a, b};
    spec.axioms = {{a, AxiomKind::SubClassOf, b}, {b, AxiomKind::SubClassOf, a}};
    TBoxSpec closed = rdfs_closure(spec);
    CHECK(closed.is_subclass_of(a, b));
    CHECK(closed.is_subclass_of(b, a));
}

TEST_CASE("a name declared as both class and property fails validation") {
    StringPool symbols;
    Sym x = symbols.intern("X");
    TBoxSpec spec;
    spec.classes = {x};
    spec.properties = {x};
    CHECK_THROWS_AS(spec.validate(symbols), UserError);
}

TEST_CASE("tbox graph has one edge per domain-range pair") {
    FilmFixture f;
    // director: Film x Person
    std::size_t director_edges = 0;
    for (const TBoxEdge& e : f.tbox.property_edges)
        if (e.pred == f.director) {
            ++director_edges;
            CHECK(e.from == f.film);
            CHECK(e.to == f.person);
        }
    CHECK(director_edges == 1);

    StringPool symbols;
    Sym q = symbols.intern("q");
    Sym c1 = symbols.intern("c1"), c2 = symbols.intern("c2");
    Sym r1 = symbols.intern("r1"), r2 = symbols.intern("r2");
    TBoxSpec spec;
    spec.classes = {c1, c2, r1, r2};
    spec.properties = {q, symbols.intern("bare")};
    spec.axioms = {{q, AxiomKind::Domain, c1},
                   {q, AxiomKind::Domain, c2},
                   {q, AxiomKind::Range, r1},
                   {q, AxiomKind::Range, r2}};
    TBoxGraph gs = build_tbox_graph(rdfs_closure(spec), symbols);
    std::size_t q_edges = 0, bare_edges = 0;
    for (const TBoxEdge& e : gs.property_edges) {
        if (e.pred == q) ++q_edges;
        if (e.pred == *symbols.lookup("bare")) {
            ++bare_edges;
            CHECK(e.from == gs.thing);
            CHECK(e.to == gs.thing);
        }
    }
    CHECK(q_edges == 4);
    CHECK(bare_edges == 1);
}

TEST_CASE("graph view hides exactly the excluded facts") {
    FilmFixture f;
    TripleSet excluded{{f.dune, f.director, f.lynch}};
    GraphView view(f.graph, excluded);

    std::vector<std::pair<PredicateId, EntityId>> dune_out;
    view.for_each_out(f.dune, [&](PredicateId p, EntityId o) { dune_out.push_back({p, o}); });
    CHECK(dune_out == std::vector<std::pair<PredicateId, EntityId>>{{f.starring, f.nance}});

    GraphView all(f.graph);
    std::size_t n = 0;
    all.for_each_out(f.dune, [&](PredicateId, EntityId) { ++n; });
    CHECK(n == 2);  // starring + the checked director edge; set_type adds no adjacency
}

TEST_CASE("export round-trips through the loader and hashes stably") {
    FilmFixture f;
    std::string dump = export_triples(f.graph, f.symbols);
    std::string path = temp_path("kg_roundtrip.tsv");
    write_file(path, dump);

    StringPool symbols2;
    ABoxGraph g2 = load_triples(path, TripleFormat::Tsv, symbols2);
    CHECK(g2.triple_count() == f.graph.triple_count());
    CHECK(kg_hash(g2, symbols2) == kg_hash(f.graph, f.symbols));
    CHECK(export_triples(g2, symbols2) == dump);

    std::string sdump = export_schema(f.spec, f.symbols);
    std::string spath = temp_path("kg_schema_roundtrip.tsv");
    write_file(spath, sdump);
    TBoxSpec s2 = load_schema(spath, TripleFormat::Tsv, symbols2);
    CHECK(export_schema(rdfs_closure(s2), symbols2) == sdump);
}

TEST_CASE("ntriples subset parses iris and literals") {
    StringPool symbols;
    ABoxGraph g = parse_triples(
        {"<http://x/Dune> <http://x/starring> <http://x/J_Nance> .",
         "<http://x/Dune> <http://x/label> \"Dune 1984\" ."},
        TripleFormat::NTriples, symbols, "test.nt");
    CHECK(g.triple_count() == 2);
    CHECK(symbols.lookup("http://x/Dune").has_value());
    CHECK(symbols.lookup("\"Dune 1984\"").has_value());  // literals stay verbatim
}
