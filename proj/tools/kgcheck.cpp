// Command line front end: every pipeline stage as a subcommand over the
// documented file formats. Exit codes: 0 ok, 1 user error, 2 internal error.

#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kgcheck/evalkit.hpp"

using namespace kgcheck;

namespace {

TripleFormat parse_format(const std::string& f) {
    if (f == "tsv") return TripleFormat::Tsv;
    if (f == "ntriples") return TripleFormat::NTriples;
    throw UserError("unknown format '" + f + "' (expected tsv or ntriples)");
}

struct KgContext {
    StringPool symbols;
    ABoxGraph graph;
    std::optional<TBoxSpec> schema;  // closed
    std::optional<TBoxGraph> tbox;
};

KgContext load_context(const std::string& kg_path, const std::string& schema_path,
                       const std::string& format) {
    KgContext out;
    TripleFormat fmt = parse_format(format);
    out.graph = load_triples(kg_path, fmt, out.symbols);
    if (!schema_path.empty()) {
        TBoxSpec spec = load_schema(schema_path, fmt, out.symbols);
        spec.validate(out.symbols);
        out.schema = rdfs_closure(spec);
        out.tbox = build_tbox_graph(*out.schema, out.symbols);
    }
    return out;
}

TripleSet load_exclusions(const std::string& path, StringPool& symbols) {
    if (path.empty()) return {};
    BenchmarkSet bench = load_benchmark(path, symbols);
    return benchmark_positives(bench);
}

// Everything a FactEmbedder needs to stay alive, plus the relatedness
// matrix derived from the same table.
struct EmbedderBundle {
    EmbeddingTable facts;
    ABoxGraph masked;
    EmbeddingTable components;
    std::optional<FactEmbedder> embedder;
    EmbeddingTable pred_table;
    std::optional<RelatednessMatrix> matrix;
};

std::unique_ptr<EmbedderBundle> make_bundle(KgContext& kg, const std::string& emb_path,
                                            EmbeddingMode mode, const TripleSet& exclude,
                                            const std::vector<Triple>& must_cover,
                                            unsigned threads) {
    auto b = std::make_unique<EmbedderBundle>();
    b->facts = load_embedding_table(emb_path);
    b->masked = masked_copy(kg.graph, exclude, kg.symbols);
    if (b->masked.triple_count() == 0)
        throw UserError("every graph fact is excluded; nothing left to reason over");

    b->pred_table = predicate_embeddings_from_facts(b->facts, b->masked, kg.symbols);
    std::set<PredicateId> preds(kg.graph.predicates().begin(), kg.graph.predicates().end());
    b->matrix = build_relatedness_matrix(b->pred_table, preds, kg.symbols, threads);

    if (mode == EmbeddingMode::SkipGram) {
        b->embedder = FactEmbedder::skip_gram(b->facts, b->masked, kg.symbols);
    } else {
        b->components = entity_embeddings_from_facts(b->facts, b->masked, kg.symbols);
        for (std::size_t i = 0; i < b->pred_table.keys.size(); ++i)
            b->components.add(b->pred_table.keys[i], b->pred_table.vectors[i]);
        // Names only occurring in excluded facts still need a vector.
        std::vector<double> mean(b->facts.dim, 0.0);
        for (const auto& v : b->facts.vectors)
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += v[d];
        for (double& x : mean) x /= static_cast<double>(b->facts.vectors.size());
        std::size_t patched = 0;
        auto ensure = [&](Sym s) {
            const std::string& n = kg.symbols.name(s);
            if (!b->components.find(n)) {
                b->components.add(n, mean);
                ++patched;
            }
        };
        for (const Triple& t : must_cover) {
            ensure(t.s);
            ensure(t.p);
            ensure(t.o);
        }
        if (patched)
            std::cerr << "note: " << patched
                      << " names missing from the embedding context use the mean vector\n";
        b->embedder = FactEmbedder::compositional(b->components, kg.symbols);
    }
    return b;
}

std::size_t hyper_size(const FactCheckModel& m, const std::string& key, std::size_t fallback) {
    auto it = m.hyper.find(key);
    if (it == m.hyper.end()) return fallback;
    char* end = nullptr;
    unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        throw UserError("model carries a bad value for '" + key + "': " + it->second);
    return static_cast<std::size_t>(v);
}

void check_fingerprint(const BenchmarkSet& bench, const KgContext& kg) {
    if (bench.kg_fingerprint == 0) return;  // external corpora carry none
    std::uint64_t have = kg_hash(kg.graph, kg.symbols);
    if (have != bench.kg_fingerprint)
        throw UserError("benchmark was generated from a different graph (manifest kg=" +
                        to_hex(bench.kg_fingerprint) + ", loaded kg=" + to_hex(have) + ")");
}

// Shared option blocks -------------------------------------------------------

struct CommonOpts {
    std::string kg, schema, format = "tsv";
    unsigned threads = 1;
};

void add_kg_options(CLI::App* cmd, CommonOpts& o, bool schema_too = true) {
    cmd->add_option("--kg", o.kg, "Fact file (<s>\\t<p>\\t<o> per line)")->required();
    if (schema_too)
        cmd->add_option("--schema", o.schema,
                        "Schema file (class/property declarations and axioms)");
    cmd->add_option("--format", o.format, "Input format: tsv or ntriples")
        ->check(CLI::IsMember({"tsv", "ntriples"}))
        ->capture_default_str();
}

struct PipelineOpts {
    std::size_t k = 10, d = 4, cap = 50, l_max = 4, max_paths = 150;
    std::uint64_t seed = 0;
};

void add_pipeline_options(CLI::App* cmd, PipelineOpts& o) {
    cmd->add_option("--k", o.k, "Related predicates kept per target")->capture_default_str();
    cmd->add_option("--d", o.d, "Maximum pattern length")->capture_default_str();
    cmd->add_option("--pattern-cap", o.cap, "Patterns kept per predicate")
        ->capture_default_str();
    cmd->add_option("--l-max", o.l_max, "Maximum data path length")->capture_default_str();
    cmd->add_option("--max-paths", o.max_paths, "Paths kept per length bucket")
        ->capture_default_str();
}

PipelineConfig to_pipeline_config(const PipelineOpts& o, unsigned threads) {
    PipelineConfig cfg;
    cfg.k = o.k;
    cfg.d = o.d;
    cfg.pattern_cap = o.cap;
    cfg.paths.l_max = o.l_max;
    cfg.paths.max_paths_per_length = o.max_paths;
    cfg.paths.seed = o.seed;
    cfg.threads = threads;
    return cfg;
}

struct SkipgramOpts {
    std::size_t dim = 128, window = 5, negatives = 5, epochs = 5;
    std::size_t walks = 10, walk_length = 20;
    double lr = 0.025;
};

void add_skipgram_options(CLI::App* cmd, SkipgramOpts& o) {
    cmd->add_option("--dim", o.dim, "Embedding width")->capture_default_str();
    cmd->add_option("--window", o.window, "Context window")->capture_default_str();
    cmd->add_option("--negatives", o.negatives, "Negative samples per pair")
        ->capture_default_str();
    cmd->add_option("--sg-epochs", o.epochs, "Skip-gram epochs")->capture_default_str();
    cmd->add_option("--sg-lr", o.lr, "Skip-gram learning rate")->capture_default_str();
    cmd->add_option("--walks", o.walks, "Walks per node")->capture_default_str();
    cmd->add_option("--walk-length", o.walk_length, "Steps per walk")->capture_default_str();
}

struct TrainOpts {
    double lr = 0.001, val_fraction = 0.1;
    std::size_t epochs = 100, patience = 10, batch = 32, hidden = 64;
};

void add_train_options(CLI::App* cmd, TrainOpts& o) {
    cmd->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    cmd->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--patience", o.patience, "Early stopping patience")->capture_default_str();
    cmd->add_option("--batch", o.batch, "Batch size")->capture_default_str();
    cmd->add_option("--hidden", o.hidden, "Aggregator hidden width")->capture_default_str();
    cmd->add_option("--val-fraction", o.val_fraction, "Validation slice of the training facts")
        ->capture_default_str();
}

TrainConfig to_train_config(const TrainOpts& o, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.lr = o.lr;
    cfg.epochs = o.epochs;
    cfg.patience = o.patience;
    cfg.batch_size = o.batch;
    cfg.validation_fraction = o.val_fraction;
    cfg.seed = seed;
    return cfg;
}

void record_hyper(FactCheckModel& model, const PipelineOpts& p, const TrainOpts& t,
                  std::uint64_t seed, bool with_schema, std::size_t emb_dim) {
    model.hyper["k"] = std::to_string(p.k);
    model.hyper["d"] = std::to_string(p.d);
    model.hyper["pattern_cap"] = std::to_string(p.cap);
    model.hyper["max_paths"] = std::to_string(p.max_paths);
    model.hyper["lr"] = format_double(t.lr);
    model.hyper["epochs"] = std::to_string(t.epochs);
    model.hyper["patience"] = std::to_string(t.patience);
    model.hyper["batch"] = std::to_string(t.batch);
    model.hyper["val_fraction"] = format_double(t.val_fraction);
    model.hyper["seed"] = std::to_string(seed);
    model.hyper["schema"] = with_schema ? "yes" : "no";
    model.hyper["embedding_dim"] = std::to_string(emb_dim);
}

// Subcommands ----------------------------------------------------------------

void run_ingest(const CommonOpts& co, const std::string& out_kg, const std::string& out_schema) {
    KgContext kg = load_context(co.kg, co.schema, co.format);
    std::cout << "facts: " << kg.graph.triple_count() << "\n"
              << "entities: " << kg.graph.entities().size() << "\n"
              << "predicates: " << kg.graph.predicates().size() << "\n";
    if (kg.schema)
        std::cout << "classes: " << kg.schema->classes.size()
                  << "\nproperties: " << kg.schema->properties.size()
                  << "\naxioms: " << kg.schema->axioms.size() << "\n";
    std::cout << "kg hash: " << to_hex(kg_hash(kg.graph, kg.symbols)) << "\n";
    if (!out_kg.empty()) {
        write_file(out_kg, export_triples(kg.graph, kg.symbols));
        std::cout << "wrote " << out_kg << "\n";
    }
    if (!out_schema.empty()) {
        if (!kg.schema) throw UserError("--out-schema needs --schema");
        write_file(out_schema, export_schema(*kg.schema, kg.symbols));
        std::cout << "wrote " << out_schema << "\n";
    }
}

void run_embed(const CommonOpts& co, const SkipgramOpts& so, const std::string& exclude_path,
               const std::string& out, std::uint64_t seed) {
    KgContext kg = load_context(co.kg, "", co.format);
    TripleSet exclude = load_exclusions(exclude_path, kg.symbols);
    ABoxGraph masked;
    if (!exclude.empty()) masked = masked_copy(kg.graph, exclude, kg.symbols);
    const ABoxGraph& target = exclude.empty() ? kg.graph : masked;
    if (target.triple_count() == 0) throw UserError("no facts left to embed");

    LineGraph lg = build_line_graph(target);
    WalkCorpus corpus = generate_walks(lg, so.walks, so.walk_length,
                                       Rng::derive(seed, 0x57414c4bull), co.threads);
    SkipgramConfig scfg;
    scfg.dim = so.dim;
    scfg.window = so.window;
    scfg.negatives = so.negatives;
    scfg.epochs = so.epochs;
    scfg.lr = so.lr;
    scfg.seed = Rng::derive(seed, 0x53474e53ull);
    scfg.threads = co.threads;
    std::vector<double> losses;
    EmbeddingTable table = train_skipgram(corpus, target, kg.symbols, scfg, &losses);
    save_embedding_table(table, out);
    std::cout << "embedded " << table.size() << " facts at dim " << table.dim;
    if (!losses.empty()) std::cout << ", final mean pair loss " << format_double(losses.back());
    std::cout << "\nwrote " << out << "\n";
}

void run_mine_patterns(const CommonOpts& co, const PipelineOpts& po, const std::string& emb_path,
                       const std::string& predicate, const std::string& out) {
    if (co.schema.empty()) throw UserError("pattern mining needs --schema");
    KgContext kg = load_context(co.kg, co.schema, co.format);
    auto p = kg.symbols.lookup(predicate);
    if (!p) throw UserError("unknown predicate '" + predicate + "'");
    if (!kg.schema->properties.count(*p)) {
        // Predicates may occur in facts without a schema declaration.
        bool in_graph = false;
        for (PredicateId q : kg.graph.predicates()) in_graph = in_graph || q == *p;
        if (!in_graph) throw UserError("unknown predicate '" + predicate + "'");
    }

    EmbeddingTable facts = load_embedding_table(emb_path);
    EmbeddingTable pred_table = predicate_embeddings_from_facts(facts, kg.graph, kg.symbols);
    std::set<PredicateId> preds(kg.graph.predicates().begin(), kg.graph.predicates().end());
    preds.insert(*p);
    RelatednessMatrix matrix = build_relatedness_matrix(pred_table, preds, kg.symbols,
                                                        co.threads);

    auto patterns = extract_schema_patterns(*p, po.k, po.d, *kg.tbox, matrix, kg.symbols,
                                            po.cap, co.threads);
    PatternCacheKey key{predicate, po.k, po.d, matrix.content_hash(kg.symbols)};
    save_pattern_cache(out, patterns, kg.symbols, &key);
    std::cout << "mined " << patterns.size() << " patterns for '" << predicate << "'\nwrote "
              << out << "\n";
}

void run_extract_paths(const CommonOpts& co, const PipelineOpts& po, const std::string& emb_path,
                       const std::string& patterns_path, const std::string& exclude_path,
                       const std::vector<std::string>& fact_names, const std::string& out) {
    KgContext kg = load_context(co.kg, co.schema, co.format);
    TripleSet exclude = load_exclusions(exclude_path, kg.symbols);
    Triple fact{kg.symbols.intern(fact_names[0]), kg.symbols.intern(fact_names[1]),
                kg.symbols.intern(fact_names[2])};

    PathSet paths;
    if (!patterns_path.empty()) {
        auto patterns = load_pattern_cache(patterns_path, kg.symbols);
        if (!kg.schema) throw UserError("pattern-guided extraction needs --schema");
        PathExtractConfig pcfg;
        pcfg.l_max = po.l_max;
        pcfg.max_paths_per_length = po.max_paths;
        pcfg.seed = Rng::derive(po.seed, fnv1a64(fact_key(fact, kg.symbols)));
        GraphView view(kg.graph, exclude);
        paths = extract_paths(view, fact, patterns, *kg.schema, pcfg);
    } else if (!emb_path.empty()) {
        auto bundle = make_bundle(kg, emb_path, EmbeddingMode::SkipGram, exclude, {}, co.threads);
        PipelineConfig pcfg = to_pipeline_config(po, co.threads);
        pcfg.schema_less = !kg.tbox.has_value();
        Pipeline pipe(kg.graph, kg.tbox ? &*kg.tbox : nullptr, *bundle->matrix,
                      *bundle->embedder, kg.symbols, pcfg);
        pipe.set_leave_out(&exclude);
        paths = pipe.paths_for(fact);
    } else {
        // No schema and no relatedness source: plain bounded search.
        TBoxSpec no_schema;
        PathExtractConfig pcfg;
        pcfg.l_max = po.l_max;
        pcfg.max_paths_per_length = po.max_paths;
        pcfg.seed = Rng::derive(po.seed, fnv1a64(fact_key(fact, kg.symbols)));
        GraphView view(kg.graph, exclude);
        paths = extract_paths(view, fact, {}, no_schema, pcfg);
    }

    std::string dump = paths_to_string(paths, kg.symbols);
    if (out.empty()) {
        std::cout << dump;
        std::cout << "# " << paths.total_paths() << " paths\n";
    } else {
        write_file(out, dump);
        std::cout << paths.total_paths() << " paths\nwrote " << out << "\n";
    }
}

void run_train(const CommonOpts& co, const PipelineOpts& po, const TrainOpts& to,
               const std::string& emb_path, const std::string& bench_path,
               const std::string& aggregator, const std::string& mode_name,
               const std::string& predicate, const std::string& out, std::uint64_t seed) {
    KgContext kg = load_context(co.kg, co.schema, co.format);
    BenchmarkSet bench = load_benchmark(bench_path, kg.symbols);
    check_fingerprint(bench, kg);
    AggregatorKind agg = parse_aggregator(aggregator);
    EmbeddingMode mode = parse_embedding_mode(mode_name);

    std::optional<PredicateId> only;
    if (!predicate.empty()) {
        auto p = kg.symbols.lookup(predicate);
        if (!p) throw UserError("unknown predicate '" + predicate + "'");
        only = *p;
    }
    std::vector<Triple> facts;
    std::vector<double> labels;
    collect_split(bench, /*train=*/true, only, facts, labels);
    if (facts.empty()) throw UserError("benchmark has no training facts for this selection");

    // Cover both splits so the trained model can score test facts later.
    std::vector<Triple> cover;
    std::vector<double> cover_labels;
    collect_split(bench, true, std::nullopt, cover, cover_labels);
    collect_split(bench, false, std::nullopt, cover, cover_labels);

    TripleSet held_out = benchmark_positives(bench);
    auto bundle = make_bundle(kg, emb_path, mode, held_out, cover, co.threads);

    PipelineOpts po_seeded = po;
    po_seeded.seed = Rng::derive(seed, 0x5041544853ull);
    PipelineConfig pcfg = to_pipeline_config(po_seeded, co.threads);
    pcfg.schema_less = !kg.tbox.has_value();
    Pipeline pipe(kg.graph, kg.tbox ? &*kg.tbox : nullptr, *bundle->matrix, *bundle->embedder,
                  kg.symbols, pcfg);
    pipe.set_leave_out(&held_out);

    std::vector<TrainExample> examples = prepare_examples(pipe, facts, labels);

    FactCheckModel model;
    model.init(agg, mode, bundle->embedder->fact_dim(), po.l_max, to.hidden,
               Rng::derive(seed, 0x494e4954ull));
    record_hyper(model, po, to, seed, kg.schema.has_value(), bundle->facts.dim);
    TrainConfig tc = to_train_config(to, Rng::derive(seed, 0x545241494eull));
    TrainResult result = train(model, examples, tc);
    save_model(model, out);

    std::cout << "trained " << aggregator_name(agg) << "/" << embedding_mode_name(mode) << " on "
              << examples.size() << " facts\n";
    std::cout << "epochs run: " << result.train_losses.size()
              << ", best epoch: " << result.best_epoch + 1 << "\n";
    if (!result.train_losses.empty())
        std::cout << "final train loss: " << format_double(result.train_losses.back()) << "\n";
    if (!result.val_losses.empty())
        std::cout << "best validation loss: "
                  << format_double(result.val_losses[result.best_epoch]) << "\n";
    std::cout << "wrote " << out << "\n";
}

void run_check(const CommonOpts& co, const std::string& emb_path, const std::string& model_path,
               const std::string& exclude_path, const std::vector<std::string>& fact_names) {
    KgContext kg = load_context(co.kg, co.schema, co.format);
    FactCheckModel model = load_model(model_path);
    if (model.hyper.count("schema") && model.hyper.at("schema") == "yes" && !kg.schema)
        throw UserError("model was trained with a schema; pass --schema");

    auto s = kg.symbols.lookup(fact_names[0]);
    auto p = kg.symbols.lookup(fact_names[1]);
    auto o = kg.symbols.lookup(fact_names[2]);
    if (!s) throw UserError("unknown entity '" + fact_names[0] + "'");
    if (!p) throw UserError("unknown predicate '" + fact_names[1] + "'");
    if (!o) throw UserError("unknown entity '" + fact_names[2] + "'");
    Triple fact{*s, *p, *o};

    TripleSet exclude = load_exclusions(exclude_path, kg.symbols);
    auto bundle = make_bundle(kg, emb_path, model.embedding_mode, exclude, {fact}, co.threads);

    PipelineOpts po;
    po.k = hyper_size(model, "k", po.k);
    po.d = hyper_size(model, "d", po.d);
    po.cap = hyper_size(model, "pattern_cap", po.cap);
    po.max_paths = hyper_size(model, "max_paths", po.max_paths);
    po.l_max = model.l_max;
    po.seed = Rng::derive(hyper_size(model, "seed", 0), 0x5041544853ull);
    PipelineConfig pcfg = to_pipeline_config(po, co.threads);
    pcfg.schema_less = !kg.tbox.has_value();
    Pipeline pipe(kg.graph, kg.tbox ? &*kg.tbox : nullptr, *bundle->matrix, *bundle->embedder,
                  kg.symbols, pcfg);
    pipe.set_leave_out(&exclude);

    Verdict v = score_fact(model, fact, pipe);
    std::cout << "Φ=" << format_double(v.score) << " label="
              << (v.label ? "true" : "false") << "\n";
    std::cout << "evidence (" << v.evidence.total_paths() << " paths):\n";
    std::cout << paths_to_string(v.evidence, kg.symbols);
}

void run_benchmark(const CommonOpts& co, const std::string& out,
                   const std::vector<std::string>& predicates, const std::string& external,
                   std::size_t max_per_predicate, std::size_t ratio, double fraction,
                   std::size_t min_positives, std::uint64_t seed) {
    KgContext kg = load_context(co.kg, "", co.format);
    BenchmarkSet bench;
    if (!external.empty()) {
        auto facts = load_external_facts(external, kg.symbols);
        bench = benchmark_from_external(facts, fraction, seed, kg.symbols);
        bench.kg_fingerprint = kg_hash(kg.graph, kg.symbols);
    } else {
        std::vector<PredicateId> preds;
        for (const std::string& name : predicates) {
            auto p = kg.symbols.lookup(name);
            if (!p) throw UserError("unknown predicate '" + name + "'");
            preds.push_back(*p);
        }
        BenchmarkConfig bcfg;
        bcfg.max_per_predicate = max_per_predicate;
        bcfg.neg_ratio = ratio;
        bcfg.train_fraction = fraction;
        bcfg.min_positives = min_positives;
        bcfg.seed = seed;
        bcfg.threads = co.threads;
        bench = build_benchmark(kg.graph, kg.symbols, preds, bcfg);
    }
    save_benchmark(bench, kg.symbols, out);

    std::size_t tr_p = 0, tr_n = 0, ts_p = 0, ts_n = 0;
    for (const auto& pb : bench.per_predicate) {
        tr_p += pb.train_pos.size();
        tr_n += pb.train_neg.size();
        ts_p += pb.test_pos.size();
        ts_n += pb.test_neg.size();
    }
    std::cout << "benchmark over " << bench.per_predicate.size() << " predicates\n"
              << "train: " << tr_p << " positive, " << tr_n << " negative\n"
              << "test: " << ts_p << " positive, " << ts_n << " negative\n"
              << "wrote " << out << "\n";
}

void run_evaluate(const CommonOpts& co, const PipelineOpts& po, const SkipgramOpts& so,
                  const TrainOpts& to, const std::string& bench_path,
                  const std::vector<std::string>& modes,
                  const std::vector<std::string>& aggregators,
                  const std::vector<double>& fractions, std::size_t repeats,
                  const std::string& predicate, bool per_predicate, bool timings,
                  const std::string& out, std::uint64_t seed) {
    KgContext kg = load_context(co.kg, co.schema, co.format);
    BenchmarkSet bench = load_benchmark(bench_path, kg.symbols);
    check_fingerprint(bench, kg);

    ExperimentGrid grid;
    for (const std::string& m : modes) grid.modes.push_back(parse_embedding_mode(m));
    for (const std::string& a : aggregators) grid.aggregators.push_back(parse_aggregator(a));
    grid.train_fractions = fractions;
    grid.repeats = repeats;

    ExperimentConfig cfg;
    cfg.pipeline = to_pipeline_config(po, co.threads);
    cfg.pipeline.schema_less = !kg.tbox.has_value();
    cfg.skipgram.dim = so.dim;
    cfg.skipgram.window = so.window;
    cfg.skipgram.negatives = so.negatives;
    cfg.skipgram.epochs = so.epochs;
    cfg.skipgram.lr = so.lr;
    cfg.walks_per_node = so.walks;
    cfg.walk_length = so.walk_length;
    cfg.trainer = to_train_config(to, 0);
    cfg.hidden = to.hidden;
    cfg.seed = seed;
    cfg.threads = co.threads;
    cfg.per_predicate = per_predicate;
    if (!predicate.empty()) {
        auto p = kg.symbols.lookup(predicate);
        if (!p) throw UserError("unknown predicate '" + predicate + "'");
        cfg.only_predicate = *p;
    }

    auto rows = run_experiment(kg.graph, kg.tbox ? &*kg.tbox : nullptr, kg.symbols, bench, grid,
                               cfg);
    write_file(out, results_to_tsv(rows, timings));

    // Mean AUC per cell over the repeats, in row order.
    struct Agg {
        double sum = 0;
        std::size_t n = 0, failed = 0;
    };
    std::vector<std::pair<std::string, Agg>> groups;
    for (const ExperimentRow& row : rows) {
        std::string key = row.predicate + " " + embedding_mode_name(row.mode) + " " +
                          aggregator_name(row.aggregator) + " f=" +
                          format_double(row.train_fraction);
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == key; });
        if (it == groups.end()) {
            groups.push_back({key, {}});
            it = std::prev(groups.end());
        }
        if (row.failed)
            it->second.failed++;
        else {
            it->second.sum += row.auc;
            it->second.n++;
        }
    }
    for (const auto& [key, agg] : groups) {
        std::cout << key << ": ";
        if (agg.n > 0)
            std::cout << "AUC " << format_double(agg.sum / static_cast<double>(agg.n)) << " over "
                      << agg.n << " runs";
        if (agg.failed > 0) std::cout << (agg.n ? ", " : "") << agg.failed << " failed";
        std::cout << "\n";
    }
    std::cout << "wrote " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge graph fact checking via schema patterns and path aggregation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Configuration file (key = value lines)");

    unsigned threads = 1;
    app.add_option("--threads", threads,
                   "Worker threads; 1 keeps every output byte-reproducible")
        ->capture_default_str();

    // ingest
    CommonOpts in_co;
    std::string in_out_kg, in_out_schema;
    CLI::App* ingest = app.add_subcommand("ingest", "Load, validate and fingerprint a KG");
    add_kg_options(ingest, in_co);
    ingest->add_option("--out-kg", in_out_kg, "Write the normalized fact file");
    ingest->add_option("--out-schema", in_out_schema, "Write the closed schema");

    // embed
    CommonOpts em_co;
    SkipgramOpts em_so;
    std::string em_exclude, em_out;
    std::uint64_t em_seed = 0;
    CLI::App* embed = app.add_subcommand("embed", "Train fact embeddings over the KG");
    add_kg_options(embed, em_co, /*schema_too=*/false);
    add_skipgram_options(embed, em_so);
    embed->add_option("--exclude", em_exclude, "Benchmark file whose positives are masked");
    embed->add_option("--out", em_out, "Embedding table output")->required();
    embed->add_option("--seed", em_seed, "Random seed")->capture_default_str();

    // mine-patterns
    CommonOpts mp_co;
    PipelineOpts mp_po;
    std::string mp_emb, mp_pred, mp_out;
    CLI::App* mine = app.add_subcommand("mine-patterns",
                                        "Mine schema patterns for one predicate");
    add_kg_options(mine, mp_co);
    add_pipeline_options(mine, mp_po);
    mine->add_option("--embeddings", mp_emb, "Fact embedding table")->required();
    mine->add_option("--predicate", mp_pred, "Target predicate")->required();
    mine->add_option("--out", mp_out, "Pattern cache output")->required();

    // extract-paths
    CommonOpts ep_co;
    PipelineOpts ep_po;
    std::string ep_emb, ep_patterns, ep_exclude, ep_out;
    std::vector<std::string> ep_fact;
    CLI::App* extract = app.add_subcommand("extract-paths",
                                           "List compliant paths between a fact's endpoints");
    add_kg_options(extract, ep_co);
    add_pipeline_options(extract, ep_po);
    extract->add_option("--embeddings", ep_emb, "Fact embedding table (for relatedness)");
    extract->add_option("--patterns", ep_patterns, "Precomputed pattern cache");
    extract->add_option("--exclude", ep_exclude, "Benchmark file whose positives are masked");
    extract->add_option("--seed", ep_po.seed, "Random seed")->capture_default_str();
    extract->add_option("--out", ep_out, "Write paths here instead of stdout");
    extract->add_option("fact", ep_fact, "Subject predicate object")->expected(3)->required();

    // train
    CommonOpts tr_co;
    PipelineOpts tr_po;
    TrainOpts tr_to;
    std::string tr_emb, tr_bench, tr_agg = "lstmmaxpool", tr_mode = "skipgram", tr_pred, tr_out;
    std::uint64_t tr_seed = 0;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a fact checking model");
    add_kg_options(train_cmd, tr_co);
    add_pipeline_options(train_cmd, tr_po);
    add_train_options(train_cmd, tr_to);
    train_cmd->add_option("--embeddings", tr_emb, "Fact embedding table")->required();
    train_cmd->add_option("--benchmark", tr_bench, "Benchmark file")->required();
    train_cmd->add_option("--aggregator", tr_agg, "avgpool | maxpool | lstmmaxpool")
        ->check(CLI::IsMember({"avgpool", "maxpool", "lstmmaxpool"}))
        ->capture_default_str();
    train_cmd->add_option("--mode", tr_mode, "compositional | skipgram")
        ->check(CLI::IsMember({"compositional", "skipgram"}))
        ->capture_default_str();
    train_cmd->add_option("--predicate", tr_pred, "Restrict training to one predicate");
    train_cmd->add_option("--out", tr_out, "Model checkpoint output")->required();
    train_cmd->add_option("--seed", tr_seed, "Random seed")->capture_default_str();

    // check
    CommonOpts ck_co;
    std::string ck_emb, ck_model, ck_exclude;
    std::vector<std::string> ck_fact;
    CLI::App* check = app.add_subcommand("check", "Score one fact and show its evidence");
    add_kg_options(check, ck_co);
    check->add_option("--embeddings", ck_emb, "Fact embedding table")->required();
    check->add_option("--model", ck_model, "Trained model checkpoint")->required();
    check->add_option("--exclude", ck_exclude, "Benchmark file whose positives are masked");
    check->add_option("fact", ck_fact, "Subject predicate object")->expected(3)->required();

    // benchmark
    CommonOpts bm_co;
    std::string bm_out, bm_external;
    std::vector<std::string> bm_preds;
    std::size_t bm_max = 200, bm_ratio = 2, bm_min = 4;
    double bm_fraction = 0.5;
    std::uint64_t bm_seed = 0;
    CLI::App* bench_cmd = app.add_subcommand("benchmark",
                                             "Generate a labeled train/test benchmark");
    add_kg_options(bench_cmd, bm_co, /*schema_too=*/false);
    bench_cmd->add_option("--out", bm_out, "Benchmark file output")->required();
    bench_cmd->add_option("--predicates", bm_preds, "Predicates to cover (default: all)")
        ->delimiter(',');
    bench_cmd->add_option("--external", bm_external,
                          "Labeled corpus (<s>\\t<p>\\t<o>\\t<label>) to split instead of "
                          "generating");
    bench_cmd->add_option("--max-per-predicate", bm_max, "Positive cap per predicate")
        ->capture_default_str();
    bench_cmd->add_option("--ratio", bm_ratio, "Negatives per positive")->capture_default_str();
    bench_cmd->add_option("--fraction", bm_fraction, "Training fraction")->capture_default_str();
    bench_cmd->add_option("--min-positives", bm_min, "Skip predicates below this many positives")
        ->capture_default_str();
    bench_cmd->add_option("--seed", bm_seed, "Random seed")->capture_default_str();

    // evaluate
    CommonOpts ev_co;
    PipelineOpts ev_po;
    SkipgramOpts ev_so;
    TrainOpts ev_to;
    std::string ev_bench, ev_pred, ev_out = "results.tsv";
    std::vector<std::string> ev_modes = {"compositional", "skipgram"};
    std::vector<std::string> ev_aggs = {"avgpool", "maxpool", "lstmmaxpool"};
    std::vector<double> ev_fractions = {0.5};
    std::size_t ev_repeats = 4;
    bool ev_per_pred = false, ev_timings = false;
    std::uint64_t ev_seed = 0;
    CLI::App* eval_cmd = app.add_subcommand("evaluate",
                                            "Run the embedding/aggregator/split grid");
    add_kg_options(eval_cmd, ev_co);
    add_pipeline_options(eval_cmd, ev_po);
    add_skipgram_options(eval_cmd, ev_so);
    add_train_options(eval_cmd, ev_to);
    eval_cmd->add_option("--benchmark", ev_bench, "Benchmark file")->required();
    eval_cmd->add_option("--modes", ev_modes, "Embedding modes to sweep")->delimiter(',');
    eval_cmd->add_option("--aggregators", ev_aggs, "Aggregators to sweep")->delimiter(',');
    eval_cmd->add_option("--fractions", ev_fractions, "Train fractions to sweep")
        ->delimiter(',');
    eval_cmd->add_option("--repeats", ev_repeats, "Seeded runs per cell")->capture_default_str();
    eval_cmd->add_option("--predicate", ev_pred, "Restrict to one predicate");
    eval_cmd->add_flag("--per-predicate", ev_per_pred, "One model and row per predicate");
    eval_cmd->add_flag("--timings", ev_timings,
                       "Fill the seconds column (breaks byte-reproducibility)");
    eval_cmd->add_option("--out", ev_out, "Results TSV output")->capture_default_str();
    eval_cmd->add_option("--seed", ev_seed, "Random seed")->capture_default_str();

    for (CLI::App* sub : {ingest, embed, mine, extract, train_cmd, check, bench_cmd, eval_cmd})
        sub->fallthrough();

    ingest->callback([&] { run_ingest(in_co, in_out_kg, in_out_schema); });
    embed->callback([&] {
        em_co.threads = threads;
        run_embed(em_co, em_so, em_exclude, em_out, em_seed);
    });
    mine->callback([&] {
        mp_co.threads = threads;
        run_mine_patterns(mp_co, mp_po, mp_emb, mp_pred, mp_out);
    });
    extract->callback([&] {
        ep_co.threads = threads;
        run_extract_paths(ep_co, ep_po, ep_emb, ep_patterns, ep_exclude, ep_fact, ep_out);
    });
    train_cmd->callback([&] {
        tr_co.threads = threads;
        run_train(tr_co, tr_po, tr_to, tr_emb, tr_bench, tr_agg, tr_mode, tr_pred, tr_out,
                  tr_seed);
    });
    check->callback([&] {
        ck_co.threads = threads;
        run_check(ck_co, ck_emb, ck_model, ck_exclude, ck_fact);
    });
    bench_cmd->callback([&] {
        bm_co.threads = threads;
        run_benchmark(bm_co, bm_out, bm_preds, bm_external, bm_max, bm_ratio, bm_fraction,
                      bm_min, bm_seed);
    });
    eval_cmd->callback([&] {
        ev_co.threads = threads;
        run_evaluate(ev_co, ev_po, ev_so, ev_to, ev_bench, ev_modes, ev_aggs, ev_fractions,
                     ev_repeats, ev_pred, ev_per_pred, ev_timings, ev_out, ev_seed);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
