#include "kgcheck/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

namespace kgcheck {

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

}  // namespace

double auc(const std::vector<ScoredExample>& examples) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const ScoredExample& e : examples) {
        if (!std::isfinite(e.score)) throw UserError("non-finite score in AUC input");
        if (e.label != 0 && e.label != 1) throw UserError("AUC labels must be 0 or 1");
        (e.label == 1 ? n_pos : n_neg)++;
    }
    if (n_pos == 0 || n_neg == 0)
        throw UserError("AUC needs both positive and negative examples");

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return examples[a].score < examples[b].score;
    });

    // Rank sum of positives, tie groups sharing their average rank.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && examples[order[j]].score == examples[order[i]].score) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (examples[order[k]].label == 1) rank_sum += avg_rank;
        i = j;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("scores and labels differ in length");
    std::vector<ScoredExample> examples(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        examples[i] = {scores[i], labels[i] > 0.5 ? 1 : 0};
    return auc(examples);
}

std::vector<ExperimentRow> run_experiment(const ABoxGraph& g, const TBoxGraph* tbox,
                                          const StringPool& symbols, const BenchmarkSet& bench,
                                          const ExperimentGrid& grid, const ExperimentConfig& cfg) {
    if (grid.modes.empty() || grid.aggregators.empty() || grid.train_fractions.empty() ||
        grid.repeats == 0)
        throw UserError("experiment grid needs at least one mode, aggregator, fraction and "
                        "repeat");
    for (double f : grid.train_fractions)
        if (!(f > 0.0 && f < 1.0))
            throw UserError("train fractions must lie strictly between 0 and 1");

    // Pools over both stored splits; cells re-split at their own fraction.
    struct Pool {
        PredicateId p = kNoSym;
        std::vector<std::size_t> pos, neg;  // indices into all_facts
    };
    std::vector<Triple> all_facts;
    std::vector<double> all_labels;
    std::vector<Pool> pools;
    for (const auto& pb : bench.per_predicate) {
        if (cfg.only_predicate && pb.predicate != *cfg.only_predicate) continue;
        Pool pool;
        pool.p = pb.predicate;
        auto add = [&](const std::vector<LabeledFact>& facts, double label,
                       std::vector<std::size_t>& idx) {
            for (const LabeledFact& f : facts) {
                idx.push_back(all_facts.size());
                all_facts.push_back(f.triple);
                all_labels.push_back(label);
            }
        };
        add(pb.train_pos, 1.0, pool.pos);
        add(pb.test_pos, 1.0, pool.pos);
        add(pb.train_neg, 0.0, pool.neg);
        add(pb.test_neg, 0.0, pool.neg);
        pools.push_back(std::move(pool));
    }
    if (pools.empty()) throw UserError("benchmark holds no facts for the requested predicate");

    // Protocol: positives leave the graph before anything is learned.
    TripleSet held_out = benchmark_positives(bench);
    ABoxGraph masked = masked_copy(g, held_out, symbols);
    if (masked.triple_count() == 0)
        throw UserError("masking the benchmark positives empties the graph; lower "
                        "max_per_predicate or add facts");

    SkipgramConfig scfg = cfg.skipgram;
    scfg.seed = Rng::derive(cfg.seed, 0x454d4245ull);
    scfg.threads = cfg.threads;
    LineGraph lg = build_line_graph(masked);
    WalkCorpus corpus = generate_walks(lg, cfg.walks_per_node, cfg.walk_length,
                                       Rng::derive(cfg.seed, 0x57414c4bull), cfg.threads);
    EmbeddingTable fact_table = train_skipgram(corpus, masked, symbols, scfg);

    EmbeddingTable pred_table = predicate_embeddings_from_facts(fact_table, masked, symbols);
    std::set<PredicateId> preds(g.predicates().begin(), g.predicates().end());
    RelatednessMatrix rel = build_relatedness_matrix(pred_table, preds, symbols, cfg.threads);

    bool want_sg = std::find(grid.modes.begin(), grid.modes.end(), EmbeddingMode::SkipGram) !=
                   grid.modes.end();
    bool want_comp = std::find(grid.modes.begin(), grid.modes.end(),
                               EmbeddingMode::Compositional) != grid.modes.end();

    std::optional<FactEmbedder> sg_embedder;
    if (want_sg) sg_embedder = FactEmbedder::skip_gram(fact_table, masked, symbols);

    EmbeddingTable components;
    std::optional<FactEmbedder> comp_embedder;
    if (want_comp) {
        components = entity_embeddings_from_facts(fact_table, masked, symbols);
        for (std::size_t i = 0; i < pred_table.keys.size(); ++i)
            components.add(pred_table.keys[i], pred_table.vectors[i]);

        // Names the masking removed entirely still need a component vector;
        // they get the global mean.
        std::vector<double> mean(fact_table.dim, 0.0);
        for (const auto& v : fact_table.vectors)
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += v[d];
        for (double& x : mean) x /= static_cast<double>(fact_table.vectors.size());
        std::size_t patched = 0;
        auto ensure = [&](Sym s) {
            const std::string& n = symbols.name(s);
            if (!components.find(n)) {
                components.add(n, mean);
                ++patched;
            }
        };
        for (const Triple& t : all_facts) {
            ensure(t.s);
            ensure(t.p);
            ensure(t.o);
        }
        if (patched)
            std::cerr << "note: " << patched << " benchmark names vanished with the masked "
                      << "facts and use the mean component vector\n";
        comp_embedder = FactEmbedder::compositional(components, symbols);
    }

    std::map<EmbeddingMode, std::size_t> mode_dim;
    if (want_sg) mode_dim[EmbeddingMode::SkipGram] = sg_embedder->fact_dim();
    if (want_comp) mode_dim[EmbeddingMode::Compositional] = comp_embedder->fact_dim();

    const FactEmbedder& any_embedder = sg_embedder ? *sg_embedder : *comp_embedder;
    PipelineConfig pcfg = cfg.pipeline;
    pcfg.threads = cfg.threads;
    Pipeline pipe(g, tbox, rel, any_embedder, symbols, pcfg);
    pipe.set_leave_out(&held_out);
    for (const Pool& pool : pools) pipe.patterns_for(pool.p);

    // Paths depend only on the view, not the embedding mode: extract once.
    std::vector<PathSet> raw(all_facts.size());
    parallel_for(all_facts.size(), cfg.threads,
                 [&](std::size_t i) { raw[i] = pipe.paths_for(all_facts[i]); });

    std::map<EmbeddingMode, std::vector<EmbeddedPathSet>> embedded;
    auto embed_all = [&](EmbeddingMode m, const FactEmbedder& e) {
        std::vector<EmbeddedPathSet>& v = embedded[m];
        v.resize(all_facts.size());
        parallel_for(all_facts.size(), cfg.threads,
                     [&](std::size_t i) { v[i] = embed_path_set(raw[i], e, symbols); });
    };
    if (want_sg) embed_all(EmbeddingMode::SkipGram, *sg_embedder);
    if (want_comp) embed_all(EmbeddingMode::Compositional, *comp_embedder);

    struct Cell {
        std::size_t mode_i = 0, agg_i = 0, frac_i = 0, repeat = 0;
        std::optional<std::size_t> pool_i;
    };
    std::vector<Cell> cells;
    for (std::size_t mi = 0; mi < grid.modes.size(); ++mi)
        for (std::size_t ai = 0; ai < grid.aggregators.size(); ++ai)
            for (std::size_t fi = 0; fi < grid.train_fractions.size(); ++fi)
                for (std::size_t r = 0; r < grid.repeats; ++r) {
                    if (cfg.per_predicate) {
                        for (std::size_t pi = 0; pi < pools.size(); ++pi)
                            cells.push_back({mi, ai, fi, r, pi});
                    } else {
                        cells.push_back({mi, ai, fi, r, std::nullopt});
                    }
                }

    std::vector<ExperimentRow> rows(cells.size());
    parallel_for(cells.size(), cfg.threads, [&](std::size_t ci) {
        const Cell& cell = cells[ci];
        ExperimentRow& row = rows[ci];
        EmbeddingMode mode = grid.modes[cell.mode_i];
        AggregatorKind agg = grid.aggregators[cell.agg_i];
        double frac = grid.train_fractions[cell.frac_i];
        row.predicate = cell.pool_i ? symbols.name(pools[*cell.pool_i].p) : "all";
        row.mode = mode;
        row.aggregator = agg;
        row.train_fraction = frac;
        std::uint64_t run_seed = Rng::derive(cfg.seed, 0x52455045ull, cell.repeat);
        row.seed = run_seed;
        std::string cell_key = row.predicate + "|" + embedding_mode_name(mode) + "|" +
                               aggregator_name(agg) + "|" + std::to_string(cell.frac_i);
        std::uint64_t cell_seed = Rng::derive(run_seed, fnv1a64(cell_key));

        auto started = std::chrono::steady_clock::now();
        try {
            std::vector<std::size_t> train_idx, test_idx;
            auto split_pool = [&](const Pool& pool) {
                auto cut = [&](const std::vector<std::size_t>& src, std::uint64_t salt) {
                    std::vector<std::size_t> shuffled = src;
                    Rng rng(Rng::derive(cell_seed, fnv1a64(symbols.name(pool.p)), salt));
                    shuffle_indices(shuffled, rng);
                    std::size_t n_train =
                        static_cast<std::size_t>(static_cast<double>(shuffled.size()) * frac);
                    if (n_train == 0 || n_train == shuffled.size())
                        throw UserError("train fraction " + format_double(frac) +
                                        " leaves an empty side for predicate '" +
                                        symbols.name(pool.p) + "'");
                    train_idx.insert(train_idx.end(), shuffled.begin(),
                                     shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
                    test_idx.insert(test_idx.end(),
                                    shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                                    shuffled.end());
                };
                cut(pool.pos, 1);
                cut(pool.neg, 2);
            };
            if (cell.pool_i)
                split_pool(pools[*cell.pool_i]);
            else
                for (const Pool& pool : pools) split_pool(pool);
            std::sort(train_idx.begin(), train_idx.end());
            std::sort(test_idx.begin(), test_idx.end());

            const std::vector<EmbeddedPathSet>& eps = embedded.at(mode);
            std::vector<TrainExample> train_set;
            train_set.reserve(train_idx.size());
            for (std::size_t i : train_idx)
                train_set.push_back({all_facts[i], all_labels[i], eps[i]});

            FactCheckModel model;
            model.init(agg, mode, mode_dim.at(mode), pcfg.paths.l_max, cfg.hidden,
                       Rng::derive(cell_seed, 0x494e4954ull));
            TrainConfig tc = cfg.trainer;
            tc.seed = Rng::derive(cell_seed, 0x545241494eull);
            tc.train_fraction = frac;
            train(model, train_set, tc);

            std::vector<ScoredExample> scored;
            scored.reserve(test_idx.size());
            for (std::size_t i : test_idx)
                scored.push_back({model.forward(eps[i]), all_labels[i] > 0.5 ? 1 : 0});
            row.auc = auc(scored);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
            row.auc = std::numeric_limits<double>::quiet_NaN();
            std::cerr << "note: grid cell " << cell_key << " repeat " << cell.repeat
                      << " failed: " << e.what() << "\n";
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                          .count();
    });
    return rows;
}

std::string results_to_tsv(const std::vector<ExperimentRow>& rows, bool with_timings) {
    std::string out = "predicate\tembedding\taggregator\ttrain_frac\tseed\tauc\tseconds\n";
    for (const ExperimentRow& row : rows) {
        out += row.predicate;
        out += '\t';
        out += embedding_mode_name(row.mode);
        out += '\t';
        out += aggregator_name(row.aggregator);
        out += '\t';
        out += format_double(row.train_fraction);
        out += '\t';
        out += std::to_string(row.seed);
        out += '\t';
        out += row.failed ? "nan" : format_double(row.auc);
        out += '\t';
        if (with_timings) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", row.seconds);
            out += buf;
        } else {
            out += "0.000";
        }
        out += '\n';
    }
    return out;
}

}  // namespace kgcheck
