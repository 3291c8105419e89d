#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"

using namespace kgcheck;
using kgcheck::testing::FilmFixture;
using kgcheck::testing::random_vector;

namespace {

Tensor vec(std::vector<double> v) {
    Tensor t({v.size()});
    t.data = std::move(v);
    return t;
}

// length-1 evidence whose direction in feature space encodes the label
TrainExample planted_example(Rng& rng, double label, double noise) {
    static const std::vector<double> axis = {2.0, -1.0, 1.5, 0.5};
    TrainExample ex;
    ex.label = label;
    ex.paths = EmbeddedPathSet(2, 4);
    EmbeddedPath p;
    p.pattern_score = 1.0;
    p.order_key = "e" + std::to_string(rng.next_below(1u << 30));
    std::vector<double> v(4);
    for (std::size_t i = 0; i < 4; ++i)
        v[i] = (label > 0.5 ? axis[i] : -axis[i]) + noise * (rng.next_double() - 0.5);
    p.facts.push_back(vec(v));
    ex.paths.by_length[1].push_back(std::move(p));
    return ex;
}

std::vector<TrainExample> planted_set(std::uint64_t seed, std::size_t per_class) {
    Rng rng(seed);
    std::vector<TrainExample> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        out.push_back(planted_example(rng, 1.0, 0.3));
        out.push_back(planted_example(rng, 0.0, 0.3));
    }
    return out;
}

// structural identity of an embedded path set, for cross-run comparison
std::string eps_fingerprint(const EmbeddedPathSet& eps) {
    std::string out;
    for (std::size_t l = 1; l <= eps.l_max; ++l)
        for (const EmbeddedPath& p : eps.by_length[l]) {
            out += std::to_string(l) + "|" + p.order_key + "|";
            for (const Tensor& f : p.facts)
                for (std::size_t i = 0; i < f.size(); ++i)
                    out += std::to_string(f[i]) + ",";
            out += ";";
        }
    return out;
}

}  // namespace

TEST_CASE("training separates a planted feature and drives the loss down") {
    std::vector<TrainExample> examples = planted_set(31, 20);
    FactCheckModel model;
    model.init(AggregatorKind::AvgPool, EmbeddingMode::Compositional, 4, 2, 8, 7);

    TrainConfig cfg;
    cfg.lr = 0.03;
    cfg.epochs = 25;
    cfg.patience = 5;
    cfg.batch_size = 8;
    cfg.seed = 3;
    TrainResult result = train(model, examples, cfg);

    REQUIRE(result.train_losses.size() >= 5);
    for (std::size_t i = 0; i + 1 < 5; ++i)
        CHECK(result.train_losses[i + 1] < result.train_losses[i]);

    std::vector<double> scores = score_examples(model, examples);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < examples.size(); ++i)
        correct += (scores[i] > 0.5) == (examples[i].label > 0.5);
    CHECK(correct == examples.size());

    // a clean positive scores confidently true
    Rng rng(99);
    TrainExample probe = planted_example(rng, 1.0, 0.0);
    CHECK(score_from_paths(model, probe.paths) > 0.9);

    // threaded scoring changes nothing
    CHECK(score_examples(model, examples, 4) == scores);
}

TEST_CASE("zero training epochs leave the model untouched") {
    std::vector<TrainExample> examples = planted_set(32, 4);
    FactCheckModel model;
    model.init(AggregatorKind::MaxPool, EmbeddingMode::SkipGram, 4, 2, 6, 11);
    std::string before = model.serialize();

    TrainConfig cfg;
    cfg.epochs = 0;
    TrainResult result = train(model, examples, cfg);
    CHECK(result.train_losses.empty());
    CHECK(result.val_losses.empty());
    CHECK(model.serialize() == before);
}

TEST_CASE("training is reproducible from the seed") {
    std::vector<TrainExample> examples = planted_set(33, 10);
    TrainConfig cfg;
    cfg.lr = 0.02;
    cfg.epochs = 10;
    cfg.patience = 4;
    cfg.seed = 17;

    FactCheckModel a, b;
    a.init(AggregatorKind::LstmMaxPool, EmbeddingMode::Compositional, 4, 2, 5, 17);
    b.init(AggregatorKind::LstmMaxPool, EmbeddingMode::Compositional, 4, 2, 5, 17);
    CHECK(a.serialize() == b.serialize());

    TrainResult ra = train(a, examples, cfg);
    TrainResult rb = train(b, examples, cfg);
    CHECK(ra.train_losses == rb.train_losses);
    CHECK(ra.val_losses == rb.val_losses);
    CHECK(ra.best_epoch == rb.best_epoch);
    CHECK(a.serialize() == b.serialize());

    FactCheckModel c;
    c.init(AggregatorKind::LstmMaxPool, EmbeddingMode::Compositional, 4, 2, 5, 18);
    CHECK(c.serialize() != a.serialize());
}

TEST_CASE("no evidence scores the head bias alone") {
    FactCheckModel model;
    model.init(AggregatorKind::AvgPool, EmbeddingMode::Compositional, 3, 2, 4, 5);
    EmbeddedPathSet empty(2, 3);
    CHECK(model.forward(empty) == doctest::Approx(sigmoid(model.head.b[0])).epsilon(1e-12));
}

TEST_CASE("early stopping fires only after patience non-improving epochs") {
    // label noise: validation loss plateaus quickly
    Rng rng(41);
    std::vector<TrainExample> examples;
    for (int i = 0; i < 6; ++i) {
        TrainExample ex = planted_example(rng, i % 2 ? 1.0 : 0.0, 0.0);
        ex.label = rng.next_below(2) ? 1.0 : 0.0;  // decouple label from feature
        examples.push_back(std::move(ex));
    }
    bool has_pos = false, has_neg = false;
    for (const auto& ex : examples) (ex.label > 0.5 ? has_pos : has_neg) = true;
    if (!has_pos) examples[0].label = 1.0;
    if (!has_neg) examples[1].label = 0.0;

    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.epochs = 40;
    cfg.patience = 3;
    cfg.validation_fraction = 0.34;
    cfg.seed = 9;
    FactCheckModel model;
    model.init(AggregatorKind::AvgPool, EmbeddingMode::Compositional, 4, 2, 4, 9);
    TrainResult result = train(model, examples, cfg);

    REQUIRE(!result.val_losses.empty());
    CHECK(result.train_losses.size() == result.val_losses.size());
    std::size_t ran = result.train_losses.size();
    if (ran < cfg.epochs) CHECK(ran == result.best_epoch + cfg.patience + 1);
    CHECK(result.best_epoch < ran);
}

TEST_CASE("model checkpoints round-trip bitwise") {
    FactCheckModel model;
    model.init(AggregatorKind::LstmMaxPool, EmbeddingMode::SkipGram, 4, 3, 6, 21);
    model.hyper["k"] = "5";
    model.hyper["schema"] = "yes";

    std::string bytes = model.serialize();
    FactCheckModel back = FactCheckModel::deserialize(bytes, "mem");
    CHECK(back.serialize() == bytes);
    CHECK(back.kind == model.kind);
    CHECK(back.embedding_mode == model.embedding_mode);
    CHECK(back.fact_dim == model.fact_dim);
    CHECK(back.l_max == model.l_max);
    CHECK(back.hidden == model.hidden);
    CHECK(back.hyper == model.hyper);

    std::string path = (std::filesystem::temp_directory_path() / "checker_model.bin").string();
    save_model(model, path);
    FactCheckModel loaded = load_model(path);
    CHECK(loaded.serialize() == bytes);

    Rng rng(5);
    TrainExample probe = planted_example(rng, 1.0, 0.2);
    EmbeddedPathSet wide(3, 4);
    wide.by_length[1] = probe.paths.by_length[1];
    CHECK(score_from_paths(loaded, wide) == score_from_paths(model, wide));
    std::filesystem::remove(path);

    CHECK_THROWS_AS(FactCheckModel::deserialize("garbage", "mem"), UserError);
}

TEST_CASE("pipeline caches mined patterns and masks the holdout") {
    FilmFixture f;

    RelatednessMatrix rel({f.starring, f.director});
    rel.set_score(f.starring, f.director, 0.9);

    EmbeddingTable comp;
    comp.dim = 2;
    Rng rng(13);
    for (Sym s : {f.dune, f.eraserhead, f.nance, f.lynch, f.starring, f.director})
        comp.add(f.symbols.name(s), random_vector(rng, 2));
    FactEmbedder embedder = FactEmbedder::compositional(comp, f.symbols);

    PipelineConfig cfg;
    cfg.k = 2;
    cfg.d = 3;
    cfg.pattern_cap = 10;
    cfg.paths.l_max = 3;
    cfg.paths.max_paths_per_length = 10;
    Pipeline ctx(f.graph, &f.tbox, rel, embedder, f.symbols, cfg);

    const std::vector<SchemaPattern>& first = ctx.patterns_for(f.director);
    const std::vector<SchemaPattern>& again = ctx.patterns_for(f.director);
    CHECK(&first == &again);
    CHECK(!first.empty());

    Triple checked{f.dune, f.director, f.lynch};
    PathSet paths = ctx.paths_for(checked);
    REQUIRE(paths.total_paths() == 1);
    const DataPath& costar = paths.by_length[3][0];
    CHECK(costar.pattern_index >= 0);
    CHECK(costar.entry() == f.dune);
    CHECK(costar.exit() == f.lynch);

    EmbeddedPathSet eps = ctx.embedded_paths_for(checked);
    CHECK(eps.by_length[3].size() == 1);
    CHECK(eps.fact_dim == embedder.fact_dim());

    // withholding the bridging fact removes all evidence
    TripleSet holdout;
    holdout.insert({f.eraserhead, f.starring, f.nance});
    ctx.set_leave_out(&holdout);
    CHECK(ctx.paths_for(checked).total_paths() == 0);
    ctx.set_leave_out(nullptr);
    CHECK(ctx.paths_for(checked).total_paths() == 1);

    FactCheckModel model;
    model.init(AggregatorKind::AvgPool, EmbeddingMode::Compositional, embedder.fact_dim(), 3, 4,
               2);
    Verdict v = score_fact(model, checked, ctx);
    CHECK(v.label == (v.score > 0.5));
    CHECK(v.evidence.total_paths() == 1);
    CHECK(v.score == score_from_paths(model, eps));
}

TEST_CASE("example preparation is order-aligned and thread-count independent") {
    FilmFixture f;
    RelatednessMatrix rel({f.starring, f.director});
    rel.set_score(f.starring, f.director, 0.9);
    EmbeddingTable comp;
    comp.dim = 2;
    Rng rng(14);
    for (Sym s : {f.dune, f.eraserhead, f.nance, f.lynch, f.starring, f.director})
        comp.add(f.symbols.name(s), random_vector(rng, 2));
    FactEmbedder embedder = FactEmbedder::compositional(comp, f.symbols);

    std::vector<Triple> facts = {{f.dune, f.director, f.lynch},
                                 {f.eraserhead, f.director, f.lynch},
                                 {f.dune, f.director, f.nance}};
    std::vector<double> labels = {1.0, 1.0, 0.0};

    PipelineConfig cfg;
    cfg.k = 2;
    cfg.d = 3;
    cfg.paths.l_max = 3;
    Pipeline seq(f.graph, &f.tbox, rel, embedder, f.symbols, cfg);
    PipelineConfig cfg4 = cfg;
    cfg4.threads = 4;
    Pipeline par(f.graph, &f.tbox, rel, embedder, f.symbols, cfg4);

    std::vector<TrainExample> a = prepare_examples(seq, facts, labels);
    std::vector<TrainExample> b = prepare_examples(par, facts, labels);
    REQUIRE(a.size() == 3);
    REQUIRE(b.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i].fact == facts[i]);
        CHECK(a[i].label == labels[i]);
        CHECK(eps_fingerprint(a[i].paths) == eps_fingerprint(b[i].paths));
    }
    CHECK_THROWS(prepare_examples(seq, facts, {1.0}));
}
