#include "kgcheck/fact_embed.hpp"

#include <algorithm>
#include <cmath>

namespace kgcheck {

LineGraph build_line_graph(const ABoxGraph& g) {
    const auto& triples = g.triples();
    LineGraph lg;
    lg.node_count = triples.size();
    lg.adjacency.resize(triples.size());

    std::unordered_map<EntityId, std::vector<std::uint32_t>> incident;
    for (std::uint32_t i = 0; i < triples.size(); ++i) {
        incident[triples[i].s].push_back(i);
        if (triples[i].o != triples[i].s) incident[triples[i].o].push_back(i);
    }
    for (const auto& [entity, ids] : incident) {
        for (std::size_t a = 0; a < ids.size(); ++a)
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                lg.adjacency[ids[a]].push_back(ids[b]);
                lg.adjacency[ids[b]].push_back(ids[a]);
            }
    }
    for (auto& nbrs : lg.adjacency) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    return lg;
}

WalkCorpus generate_walks(const LineGraph& lg, std::size_t walks_per_node,
                          std::size_t walk_length, std::uint64_t seed, unsigned threads) {
    if (walks_per_node == 0 || walk_length == 0)
        throw std::invalid_argument("generate_walks: parameters must be positive");
    WalkCorpus corpus;
    corpus.walks_per_node = walks_per_node;
    corpus.walk_length = walk_length;
    corpus.walks.resize(lg.node_count * walks_per_node);
    parallel_for(corpus.walks.size(), threads, [&](std::size_t slot) {
        std::uint32_t node = static_cast<std::uint32_t>(slot / walks_per_node);
        std::uint64_t w = slot % walks_per_node;
        Rng rng(Rng::derive(seed, node, w));
        std::vector<std::uint32_t>& walk = corpus.walks[slot];
        walk.reserve(walk_length);
        walk.push_back(node);
        std::uint32_t cur = node;
        for (std::size_t step = 1; step < walk_length; ++step) {
            const auto& nbrs = lg.adjacency[cur];
            if (nbrs.empty()) break;
            cur = nbrs[rng.next_below(nbrs.size())];
            walk.push_back(cur);
        }
    });
    return corpus;
}

namespace {

// Cumulative unigram^(3/4) mass for negative sampling.
struct NegativeSampler {
    std::vector<double> cumulative;

    explicit NegativeSampler(const std::vector<std::uint64_t>& freq) {
        cumulative.reserve(freq.size());
        double total = 0;
        for (std::uint64_t f : freq) {
            total += std::pow(static_cast<double>(f), 0.75);
            cumulative.push_back(total);
        }
    }
    std::uint32_t draw(Rng& rng) const {
        double x = rng.next_double() * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
        if (it == cumulative.end()) --it;
        return static_cast<std::uint32_t>(it - cumulative.begin());
    }
};

}  // namespace

double sgns_pair_loss(const std::vector<double>& u, const std::vector<double>& v, double label,
                      std::vector<double>* grad_u, std::vector<double>* grad_v) {
    if (u.size() != v.size())
        throw std::invalid_argument("sgns_pair_loss: dimension mismatch");
    double dot = 0;
    for (std::size_t d = 0; d < u.size(); ++d) dot += u[d] * v[d];
    double sig = 1.0 / (1.0 + std::exp(-dot));
    double loss = label > 0.5 ? -std::log(std::max(sig, 1e-12))
                              : -std::log(std::max(1.0 - sig, 1e-12));
    double dloss_ddot = sig - label;  // d/ddot of the branch above, unclamped
    if (grad_u) {
        grad_u->resize(u.size());
        for (std::size_t d = 0; d < u.size(); ++d) (*grad_u)[d] = dloss_ddot * v[d];
    }
    if (grad_v) {
        grad_v->resize(v.size());
        for (std::size_t d = 0; d < v.size(); ++d) (*grad_v)[d] = dloss_ddot * u[d];
    }
    return loss;
}

EmbeddingTable train_skipgram(const WalkCorpus& corpus, const ABoxGraph& g,
                              const StringPool& symbols, const SkipgramConfig& cfg,
                              std::vector<double>* epoch_losses) {
    if (cfg.dim == 0 || cfg.window == 0)
        throw std::invalid_argument("train_skipgram: dim and window must be positive");
    if (corpus.walks.empty()) throw std::invalid_argument("train_skipgram: empty corpus");

    const std::size_t n = g.triples().size();
    if (n == 0) {
        EmbeddingTable empty;
        empty.dim = cfg.dim;
        return empty;
    }
    std::vector<std::uint64_t> freq(n, 0);
    for (const auto& walk : corpus.walks)
        for (std::uint32_t node : walk) freq.at(node)++;

    std::vector<std::vector<double>> in_vecs(n), out_vecs(n);
    {
        Rng init_rng(Rng::derive(cfg.seed, 0x494e4954ull, 0));
        for (std::size_t i = 0; i < n; ++i) {
            in_vecs[i].resize(cfg.dim);
            out_vecs[i].assign(cfg.dim, 0.0);
            for (double& x : in_vecs[i]) x = (init_rng.next_double() - 0.5) / cfg.dim;
        }
    }

    NegativeSampler sampler(freq);
    const std::size_t total_walks = cfg.epochs * corpus.walks.size();
    if (epoch_losses) epoch_losses->clear();

    auto train_walk = [&](std::size_t global_walk, const std::vector<std::uint32_t>& walk,
                          Rng& rng, double& loss_sum, std::uint64_t& pairs) {
        double progress = static_cast<double>(global_walk) / static_cast<double>(total_walks);
        double alpha = cfg.lr * std::max(1.0 - progress, 1e-4);
        std::vector<double> delta(cfg.dim);
        for (std::size_t i = 0; i < walk.size(); ++i) {
            std::size_t lo = i > cfg.window ? i - cfg.window : 0;
            std::size_t hi = std::min(walk.size(), i + cfg.window + 1);
            for (std::size_t j = lo; j < hi; ++j) {
                if (j == i) continue;
                std::uint32_t center = walk[i];
                std::uint32_t context = walk[j];
                double* u = in_vecs[center].data();
                std::fill(delta.begin(), delta.end(), 0.0);
                for (std::size_t neg = 0; neg <= cfg.negatives; ++neg) {
                    std::uint32_t target;
                    double label;
                    if (neg == 0) {
                        target = context;
                        label = 1.0;
                    } else {
                        target = sampler.draw(rng);
                        if (target == context) continue;
                        label = 0.0;
                    }
                    double* v = out_vecs[target].data();
                    double dot = 0;
                    for (std::size_t d = 0; d < cfg.dim; ++d) dot += u[d] * v[d];
                    double sig = 1.0 / (1.0 + std::exp(-dot));
                    loss_sum -= label > 0.5 ? std::log(std::max(sig, 1e-12))
                                            : std::log(std::max(1.0 - sig, 1e-12));
                    double grad = (label - sig) * alpha;
                    for (std::size_t d = 0; d < cfg.dim; ++d) {
                        delta[d] += grad * v[d];
                        v[d] += grad * u[d];
                    }
                }
                for (std::size_t d = 0; d < cfg.dim; ++d) u[d] += delta[d];
                ++pairs;
            }
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0;
        std::uint64_t pairs = 0;
        if (cfg.threads <= 1) {
            for (std::size_t w = 0; w < corpus.walks.size(); ++w) {
                Rng rng(Rng::derive(cfg.seed, 0x57414c4bull + epoch, w));
                train_walk(epoch * corpus.walks.size() + w, corpus.walks[w], rng, loss_sum, pairs);
            }
        } else {
            std::vector<double> losses(corpus.walks.size(), 0.0);
            std::vector<std::uint64_t> counts(corpus.walks.size(), 0);
            parallel_for(corpus.walks.size(), cfg.threads, [&](std::size_t w) {
                Rng rng(Rng::derive(cfg.seed, 0x57414c4bull + epoch, w));
                train_walk(epoch * corpus.walks.size() + w, corpus.walks[w], rng, losses[w],
                           counts[w]);
            });
            for (std::size_t w = 0; w < corpus.walks.size(); ++w) {
                loss_sum += losses[w];
                pairs += counts[w];
            }
        }
        if (epoch_losses) epoch_losses->push_back(pairs ? loss_sum / pairs : 0.0);
    }

    EmbeddingTable table;
    table.dim = cfg.dim;
    for (std::size_t i = 0; i < n; ++i)
        table.add(fact_key(g.triples()[i], symbols), std::move(in_vecs[i]));
    return table;
}

namespace {

EmbeddingTable mean_table(
    const std::map<std::string, std::pair<std::vector<double>, std::size_t>>& sums,
    std::size_t dim) {
    EmbeddingTable out;
    out.dim = dim;
    for (const auto& [name, acc] : sums) {
        std::vector<double> v = acc.first;
        for (double& x : v) x /= static_cast<double>(acc.second);
        out.add(name, std::move(v));
    }
    return out;
}

}  // namespace

EmbeddingTable predicate_embeddings_from_facts(const EmbeddingTable& facts, const ABoxGraph& g,
                                               const StringPool& symbols) {
    std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
    for (const Triple& t : g.triples()) {
        const std::vector<double>* v = facts.find(fact_key(t, symbols));
        if (!v) throw UserError("no fact embedding for " + fact_key(t, symbols));
        auto& acc = sums[symbols.name(t.p)];
        if (acc.first.empty()) acc.first.assign(facts.dim, 0.0);
        for (std::size_t d = 0; d < facts.dim; ++d) acc.first[d] += (*v)[d];
        acc.second++;
    }
    return mean_table(sums, facts.dim);
}

EmbeddingTable entity_embeddings_from_facts(const EmbeddingTable& facts, const ABoxGraph& g,
                                            const StringPool& symbols) {
    std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
    auto accumulate = [&](EntityId e, const std::vector<double>& v) {
        auto& acc = sums[symbols.name(e)];
        if (acc.first.empty()) acc.first.assign(facts.dim, 0.0);
        for (std::size_t d = 0; d < facts.dim; ++d) acc.first[d] += v[d];
        acc.second++;
    };
    for (const Triple& t : g.triples()) {
        const std::vector<double>* v = facts.find(fact_key(t, symbols));
        if (!v) throw UserError("no fact embedding for " + fact_key(t, symbols));
        accumulate(t.s, *v);
        if (t.o != t.s) accumulate(t.o, *v);
    }
    return mean_table(sums, facts.dim);
}

std::vector<double> compose_fact_embedding(const std::vector<double>& s,
                                           const std::vector<double>& p,
                                           const std::vector<double>& o) {
    if (s.size() != p.size() || p.size() != o.size())
        throw std::invalid_argument("compose_fact_embedding: component dims differ");
    std::vector<double> out;
    out.reserve(3 * s.size());
    out.insert(out.end(), s.begin(), s.end());
    out.insert(out.end(), p.begin(), p.end());
    out.insert(out.end(), o.begin(), o.end());
    return out;
}

const char* embedding_mode_name(EmbeddingMode m) {
    return m == EmbeddingMode::Compositional ? "compositional" : "skipgram";
}

EmbeddingMode parse_embedding_mode(std::string_view name) {
    if (name == "compositional") return EmbeddingMode::Compositional;
    if (name == "skipgram") return EmbeddingMode::SkipGram;
    throw UserError("unknown embedding mode '" + std::string(name) +
                    "' (expected compositional or skipgram)");
}

FactEmbedder FactEmbedder::compositional(const EmbeddingTable& components,
                                         const StringPool& symbols) {
    FactEmbedder e;
    e.mode_ = EmbeddingMode::Compositional;
    e.table_ = &components;
    e.symbols_ = &symbols;
    e.fact_dim_ = 3 * components.dim;
    return e;
}

FactEmbedder FactEmbedder::skip_gram(const EmbeddingTable& facts, const ABoxGraph& g,
                                     const StringPool& symbols) {
    FactEmbedder e;
    e.mode_ = EmbeddingMode::SkipGram;
    e.table_ = &facts;
    e.g_ = &g;
    e.symbols_ = &symbols;
    e.fact_dim_ = facts.dim;

    auto accumulate = [&](auto& map, Sym key, const std::vector<double>& v) {
        auto& acc = map[key];
        if (acc.first.empty()) acc.first.assign(facts.dim, 0.0);
        for (std::size_t d = 0; d < facts.dim; ++d) acc.first[d] += v[d];
        acc.second++;
    };
    e.global_mean_.assign(facts.dim, 0.0);
    std::size_t total = 0;
    for (const Triple& t : g.triples()) {
        const std::vector<double>* v = facts.find(fact_key(t, symbols));
        if (!v) throw UserError("no fact embedding for " + fact_key(t, symbols));
        accumulate(e.subj_sum_, t.s, *v);
        accumulate(e.obj_sum_, t.o, *v);
        accumulate(e.pred_sum_, t.p, *v);
        for (std::size_t d = 0; d < facts.dim; ++d) e.global_mean_[d] += (*v)[d];
        ++total;
    }
    if (total) {
        for (double& x : e.global_mean_) x /= static_cast<double>(total);
    }
    return e;
}

std::vector<double> FactEmbedder::embed(const Triple& t) const {
    if (mode_ == EmbeddingMode::Compositional) {
        auto component = [&](Sym id) -> const std::vector<double>& {
            const std::string& name = symbols_->name(id);
            const std::vector<double>* v = table_->find(name);
            if (!v) throw UserError("no component embedding for '" + name + "'");
            return *v;
        };
        return compose_fact_embedding(component(t.s), component(t.p), component(t.o));
    }
    if (const std::vector<double>* v = table_->find(fact_key(t, *symbols_))) return *v;
    return fallback(t);
}

std::vector<double> FactEmbedder::fallback(const Triple& t) const {
    // Union mean over facts sharing the subject, predicate or object;
    // overlaps removed by inclusion-exclusion via the adjacency lists.
    std::vector<double> sum(fact_dim_, 0.0);
    std::size_t count = 0;
    auto add_role = [&](const auto& map, Sym key) {
        auto it = map.find(key);
        if (it == map.end()) return;
        for (std::size_t d = 0; d < fact_dim_; ++d) sum[d] += it->second.first[d];
        count += it->second.second;
    };
    add_role(subj_sum_, t.s);
    add_role(obj_sum_, t.o);
    add_role(pred_sum_, t.p);

    auto subtract_fact = [&](const Triple& f) {
        const std::vector<double>* v = table_->find(fact_key(f, *symbols_));
        for (std::size_t d = 0; d < fact_dim_; ++d) sum[d] -= (*v)[d];
        --count;
    };
    if (g_->known_entity(t.s))
        for (const auto& [p, o] : g_->out_edges(t.s)) {
            if (p == t.p) subtract_fact({t.s, p, o});  // subject & predicate overlap
            if (o == t.o) subtract_fact({t.s, p, o});  // subject & object overlap
        }
    if (g_->known_entity(t.o))
        for (const auto& [p, s] : g_->in_edges(t.o))
            if (p == t.p) subtract_fact({s, p, t.o});  // predicate & object overlap

    // The triple-overlap term is the fact itself, which is absent (this is
    // only reached for unseen facts), so no correction is needed.
    if (count == 0) return global_mean_;
    std::vector<double> out(fact_dim_);
    for (std::size_t d = 0; d < fact_dim_; ++d)
        out[d] = sum[d] / static_cast<double>(count);
    return out;
}

std::vector<std::vector<double>> embed_path(const DataPath& path, const FactEmbedder& embedder) {
    std::vector<std::vector<double>> out;
    out.reserve(path.steps.size());
    for (const OrientedFact& f : path.steps) out.push_back(embedder.embed(f.triple));
    return out;
}

}  // namespace kgcheck
