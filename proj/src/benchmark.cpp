#include "kgcheck/benchmark.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <numeric>

namespace kgcheck {

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

std::string triple_text(const Triple& t, const StringPool& symbols) {
    return symbols.name(t.s) + "\t" + symbols.name(t.p) + "\t" + symbols.name(t.o);
}

// Name-order sort so file output does not depend on interning order.
void sort_by_names(std::vector<LabeledFact>& facts, const StringPool& symbols) {
    std::sort(facts.begin(), facts.end(), [&](const LabeledFact& a, const LabeledFact& b) {
        return triple_text(a.triple, symbols) < triple_text(b.triple, symbols);
    });
}

}  // namespace

std::vector<LabeledFact> generate_positives(const ABoxGraph& g, const StringPool& symbols,
                                            PredicateId p, std::size_t n, std::uint64_t seed) {
    std::vector<Triple> pool;
    for (const Triple& t : g.triples())
        if (t.p == p) pool.push_back(t);
    if (pool.empty())
        throw UserError("predicate '" + symbols.name(p) + "' has no facts in the graph");
    std::sort(pool.begin(), pool.end());

    std::size_t take = std::min(n, pool.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i)
        std::swap(pool[i], pool[i + rng.next_below(pool.size() - i)]);
    pool.resize(take);
    std::sort(pool.begin(), pool.end());

    std::vector<LabeledFact> out;
    out.reserve(take);
    for (const Triple& t : pool) out.push_back({t, 1, FactOrigin::KgPositive});
    return out;
}

std::vector<LabeledFact> generate_lcwa_negatives(const ABoxGraph& g, const StringPool& symbols,
                                                 PredicateId p,
                                                 const std::vector<LabeledFact>& positives,
                                                 std::size_t ratio, std::uint64_t seed) {
    if (positives.empty()) throw UserError("no positives to corrupt");

    std::set<EntityId> subj_set, obj_set;
    for (const Triple& t : g.triples())
        if (t.p == p) {
            subj_set.insert(t.s);
            obj_set.insert(t.o);
        }
    if (subj_set.empty())
        throw UserError("predicate '" + symbols.name(p) + "' has no facts in the graph");
    const std::vector<EntityId> subjects(subj_set.begin(), subj_set.end());
    const std::vector<EntityId> objects(obj_set.begin(), obj_set.end());

    ClassId thing = symbols.lookup(kThingName).value_or(kNoSym);
    auto wildcard = [&](const std::vector<ClassId>& types) {
        return types.empty() || (types.size() == 1 && types[0] == thing);
    };
    auto shares_type = [&](EntityId a, EntityId b) {
        const auto& ta = g.types_of(a);
        const auto& tb = g.types_of(b);
        if (wildcard(ta) || wildcard(tb)) return true;
        for (ClassId c : ta)
            if (std::find(tb.begin(), tb.end(), c) != tb.end()) return true;
        return false;
    };

    TripleSet used;
    std::vector<LabeledFact> out;
    std::size_t requested = 0;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        const Triple& t = positives[i].triple;
        requested += ratio;
        Rng rng(Rng::derive(seed, 0x4c435741ull, i));

        // Valid replacements per side for this positive; candidates are
        // removed as they get used up so the loop always terminates.
        auto candidates = [&](const std::vector<EntityId>& pool, EntityId replaced) {
            std::vector<EntityId> cand;
            for (EntityId e : pool)
                if (e != replaced && shares_type(e, replaced)) cand.push_back(e);
            return cand;
        };
        std::vector<EntityId> cand_s = candidates(subjects, t.s);
        std::vector<EntityId> cand_o = candidates(objects, t.o);

        std::size_t made = 0;
        while (made < ratio && (!cand_s.empty() || !cand_o.empty())) {
            bool corrupt_subject;
            if (cand_s.empty())
                corrupt_subject = false;
            else if (cand_o.empty())
                corrupt_subject = true;
            else
                corrupt_subject = rng.next_below(2) == 0;

            std::vector<EntityId>& cand = corrupt_subject ? cand_s : cand_o;
            std::size_t j = rng.next_below(cand.size());
            EntityId e = cand[j];
            cand[j] = cand.back();
            cand.pop_back();

            Triple corrupted = corrupt_subject ? Triple{e, t.p, t.o} : Triple{t.s, t.p, e};
            if (g.has_triple(corrupted) || !used.insert(corrupted).second) continue;
            out.push_back({corrupted, 0, FactOrigin::LcwaNegative});
            ++made;
        }
    }
    if (out.size() < requested)
        std::cerr << "note: generated " << out.size() << " of " << requested
                  << " requested negatives for predicate '" << symbols.name(p) << "'\n";
    return out;
}

PredicateBenchmark split_benchmark(PredicateId p, const std::vector<LabeledFact>& positives,
                                   const std::vector<LabeledFact>& negatives,
                                   double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw UserError("train fraction must lie strictly between 0 and 1");

    auto cut = [&](const std::vector<LabeledFact>& facts, std::uint64_t salt,
                   std::vector<LabeledFact>& train, std::vector<LabeledFact>& test) {
        std::size_t n_train =
            static_cast<std::size_t>(static_cast<double>(facts.size()) * train_fraction);
        if (n_train == 0 || n_train == facts.size())
            throw UserError("train fraction " + format_double(train_fraction) + " leaves a split "
                            "side empty (" + std::to_string(facts.size()) + " facts)");
        std::vector<std::size_t> idx(facts.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(Rng::derive(seed, salt));
        shuffle_indices(idx, rng);
        std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        std::sort(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
        for (std::size_t i = 0; i < facts.size(); ++i)
            (i < n_train ? train : test).push_back(facts[idx[i]]);
    };

    PredicateBenchmark out;
    out.predicate = p;
    cut(positives, 0x504f53ull, out.train_pos, out.test_pos);
    cut(negatives, 0x4e4547ull, out.train_neg, out.test_neg);
    return out;
}

ABoxGraph masked_copy(const ABoxGraph& g, const TripleSet& excluded, const StringPool& symbols) {
    ABoxGraph out;
    for (const Triple& t : g.triples())
        if (!excluded.count(t)) out.add_triple(t.s, t.p, t.o);
    for (EntityId e : g.entities())
        for (ClassId c : g.types_of(e)) out.set_type(e, c);
    out.finalize(symbols);
    return out;
}

BenchmarkSet build_benchmark(const ABoxGraph& g, const StringPool& symbols,
                             const std::vector<PredicateId>& predicates,
                             const BenchmarkConfig& cfg) {
    std::vector<PredicateId> preds = predicates.empty() ? g.predicates() : predicates;
    std::sort(preds.begin(), preds.end(),
              [&](PredicateId a, PredicateId b) { return symbols.name(a) < symbols.name(b); });
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());

    BenchmarkSet out;
    out.neg_ratio = cfg.neg_ratio;
    out.train_fraction = cfg.train_fraction;
    out.seed = cfg.seed;
    out.kg_fingerprint = kg_hash(g, symbols);

    std::vector<std::optional<PredicateBenchmark>> slots(preds.size());
    parallel_for(preds.size(), cfg.threads, [&](std::size_t i) {
        PredicateId p = preds[i];
        std::uint64_t pseed = Rng::derive(cfg.seed, fnv1a64(symbols.name(p)));
        auto pos = generate_positives(g, symbols, p, cfg.max_per_predicate,
                                      Rng::derive(pseed, 1));
        if (pos.size() < cfg.min_positives) {
            std::cerr << "note: skipping predicate '" << symbols.name(p) << "': only "
                      << pos.size() << " positives (min " << cfg.min_positives << ")\n";
            return;
        }
        auto neg = generate_lcwa_negatives(g, symbols, p, pos, cfg.neg_ratio,
                                           Rng::derive(pseed, 2));
        try {
            slots[i] = split_benchmark(p, pos, neg, cfg.train_fraction, Rng::derive(pseed, 3));
        } catch (const UserError& e) {
            std::cerr << "note: skipping predicate '" << symbols.name(p) << "': " << e.what()
                      << "\n";
        }
    });
    for (auto& slot : slots)
        if (slot) out.per_predicate.push_back(std::move(*slot));
    if (out.per_predicate.empty())
        throw UserError("no predicate produced a benchmark; the graph is too small or too "
                        "uniform for the requested settings");
    return out;
}

TripleSet benchmark_positives(const BenchmarkSet& b) {
    TripleSet out;
    for (const auto& pb : b.per_predicate) {
        for (const LabeledFact& f : pb.train_pos) out.insert(f.triple);
        for (const LabeledFact& f : pb.test_pos) out.insert(f.triple);
    }
    return out;
}

void collect_split(const BenchmarkSet& b, bool train, std::optional<PredicateId> only,
                   std::vector<Triple>& facts, std::vector<double>& labels) {
    for (const auto& pb : b.per_predicate) {
        if (only && pb.predicate != *only) continue;
        const auto& pos = train ? pb.train_pos : pb.test_pos;
        const auto& neg = train ? pb.train_neg : pb.test_neg;
        for (const LabeledFact& f : pos) {
            facts.push_back(f.triple);
            labels.push_back(1.0);
        }
        for (const LabeledFact& f : neg) {
            facts.push_back(f.triple);
            labels.push_back(0.0);
        }
    }
}

std::string benchmark_to_string(const BenchmarkSet& b, const StringPool& symbols) {
    std::string out = "# benchmark seed=" + std::to_string(b.seed) +
                      " ratio=" + std::to_string(b.neg_ratio) +
                      " fraction=" + format_double(b.train_fraction) +
                      " kg=" + to_hex(b.kg_fingerprint) + "\n";
    auto dump = [&](const std::vector<LabeledFact>& facts, const char* split, int label) {
        std::vector<LabeledFact> sorted = facts;
        sort_by_names(sorted, symbols);
        for (const LabeledFact& f : sorted)
            out += std::string(split) + "\t" + std::to_string(label) + "\t" +
                   triple_text(f.triple, symbols) + "\n";
    };
    for (const auto& pb : b.per_predicate) {
        dump(pb.train_pos, "train", 1);
        dump(pb.train_neg, "train", 0);
        dump(pb.test_pos, "test", 1);
        dump(pb.test_neg, "test", 0);
    }
    return out;
}

void save_benchmark(const BenchmarkSet& b, const StringPool& symbols, const std::string& path) {
    write_file(path, benchmark_to_string(b, symbols));
}

BenchmarkSet load_benchmark(const std::string& path, StringPool& symbols) {
    std::vector<std::string> lines = read_lines(path);
    BenchmarkSet out;
    bool saw_manifest = false;
    std::map<std::string, PredicateBenchmark> groups;  // by predicate name

    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string& line = lines[ln];
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# benchmark ", 0) != 0) continue;
            std::string manifest = line.substr(12);
            for (std::string_view tok : split_ws(manifest)) {
                std::size_t eq = tok.find('=');
                if (eq == std::string::npos)
                    throw ParseError(path, ln + 1, "bad manifest token: " + std::string(tok));
                std::string key(tok.substr(0, eq)), value(tok.substr(eq + 1));
                char* end = nullptr;
                if (key == "seed")
                    out.seed = std::strtoull(value.c_str(), &end, 10);
                else if (key == "ratio")
                    out.neg_ratio = std::strtoull(value.c_str(), &end, 10);
                else if (key == "fraction")
                    out.train_fraction = std::strtod(value.c_str(), &end);
                else if (key == "kg")
                    out.kg_fingerprint = std::strtoull(value.c_str(), &end, 16);
                else
                    throw ParseError(path, ln + 1, "unknown manifest key: " + key);
                if (end == value.c_str() || *end != '\0')
                    throw ParseError(path, ln + 1, "bad manifest value: " + std::string(tok));
            }
            saw_manifest = true;
            continue;
        }
        auto f = split_tabs(line);
        if (f.size() != 5)
            throw ParseError(path, ln + 1, "expected <split>\\t<label>\\t<s>\\t<p>\\t<o>");
        bool train;
        if (f[0] == "train")
            train = true;
        else if (f[0] == "test")
            train = false;
        else
            throw ParseError(path, ln + 1, "split must be 'train' or 'test', got: " + std::string(f[0]));
        int label;
        if (f[1] == "1")
            label = 1;
        else if (f[1] == "0")
            label = 0;
        else
            throw ParseError(path, ln + 1, "label must be 0 or 1, got: " + std::string(f[1]));

        Triple t{symbols.intern(f[2]), symbols.intern(f[3]), symbols.intern(f[4])};
        PredicateBenchmark& pb = groups[std::string(f[3])];
        pb.predicate = t.p;
        LabeledFact fact{t, label,
                         label == 1 ? FactOrigin::KgPositive : FactOrigin::LcwaNegative};
        (train ? (label == 1 ? pb.train_pos : pb.train_neg)
               : (label == 1 ? pb.test_pos : pb.test_neg))
            .push_back(fact);
    }
    if (!saw_manifest) throw ParseError(path, 1, "missing '# benchmark ...' manifest line");
    if (groups.empty()) throw ParseError(path, 1, "benchmark file holds no facts");
    for (auto& [name, pb] : groups) out.per_predicate.push_back(std::move(pb));
    return out;
}

std::vector<LabeledFact> load_external_facts(const std::string& path, StringPool& symbols) {
    std::vector<std::string> lines = read_lines(path);
    std::vector<LabeledFact> out;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string& line = lines[ln];
        if (line.empty() || line[0] == '#') continue;
        auto f = split_tabs(line);
        if (f.size() != 4) throw ParseError(path, ln + 1, "expected <s>\\t<p>\\t<o>\\t<label>");
        int label;
        if (f[3] == "1")
            label = 1;
        else if (f[3] == "0")
            label = 0;
        else
            throw ParseError(path, ln + 1, "label must be 0 or 1, got: " + std::string(f[3]));
        out.push_back({{symbols.intern(f[0]), symbols.intern(f[1]), symbols.intern(f[2])}, label,
                       FactOrigin::External});
    }
    if (out.empty()) throw ParseError(path, 1, "no labeled facts found");
    return out;
}

BenchmarkSet benchmark_from_external(const std::vector<LabeledFact>& facts, double train_fraction,
                                     std::uint64_t seed, const StringPool& symbols) {
    std::map<std::string, std::pair<std::vector<LabeledFact>, std::vector<LabeledFact>>> pools;
    for (const LabeledFact& f : facts)
        (f.label == 1 ? pools[symbols.name(f.triple.p)].first
                      : pools[symbols.name(f.triple.p)].second)
            .push_back(f);

    BenchmarkSet out;
    out.train_fraction = train_fraction;
    out.seed = seed;
    for (const auto& [name, pool] : pools) {
        PredicateId p = *symbols.lookup(name);
        try {
            out.per_predicate.push_back(split_benchmark(
                p, pool.first, pool.second, train_fraction, Rng::derive(seed, fnv1a64(name))));
        } catch (const UserError& e) {
            std::cerr << "note: skipping predicate '" << name << "': " << e.what() << "\n";
        }
    }
    if (out.per_predicate.empty())
        throw UserError("no predicate in the external corpus could be split");
    return out;
}

}  // namespace kgcheck
