#include "kgcheck/path_extract.hpp"

#include <algorithm>
#include <deque>

namespace kgcheck {

bool PathSet::empty() const {
    for (const auto& bucket : by_length)
        if (!bucket.empty()) return false;
    return true;
}

std::size_t PathSet::total_paths() const {
    std::size_t n = 0;
    for (const auto& bucket : by_length) n += bucket.size();
    return n;
}

bool entity_type_ok(const GraphView& g, const TBoxSpec& spec, EntityId v, ClassId to_class) {
    if (to_class == spec.thing) return true;
    const auto& types = g.types_of(v);
    if (types.empty()) return true;
    bool all_thing = true;
    for (ClassId t : types) {
        if (t != spec.thing) all_thing = false;
        if (spec.is_subclass_of(t, to_class)) return true;
    }
    return all_thing;
}

namespace {

struct PatternWalk {
    const GraphView& g;
    const TBoxSpec& spec;
    const SchemaPattern& pattern;
    EntityId target;
    std::size_t max_paths;
    std::vector<OrientedFact> stack;
    std::vector<EntityId> visited;  // entities on the current chain, s first
    std::vector<DataPath>& out;

    bool on_chain(EntityId v) const {
        return std::find(visited.begin(), visited.end(), v) != visited.end();
    }

    void step(EntityId at, std::size_t i) {
        if (out.size() >= max_paths) return;
        const PatternStep& ps = pattern.steps[i];
        const bool last = i + 1 == pattern.steps.size();
        auto consider = [&](const Triple& t, EntityId next) {
            if (out.size() >= max_paths) return;
            if (last ? next != target : (next == target || on_chain(next))) return;
            if (!entity_type_ok(g, spec, next, ps.to_class)) return;
            stack.push_back({t, ps.direction});
            if (last) {
                DataPath path;
                path.steps = stack;
                path.pattern_score = pattern.relatedness;
                out.push_back(std::move(path));
            } else {
                visited.push_back(next);
                step(next, i + 1);
                visited.pop_back();
            }
            stack.pop_back();
        };
        if (ps.direction == Direction::Forward) {
            g.for_each_out(at, [&](PredicateId p, EntityId next) {
                if (p == ps.predicate) consider({at, p, next}, next);
            });
        } else {
            g.for_each_in(at, [&](PredicateId p, EntityId prev) {
                if (p == ps.predicate) consider({prev, p, at}, prev);
            });
        }
    }
};

}  // namespace

std::vector<DataPath> extract_paths_for_pattern(const GraphView& g, EntityId s, EntityId o,
                                                const SchemaPattern& pattern, const TBoxSpec& spec,
                                                std::size_t max_paths) {
    std::vector<DataPath> out;
    if (pattern.steps.empty() || s == o || max_paths == 0) return out;
    PatternWalk walk{g, spec, pattern, o, max_paths, {}, {s}, out};
    walk.step(s, 0);
    return out;
}

namespace {

// Min hop count to `target` ignoring edge direction, restricted to the view
// and the optional predicate filter. Entities out of reach stay at SIZE_MAX.
std::vector<std::size_t> hops_to(const GraphView& g, EntityId target, std::size_t limit,
                                 const std::optional<std::set<PredicateId>>& allowed) {
    std::vector<std::size_t> dist(g.base().entity_ceiling(), SIZE_MAX);
    if (target >= dist.size()) return dist;
    std::deque<EntityId> queue{target};
    dist[target] = 0;
    auto relax = [&](PredicateId p, EntityId next, std::size_t d) {
        if (allowed && !allowed->count(p)) return;
        if (dist[next] != SIZE_MAX) return;
        dist[next] = d;
        if (d < limit) queue.push_back(next);
    };
    while (!queue.empty()) {
        EntityId v = queue.front();
        queue.pop_front();
        std::size_t d = dist[v] + 1;
        g.for_each_out(v, [&](PredicateId p, EntityId next) { relax(p, next, d); });
        g.for_each_in(v, [&](PredicateId p, EntityId prev) { relax(p, prev, d); });
    }
    return dist;
}

struct FreeWalk {
    const GraphView& g;
    EntityId target;
    const PathExtractConfig& cfg;
    const std::vector<std::size_t>& dist;
    PathSet& out;
    Rng& rng;
    std::vector<std::size_t> seen_count;  // per length, including displaced ones
    std::vector<OrientedFact> stack;
    std::vector<EntityId> visited;

    bool allowed(PredicateId p) const {
        return !cfg.allowed_predicates || cfg.allowed_predicates->count(p);
    }
    bool on_chain(EntityId v) const {
        return std::find(visited.begin(), visited.end(), v) != visited.end();
    }

    // Reservoir per bucket: uniform over everything offered, memory bounded.
    void offer() {
        std::size_t len = stack.size();
        auto& bucket = out.by_length[len];
        std::size_t n = ++seen_count[len];
        DataPath path;
        path.steps = stack;
        if (bucket.size() < cfg.max_paths_per_length) {
            bucket.push_back(std::move(path));
        } else {
            std::size_t j = static_cast<std::size_t>(rng.next_below(n));
            if (j < bucket.size()) bucket[j] = std::move(path);
        }
    }

    void step(EntityId at) {
        std::size_t remaining = cfg.l_max - stack.size();
        if (remaining == 0) return;
        auto consider = [&](const Triple& t, EntityId next, Direction dir) {
            if (!allowed(t.p)) return;
            if (next == target) {
                stack.push_back({t, dir});
                offer();
                stack.pop_back();
                return;
            }
            if (remaining == 1 || on_chain(next)) return;
            if (next >= dist.size() || dist[next] == SIZE_MAX || dist[next] > remaining - 1) return;
            stack.push_back({t, dir});
            visited.push_back(next);
            step(next);
            visited.pop_back();
            stack.pop_back();
        };
        g.for_each_out(at, [&](PredicateId p, EntityId next) {
            consider({at, p, next}, next, Direction::Forward);
        });
        g.for_each_in(at, [&](PredicateId p, EntityId prev) {
            consider({prev, p, at}, prev, Direction::Backward);
        });
    }
};

void subsample(std::vector<DataPath>& bucket, std::size_t cap, Rng& rng) {
    if (bucket.size() <= cap) return;
    std::vector<std::size_t> idx(bucket.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < cap; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<DataPath> kept;
    kept.reserve(cap);
    for (std::size_t i : idx) kept.push_back(std::move(bucket[i]));
    bucket = std::move(kept);
}

}  // namespace

PathSet unconstrained_dfs(const GraphView& g, EntityId s, EntityId o,
                          const PathExtractConfig& cfg) {
    PathSet out(cfg.l_max);
    if (s == o || cfg.l_max == 0) return out;
    auto dist = hops_to(g, o, cfg.l_max, cfg.allowed_predicates);
    Rng rng(cfg.seed);
    FreeWalk walk{g, o, cfg, dist, out, rng,
                  std::vector<std::size_t>(cfg.l_max + 1, 0), {}, {s}};
    walk.step(s);
    return out;
}

PathSet extract_paths(const GraphView& base, const Triple& fact,
                      const std::vector<SchemaPattern>& patterns, const TBoxSpec& spec,
                      const PathExtractConfig& cfg) {
    TripleSet excluded;
    if (base.excluded()) excluded = *base.excluded();
    excluded.insert(fact);
    GraphView g(base.base(), excluded);

    std::vector<std::vector<DataPath>> per_pattern(patterns.size());
    parallel_for(patterns.size(), cfg.threads, [&](std::size_t i) {
        if (patterns[i].length() > cfg.l_max) return;
        per_pattern[i] =
            extract_paths_for_pattern(g, fact.s, fact.o, patterns[i], spec, cfg.per_pattern_cap);
        for (DataPath& p : per_pattern[i]) p.pattern_index = static_cast<std::int32_t>(i);
    });

    PathSet out(cfg.l_max);
    std::set<std::vector<OrientedFact>> seen;
    for (auto& paths : per_pattern)
        for (DataPath& p : paths)
            if (seen.insert(p.steps).second) out.by_length[p.length()].push_back(std::move(p));

    Rng rng(cfg.seed);
    for (std::size_t l = 1; l <= cfg.l_max; ++l)
        subsample(out.by_length[l], cfg.max_paths_per_length, rng);

    if (out.empty()) return unconstrained_dfs(g, fact.s, fact.o, cfg);
    return out;
}

std::string path_render(const DataPath& path, const StringPool& symbols) {
    std::string out = symbols.name(path.entry());
    for (const OrientedFact& f : path.steps) {
        if (f.direction == Direction::Forward) {
            out += " -[";
            out += symbols.name(f.triple.p);
            out += ">]- ";
        } else {
            out += " -[<";
            out += symbols.name(f.triple.p);
            out += "]- ";
        }
        out += symbols.name(f.exit());
    }
    return out;
}

std::string path_dump_line(const DataPath& path, const StringPool& symbols) {
    return std::to_string(path.length()) + "\t" + format_double(path.pattern_score) + "\t" +
           path_render(path, symbols);
}

std::string paths_to_string(const PathSet& ps, const StringPool& symbols) {
    std::string out;
    for (const auto& bucket : ps.by_length)
        for (const DataPath& p : bucket) out += path_dump_line(p, symbols) + "\n";
    return out;
}

}  // namespace kgcheck
