#include "kgcheck/schema_patterns.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <mutex>

namespace kgcheck {

std::vector<PredicateId> SchemaPattern::predicates() const {
    std::vector<PredicateId> out;
    out.reserve(steps.size());
    for (const PatternStep& st : steps) out.push_back(st.predicate);
    return out;
}

std::string pattern_body(const SchemaPattern& sp, const StringPool& symbols) {
    std::string out = symbols.name(sp.start_class);
    out += '\t';
    for (const PatternStep& st : sp.steps) {
        out += '(';
        out += direction_marker(st.direction);
        out += ',';
        out += symbols.name(st.predicate);
        out += ',';
        out += symbols.name(st.to_class);
        out += ')';
    }
    return out;
}

PatternQueue::PatternQueue(std::size_t cap, const StringPool& symbols)
    : cap_(cap), symbols_(&symbols) {
    if (cap == 0) throw std::invalid_argument("PatternQueue: cap must be positive");
}

void PatternQueue::push(SchemaPattern sp) {
    Entry e{sp.relatedness, sp.steps.size(), pattern_body(sp, *symbols_), std::move(sp)};
    entries_.insert(std::move(e));
    if (entries_.size() > cap_) entries_.erase(std::prev(entries_.end()));
}

std::vector<SchemaPattern> PatternQueue::drain() {
    std::vector<SchemaPattern> out;
    out.reserve(entries_.size());
    for (auto it = entries_.begin(); it != entries_.end();)
        out.push_back(std::move(entries_.extract(it++).value().pattern));
    return out;
}

bool check_range(const SchemaPattern& sp, const std::set<ClassId>& ranges, const TBoxSpec& spec) {
    if (sp.steps.empty()) throw std::invalid_argument("check_range: empty pattern");
    ClassId terminal = sp.steps.back().to_class;
    for (ClassId r : ranges)
        if (spec.is_subclass_of(terminal, r)) return true;
    return false;
}

namespace {

// Partial pattern plus the oriented schema edges it has consumed; edges are
// indices into TBoxGraph::property_edges, so the no-reuse rule sees distinct
// (domain, range) edges of one predicate as distinct.
struct SearchNode {
    SchemaPattern pattern;
    std::vector<std::pair<std::uint32_t, Direction>> used;
    ClassId end;
};

bool uses(const SearchNode& n, std::uint32_t edge, Direction dir) {
    for (const auto& [e, d] : n.used)
        if (e == edge && d == dir) return true;
    return false;
}

}  // namespace

std::vector<SchemaPattern> extract_schema_patterns(PredicateId p, std::size_t k, std::size_t d,
                                                   const TBoxGraph& gs, const RelatednessMatrix& m,
                                                   const StringPool& symbols, std::size_t cap,
                                                   unsigned threads) {
    if (k == 0) throw std::invalid_argument("extract_schema_patterns: k must be positive");
    if (d == 0) throw std::invalid_argument("extract_schema_patterns: d must be positive");

    const std::vector<PredicateId> related = top_k_predicates(m, p, k);
    const std::set<PredicateId> related_set(related.begin(), related.end());
    const TBoxSpec& spec = gs.spec;

    // Predicates absent from the schema fall back to Thing on both sides.
    const bool annotated = spec.properties.count(p) != 0;
    const std::set<ClassId> domains = annotated ? spec.domains_of(p) : std::set<ClassId>{gs.thing};
    const std::set<ClassId> ranges = annotated ? spec.ranges_of(p) : std::set<ClassId>{gs.thing};

    std::vector<std::uint32_t> edge_pool;  // property edges labeled by a related predicate
    for (std::uint32_t i = 0; i < gs.property_edges.size(); ++i)
        if (related_set.count(gs.property_edges[i].pred)) edge_pool.push_back(i);

    auto start_ok = [&](ClassId c) {
        for (ClassId dm : domains)
            if (spec.comparable(c, dm)) return true;
        return false;
    };

    PatternQueue queue(cap, symbols);
    std::mutex queue_mu;

    parallel_for(related.size(), threads, [&](std::size_t task) {
        PredicateId seed_pred = related[task];
        std::vector<SearchNode> frontier;
        for (std::uint32_t i : edge_pool) {
            const TBoxEdge& e = gs.property_edges[i];
            if (e.pred != seed_pred) continue;
            if (start_ok(e.from)) {
                SearchNode n;
                n.pattern.start_class = e.from;
                n.pattern.steps.push_back({Direction::Forward, e.pred, e.to});
                n.used.push_back({i, Direction::Forward});
                n.end = e.to;
                frontier.push_back(std::move(n));
            }
            if (start_ok(e.to)) {
                SearchNode n;
                n.pattern.start_class = e.to;
                n.pattern.steps.push_back({Direction::Backward, e.pred, e.from});
                n.used.push_back({i, Direction::Backward});
                n.end = e.from;
                frontier.push_back(std::move(n));
            }
        }

        std::vector<SchemaPattern> admitted;
        for (std::size_t depth = 1; depth <= d && !frontier.empty(); ++depth) {
            for (SearchNode& n : frontier) {
                if (check_range(n.pattern, ranges, spec)) {
                    SchemaPattern sp = n.pattern;
                    sp.relatedness = path_relatedness(p, sp.predicates(), m);
                    admitted.push_back(std::move(sp));
                }
            }
            if (depth == d) break;
            std::vector<SearchNode> next;
            for (const SearchNode& n : frontier) {
                for (std::uint32_t i : edge_pool) {
                    const TBoxEdge& e = gs.property_edges[i];
                    if (spec.comparable(e.from, n.end) && !uses(n, i, Direction::Forward)) {
                        SearchNode ext = n;
                        ext.pattern.steps.push_back({Direction::Forward, e.pred, e.to});
                        ext.used.push_back({i, Direction::Forward});
                        ext.end = e.to;
                        next.push_back(std::move(ext));
                    }
                    if (spec.comparable(e.to, n.end) && !uses(n, i, Direction::Backward)) {
                        SearchNode ext = n;
                        ext.pattern.steps.push_back({Direction::Backward, e.pred, e.from});
                        ext.used.push_back({i, Direction::Backward});
                        ext.end = e.from;
                        next.push_back(std::move(ext));
                    }
                }
            }
            frontier = std::move(next);
        }

        std::lock_guard<std::mutex> lock(queue_mu);
        for (SchemaPattern& sp : admitted) queue.push(std::move(sp));
    });

    return queue.drain();
}

std::string PatternCacheKey::comment() const {
    return "# patterns p=" + predicate + " k=" + std::to_string(k) + " d=" + std::to_string(d) +
           " matrix=" + to_hex(matrix_hash);
}

std::string PatternCacheKey::filename() const {
    std::uint64_t h = fnv1a64(predicate);
    h = fnv1a64(std::to_string(k) + "|" + std::to_string(d) + "|" + to_hex(matrix_hash), h);
    std::string safe;
    for (char c : predicate)
        safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
    return safe + "-" + to_hex(h) + ".patterns";
}

std::optional<PatternCacheKey> parse_cache_key(std::string_view line) {
    const std::string_view prefix = "# patterns ";
    if (!line.starts_with(prefix)) return std::nullopt;
    PatternCacheKey key;
    bool have_p = false, have_k = false, have_d = false, have_m = false;
    for (auto tok : split_ws(line.substr(prefix.size()))) {
        auto eq = tok.find('=');
        if (eq == std::string_view::npos) return std::nullopt;
        std::string_view name = tok.substr(0, eq);
        std::string value(tok.substr(eq + 1));
        if (name == "p") {
            key.predicate = value;
            have_p = true;
        } else if (name == "k") {
            key.k = std::strtoull(value.c_str(), nullptr, 10);
            have_k = true;
        } else if (name == "d") {
            key.d = std::strtoull(value.c_str(), nullptr, 10);
            have_d = true;
        } else if (name == "matrix") {
            key.matrix_hash = std::strtoull(value.c_str(), nullptr, 16);
            have_m = true;
        }
    }
    if (!(have_p && have_k && have_d && have_m)) return std::nullopt;
    return key;
}

std::string patterns_to_string(const std::vector<SchemaPattern>& patterns,
                               const StringPool& symbols, const PatternCacheKey* key) {
    std::string out;
    if (key) out += key->comment() + "\n";
    for (const SchemaPattern& sp : patterns) {
        out += format_double(sp.relatedness);
        out += '\t';
        out += pattern_body(sp, symbols);
        out += '\n';
    }
    return out;
}

void save_pattern_cache(const std::string& path, const std::vector<SchemaPattern>& patterns,
                        const StringPool& symbols, const PatternCacheKey* key) {
    write_file(path, patterns_to_string(patterns, symbols, key));
}

namespace {

std::vector<PatternStep> parse_steps(std::string_view text, StringPool& symbols,
                                     const std::string& origin, std::size_t lineno) {
    std::vector<PatternStep> steps;
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text[pos] != '(') throw ParseError(origin, lineno, "expected '(' in step list");
        std::size_t close = text.find(')', pos);
        if (close == std::string_view::npos) throw ParseError(origin, lineno, "unterminated step");
        std::string_view inner = text.substr(pos + 1, close - pos - 1);
        if (inner.size() < 4 || inner[1] != ',')
            throw ParseError(origin, lineno, "malformed step: (" + std::string(inner) + ")");
        Direction dir;
        if (inner[0] == '>')
            dir = Direction::Forward;
        else if (inner[0] == '<')
            dir = Direction::Backward;
        else
            throw ParseError(origin, lineno, "bad direction marker in step");
        std::string_view rest = inner.substr(2);
        std::size_t comma = rest.rfind(',');
        if (comma == std::string_view::npos || comma == 0 || comma + 1 == rest.size())
            throw ParseError(origin, lineno, "malformed step: (" + std::string(inner) + ")");
        steps.push_back({dir, symbols.intern(rest.substr(0, comma)),
                         symbols.intern(rest.substr(comma + 1))});
        pos = close + 1;
    }
    if (steps.empty()) throw ParseError(origin, lineno, "pattern has no steps");
    return steps;
}

}  // namespace

std::vector<SchemaPattern> parse_patterns(const std::vector<std::string>& lines,
                                          StringPool& symbols, const std::string& origin,
                                          PatternCacheKey* key_out) {
    std::vector<SchemaPattern> out;
    std::size_t lineno = 0;
    for (const std::string& line : lines) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (key_out)
                if (auto key = parse_cache_key(line)) *key_out = *key;
            continue;
        }
        auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw ParseError(origin, lineno, "expected `score\\tstart_class\\tsteps`");
        std::string score_text(fields[0]);
        char* end = nullptr;
        double score = std::strtod(score_text.c_str(), &end);
        if (end != score_text.c_str() + score_text.size())
            throw ParseError(origin, lineno, "bad score: " + score_text);
        if (!out.empty() && score > out.back().relatedness)
            throw ParseError(origin, lineno, "patterns not sorted by descending score");
        SchemaPattern sp;
        sp.relatedness = score;
        sp.start_class = symbols.intern(fields[1]);
        sp.steps = parse_steps(fields[2], symbols, origin, lineno);
        out.push_back(std::move(sp));
    }
    return out;
}

std::vector<SchemaPattern> load_pattern_cache(const std::string& path, StringPool& symbols,
                                              PatternCacheKey* key_out) {
    return parse_patterns(read_lines(path), symbols, path, key_out);
}

}  // namespace kgcheck
