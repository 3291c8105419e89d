#include "kgcheck/relatedness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace kgcheck {

std::size_t EmbeddingTable::add(const std::string& key, std::vector<double> v) {
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
        throw UserError("embedding dim mismatch for key '" + key + "': expected " +
                        std::to_string(dim) + ", got " + std::to_string(v.size()));
    for (double x : v)
        if (!std::isfinite(x)) throw UserError("non-finite embedding component for key '" + key + "'");
    auto [it, inserted] = index.emplace(key, vectors.size());
    if (!inserted) {
        vectors[it->second] = std::move(v);
        return it->second;
    }
    vectors.push_back(std::move(v));
    keys.push_back(key);
    return vectors.size() - 1;
}

const std::vector<double>* EmbeddingTable::find(const std::string& key) const {
    auto it = index.find(key);
    return it == index.end() ? nullptr : &vectors[it->second];
}

std::string fact_key(const Triple& t, const StringPool& symbols) {
    return symbols.name(t.s) + "|" + symbols.name(t.p) + "|" + symbols.name(t.o);
}

EmbeddingTable load_embedding_table(const std::string& path) {
    auto lines = read_lines(path);
    EmbeddingTable table;
    std::size_t lineno = 0;
    for (const std::string& line : lines) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (table.dim == 0 && line.starts_with("dim=")) {
            table.dim = static_cast<std::size_t>(std::strtoul(line.c_str() + 4, nullptr, 10));
            if (table.dim == 0) throw ParseError(path, lineno, "bad dim header");
            continue;
        }
        auto fields = split_tabs(line);
        if (fields.size() != 2) throw ParseError(path, lineno, "expected `key\\tvalues`");
        std::vector<double> v;
        for (auto tok : split_ws(fields[1])) {
            char* end = nullptr;
            std::string tmp(tok);
            double x = std::strtod(tmp.c_str(), &end);
            if (end != tmp.c_str() + tmp.size()) throw ParseError(path, lineno, "bad number: " + tmp);
            v.push_back(x);
        }
        if (table.dim == 0) throw ParseError(path, lineno, "missing dim=<d> header");
        if (v.size() != table.dim)
            throw ParseError(path, lineno, "expected " + std::to_string(table.dim) + " components");
        table.add(std::string(fields[0]), std::move(v));
    }
    return table;
}

void save_embedding_table(const EmbeddingTable& table, const std::string& path) {
    std::string out = "dim=" + std::to_string(table.dim) + "\n";
    std::vector<std::string> sorted_keys = table.keys;
    std::sort(sorted_keys.begin(), sorted_keys.end());
    for (const std::string& key : sorted_keys) {
        out += key;
        out += '\t';
        const auto& v = *table.find(key);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ' ';
            out += format_double(v[i]);
        }
        out += '\n';
    }
    write_file(path, out);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: dim mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

RelatednessMatrix::RelatednessMatrix(std::vector<PredicateId> preds) : preds_(std::move(preds)) {
    std::sort(preds_.begin(), preds_.end());
    preds_.erase(std::unique(preds_.begin(), preds_.end()), preds_.end());
    for (std::size_t i = 0; i < preds_.size(); ++i) index_[preds_[i]] = i;
    scores_.assign(preds_.size() * preds_.size(), 0.0);
}

std::size_t RelatednessMatrix::at(PredicateId p) const {
    auto it = index_.find(p);
    if (it == index_.end()) throw UserError("predicate not present in relatedness matrix");
    return it->second;
}

double RelatednessMatrix::score(PredicateId a, PredicateId b) const {
    return scores_[at(a) * preds_.size() + at(b)];
}

void RelatednessMatrix::set_score(PredicateId a, PredicateId b, double v) {
    std::size_t i = at(a), j = at(b);
    scores_[i * preds_.size() + j] = v;
    scores_[j * preds_.size() + i] = v;
}

std::uint64_t RelatednessMatrix::content_hash(const StringPool& symbols) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < preds_.size(); ++i) {
        for (std::size_t j = i; j < preds_.size(); ++j) {
            h = fnv1a64(symbols.name(preds_[i]), h);
            h = fnv1a64(symbols.name(preds_[j]), h);
            h = fnv1a64(format_double(scores_[i * preds_.size() + j]), h);
        }
    }
    return h;
}

RelatednessMatrix build_relatedness_matrix(const EmbeddingTable& emb,
                                           const std::set<PredicateId>& preds,
                                           const StringPool& symbols, unsigned threads) {
    RelatednessMatrix m(std::vector<PredicateId>(preds.begin(), preds.end()));
    std::size_t n = m.size();
    if (n == 0) return m;

    std::vector<const std::vector<double>*> vecs(n, nullptr);
    const std::vector<double> zero(emb.dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        vecs[i] = emb.find(symbols.name(m.predicates()[i]));
        if (!vecs[i]) {
            std::cerr << "warning: no embedding for predicate '" << symbols.name(m.predicates()[i])
                      << "', using zero vector\n";
            vecs[i] = &zero;
        }
    }
    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j)
            m.set_score(m.predicates()[i], m.predicates()[j], cosine(*vecs[i], *vecs[j]));
    });
    return m;
}

RelatednessMatrix load_relatedness_matrix(const std::string& path, StringPool& symbols) {
    auto lines = read_lines(path);
    struct Entry {
        std::string a, b;
        double score;
    };
    std::vector<Entry> entries;
    std::set<std::string> names;
    std::size_t lineno = 0;
    for (const std::string& line : lines) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3) throw ParseError(path, lineno, "expected `p_i\\tp_j\\tscore`");
        std::string tmp(fields[2]);
        char* end = nullptr;
        double score = std::strtod(tmp.c_str(), &end);
        if (end != tmp.c_str() + tmp.size()) throw ParseError(path, lineno, "bad score: " + tmp);
        entries.push_back({std::string(fields[0]), std::string(fields[1]), score});
        names.insert(entries.back().a);
        names.insert(entries.back().b);
    }
    std::vector<PredicateId> preds;
    for (const std::string& name : names) preds.push_back(symbols.intern(name));
    RelatednessMatrix m(std::move(preds));
    // Missing diagonal entries default to 1 (self-relatedness).
    for (PredicateId p : m.predicates()) m.set_score(p, p, 1.0);
    for (const Entry& e : entries)
        m.set_score(*symbols.lookup(e.a), *symbols.lookup(e.b), e.score);
    return m;
}

void save_relatedness_matrix(const RelatednessMatrix& m, const StringPool& symbols,
                             const std::string& path) {
    std::string out;
    const auto& preds = m.predicates();
    std::vector<std::string> names;
    names.reserve(preds.size());
    for (PredicateId p : preds) names.push_back(symbols.name(p));
    std::vector<std::size_t> order(preds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
    for (std::size_t ii = 0; ii < order.size(); ++ii) {
        for (std::size_t jj = ii; jj < order.size(); ++jj) {
            std::size_t i = order[ii], j = order[jj];
            out += names[i];
            out += '\t';
            out += names[j];
            out += '\t';
            out += format_double(m.score(preds[i], preds[j]));
            out += '\n';
        }
    }
    write_file(path, out);
}

std::vector<PredicateId> top_k_predicates(const RelatednessMatrix& m, PredicateId p, std::size_t k) {
    if (k == 0) throw std::invalid_argument("top_k_predicates: k must be positive");
    if (!m.contains(p)) throw UserError("predicate not present in relatedness matrix");
    std::vector<PredicateId> others;
    for (PredicateId q : m.predicates())
        if (q != p) others.push_back(q);
    std::sort(others.begin(), others.end(), [&](PredicateId a, PredicateId b) {
        double sa = m.score(p, a), sb = m.score(p, b);
        if (sa != sb) return sa > sb;
        return a < b;
    });
    std::vector<PredicateId> out{p};
    for (PredicateId q : others) {
        if (out.size() >= k) break;
        out.push_back(q);
    }
    return out;
}

double path_relatedness(PredicateId p, const std::vector<PredicateId>& pattern_predicates,
                        const RelatednessMatrix& m) {
    if (pattern_predicates.empty())
        throw std::invalid_argument("path_relatedness: empty predicate list");
    double sum = 0;
    for (PredicateId q : pattern_predicates) sum += m.score(p, q);
    return sum / static_cast<double>(pattern_predicates.size());
}

}  // namespace kgcheck
