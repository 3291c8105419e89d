#ifndef KGCHECK_COMMON_HPP
#define KGCHECK_COMMON_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace kgcheck {

// Dense handle into a StringPool. Entities, predicates and classes share one
// pool, so a name used in several roles gets a single handle.
using Sym = std::uint32_t;
using EntityId = Sym;
using PredicateId = Sym;
using ClassId = Sym;

inline constexpr Sym kNoSym = 0xffffffffu;

// Thrown for bad user input (missing files, malformed lines, bad flags).
// The CLI maps this to exit code 1; anything else is an internal error (2).
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : UserError {
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : UserError(file + ":" + std::to_string(line) + ": " + what) {}
};

// Append-only interner. Handles are dense and assigned in first-appearance
// order, so identical input bytes always produce identical tables.
class StringPool {
public:
    Sym intern(std::string_view s) {
        auto it = index_.find(std::string(s));
        if (it != index_.end()) return it->second;
        Sym id = static_cast<Sym>(names_.size());
        names_.emplace_back(s);
        index_.emplace(names_.back(), id);
        return id;
    }
    std::optional<Sym> lookup(std::string_view s) const {
        auto it = index_.find(std::string(s));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    const std::string& name(Sym id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, Sym> index_;
};

// Deterministic RNG with hand-rolled draws, because
// std::uniform_*_distribution is implementation-defined and outputs must be
// reproducible byte-for-byte across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64; small, fast, and fully specified.
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // Uniform in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("next_below(0)");
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }
    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // Uniform in [lo, hi).
    double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Derive an independent stream; used for per-task seeding so results do
    // not depend on worker scheduling.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        Rng r(seed ^ (a * 0xd1342543de82ef95ull) ^ (b * 0xaf251af3b0f025b5ull + 1));
        r.next_u64();
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

// FNV-1a, used for content hashes in manifests and cache keys.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(std::uint64_t v);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// Chunked parallel map: fn(i) fills slot i of a preallocated result vector,
// so output is identical no matter how work is scheduled.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

std::vector<std::string> read_lines(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Splits on single tabs; no escaping (names must not contain tabs).
std::vector<std::string_view> split_tabs(std::string_view line);
std::vector<std::string_view> split_ws(std::string_view line);

}  // namespace kgcheck

#endif
