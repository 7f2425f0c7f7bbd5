#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pm {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes (see tools/pm_main.cpp):
// invalid input / parse / format -> 3, numerical failures -> 4, usage -> 2.
// ---------------------------------------------------------------------------

struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    long line = -1;
    ParseError(const std::string& msg, long line_no = -1)
        : std::runtime_error(line_no >= 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/state violations of an internal API contract, naming the offender.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct InvalidStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. All randomness in the project flows through this class;
// the raw mt19937_64 output is mapped to doubles by fixed arithmetic so that
// streams are reproducible across standard-library implementations.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(split_mix(seed)) {}

    std::uint64_t next_u64() {
        // xorshift* keeps the implementation self-contained and portable.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; one value cached between calls.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n) by rejection; n must be positive.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream, e.g. one per cloud or per epoch.
    Rng fork(std::uint64_t tag) const { return Rng(split_mix(state_ ^ (tag * 0x9E3779B97F4A7C15ULL))); }

private:
    static std::uint64_t split_mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        x = x ^ (x >> 31);
        return x ? x : 0x6A09E667F3BCC909ULL;  // keep xorshift state nonzero
    }

    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// ---------------------------------------------------------------------------
// Parallelism. Worker count is capped by the PM_THREADS environment variable.
// parallel_for guarantees deterministic results as long as iterations write
// disjoint outputs; ordered reductions are the caller's responsibility.
// ---------------------------------------------------------------------------

int thread_limit();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// FNV-1a, used for embedding-cache content keys.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Round-trip-exact decimal rendering for CSV logs.
std::string fmt_double(double v);

}  // namespace pm
