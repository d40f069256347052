#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ragopt {

/// All randomness in the harness flows through one mt19937_64 so that a run
/// is fully determined by its seed.
using Rng = std::mt19937_64;

/// Unbiased draw in [0, n). std::uniform_int_distribution is
/// implementation-defined, so splits and batch samples would not reproduce
/// across standard libraries; this rejection sampler does.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("uniform_below: n must be positive");
    }
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t spill = (max % n + 1) % n; // 2^64 mod n
    const std::uint64_t limit = max - spill;       // inclusive accept bound
    std::uint64_t r;
    do {
        r = rng();
    } while (r > limit);
    return r % n;
}

/// Fisher-Yates shuffle using uniform_below for portable determinism.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

/// k distinct indices drawn without replacement from [0, population).
inline std::vector<std::size_t> sample_indices(std::size_t population, std::size_t k, Rng& rng) {
    if (k > population) {
        throw std::invalid_argument("sample_indices: k exceeds population");
    }
    std::vector<std::size_t> idx(population);
    for (std::size_t i = 0; i < population; ++i) {
        idx[i] = i;
    }
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, population - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

inline std::string rng_state_to_string(const Rng& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

inline Rng rng_state_from_string(const std::string& state) {
    Rng rng;
    std::istringstream is(state);
    is >> rng;
    if (is.fail()) {
        throw std::invalid_argument("invalid PRNG state string");
    }
    return rng;
}

} // namespace ragopt
