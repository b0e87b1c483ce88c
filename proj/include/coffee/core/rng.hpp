#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace coffee {

// Seeded generator with a platform-independent sample stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so the
// derived samples below are computed by hand from raw 64-bit draws:
//   uniform(): top 53 bits scaled to [0, 1)
//   normal():  Box-Muller on two uniforms, second value cached
//   below(n):  rejection sampling on the top bits, unbiased
class Rng {
  public:
    static constexpr const char* algorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    std::size_t below(std::size_t n);

    // Fisher-Yates with below(); std::shuffle is not portable across libraries.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    // Independent child stream, e.g. one per training epoch.
    Rng fork() { return Rng(next_u64()); }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace coffee
