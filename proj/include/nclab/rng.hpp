#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nclab {

// Counter-based pseudo-random stream built on the splitmix64 finalizer.
// Every draw is a pure function of (seed, counter), so sequences are
// bit-identical across platforms and streams can be derived hierarchically:
// each (split, run, phase) triple gets its own independent stream.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    // Derives a child seed from a parent seed and a path of salts.
    static std::uint64_t derive_seed(std::uint64_t seed,
                                     std::initializer_list<std::uint64_t> path) {
        std::uint64_t s = mix(seed ^ 0x9e3779b97f4a7c15ULL);
        for (std::uint64_t salt : path) {
            s = mix(s ^ mix(salt + 0x632be59bd9b4e019ULL));
        }
        return s;
    }

    static RngStream derive(std::uint64_t seed,
                            std::initializer_list<std::uint64_t> path) {
        return RngStream(derive_seed(seed, path));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform index in [0, n). Modulo bias is negligible for any n we use.
    std::size_t next_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("next_index: n must be positive");
        return static_cast<std::size_t>(next_u64() % n);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Draws k distinct elements from `pool` without replacement (partial
    // Fisher-Yates on a copy). Result order follows the draw order.
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k) {
        if (k > pool.size())
            throw std::invalid_argument("sample_without_replacement: k exceeds pool size");
        std::vector<T> out;
        out.reserve(k);
        std::size_t n = pool.size();
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + next_index(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace nclab
