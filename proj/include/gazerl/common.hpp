#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gazerl {

/// 2D point/vector in normalized field coordinates. +u is right, +v is up.
struct Vec2 {
    double u = 0.0;
    double v = 0.0;

    Vec2 operator+(const Vec2& o) const { return {u + o.u, v + o.v}; }
    Vec2 operator-(const Vec2& o) const { return {u - o.u, v - o.v}; }
    Vec2 operator*(double s) const { return {u * s, v * s}; }
    bool operator==(const Vec2& o) const { return u == o.u && v == o.v; }

    double norm() const { return std::hypot(u, v); }
};

inline double clamp(double x, double lo, double hi) {
    return std::min(std::max(x, lo), hi);
}

inline Vec2 clamp_box(Vec2 p, double half_u, double half_v) {
    return {clamp(p.u, -half_u, half_u), clamp(p.v, -half_v, half_v)};
}

/// Closed axis-aligned box membership test.
inline bool in_box(Vec2 p, Vec2 center, double half_w, double half_h) {
    return std::abs(p.u - center.u) <= half_w && std::abs(p.v - center.v) <= half_h;
}

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a role tag,
/// so env noise, policy noise and weight init never share a stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(base ^ splitmix64(h) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform_in(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(rng);
}

/// One draw from U([-1, -0.5] u [0.5, 1]): velocities never start near zero.
inline double split_uniform(Rng& rng) {
    double u = uniform01(rng);
    return u < 0.5 ? u - 1.0 : u;
}

/// Draws k distinct indices from [0, n) by partial Fisher-Yates; order is the draw order.
inline std::vector<int> sample_without_replacement(Rng& rng, int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        int j = uniform_int(rng, i, n - 1);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

/// Fixed-size bit grid used for the binary observation maps.
struct BitGrid {
    int size = 0;
    std::vector<std::uint64_t> words;

    BitGrid() = default;
    explicit BitGrid(int n) : size(n), words((n + 63) / 64, 0) {}

    void set(int i) { words[i >> 6] |= (1ULL << (i & 63)); }
    bool test(int i) const { return (words[i >> 6] >> (i & 63)) & 1; }
    void clear() { std::fill(words.begin(), words.end(), 0); }

    int count() const {
        int c = 0;
        for (auto w : words) c += static_cast<int>(std::popcount(w));
        return c;
    }

    bool operator==(const BitGrid& o) const { return size == o.size && words == o.words; }

    /// Applies fn(i) to every set bit index in increasing order.
    template <typename Fn>
    void for_each_set(Fn&& fn) const {
        for (std::size_t w = 0; w < words.size(); ++w) {
            std::uint64_t bits = words[w];
            while (bits) {
                int b = std::countr_zero(bits);
                fn(static_cast<int>(w * 64 + b));
                bits &= bits - 1;
            }
        }
    }
};

/// Sample mean and (n-1) standard deviation.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd r;
    if (xs.empty()) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double q = 0.0;
        for (double x : xs) q += (x - r.mean) * (x - r.mean);
        r.std = std::sqrt(q / static_cast<double>(xs.size() - 1));
    }
    return r;
}

}  // namespace gazerl
