#include "wate/rng.hpp"

#include <algorithm>
#include <cmath>

namespace wate {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t Stream::below(std::uint64_t bound) {
    // Rejection on the top of the range keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
}

double Stream::normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    return u * f;
}

RngContract RngContract::child(std::string_view label, std::uint64_t index) const {
    auto path = path_;
    path.push_back({std::string(label), index});
    return RngContract(root_seed_, std::move(path));
}

std::uint64_t RngContract::stream_seed() const {
    std::uint64_t h = splitmix64(root_seed_);
    for (const auto& key : path_) {
        h = splitmix64(h ^ fnv1a(key.label));
        h = splitmix64(h ^ (key.index * 0xd1342543de82ef95ULL + 1));
    }
    return h;
}

std::uint64_t digest_rows(std::span<const std::ptrdiff_t> rows) {
    std::vector<std::ptrdiff_t> sorted(rows.begin(), rows.end());
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto r : sorted) h = splitmix64(h ^ static_cast<std::uint64_t>(r));
    return splitmix64(h ^ sorted.size());
}

}  // namespace wate
