#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wate {

/// One hop of a stream path, e.g. ("rep", 17) or ("fold", 3).
struct StreamKey {
    std::string label;
    std::uint64_t index = 0;

    bool operator==(const StreamKey&) const = default;
};

/// Portable sampler over a 64-bit Mersenne twister.
///
/// Only the engine's raw output is used; uniform, normal and integer draws
/// are computed here so results do not depend on the standard library's
/// distribution implementations.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, bound).
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via the Marsaglia polar method.
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// Keyed randomness: a root seed plus a path of (label, index) hops.
///
/// The stream seed is a hash of the whole path, so a consumer's draws depend
/// only on where it sits in the path tree and never on how many siblings ran
/// before it or on which thread.
class RngContract {
public:
    explicit RngContract(std::uint64_t root_seed) : root_seed_(root_seed) {}
    RngContract(std::uint64_t root_seed, std::vector<StreamKey> path)
        : root_seed_(root_seed), path_(std::move(path)) {}

    RngContract child(std::string_view label, std::uint64_t index) const;

    std::uint64_t root_seed() const noexcept { return root_seed_; }
    const std::vector<StreamKey>& path() const noexcept { return path_; }

    std::uint64_t stream_seed() const;
    Stream stream() const { return Stream(stream_seed()); }

private:
    std::uint64_t root_seed_;
    std::vector<StreamKey> path_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Order-insensitive digest of a row index set (indices are sorted first).
std::uint64_t digest_rows(std::span<const std::ptrdiff_t> rows);

}  // namespace wate
