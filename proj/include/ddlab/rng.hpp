#pragma once

#include <cstdint>
#include <string_view>

namespace ddlab {

/// Counter-based random stream. Draw i is a pure function of (key, i), so a
/// stream can be recreated anywhere and its position audited.
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Standard normal via Box-Muller; consumes exactly two raw draws.
    double normal();

    /// Number of raw 64-bit draws consumed so far.
    std::uint64_t position() const { return counter_; }
    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Derives independent substreams from a master seed. The substream key is a
/// stable hash of (master_seed, purpose, replicate, index) and does not
/// depend on how work is partitioned across threads.
class RngPolicy {
public:
    explicit RngPolicy(std::uint64_t master_seed) : master_seed_(master_seed) {}

    Stream stream(std::string_view purpose, std::uint64_t replicate, std::uint64_t index) const;
    std::uint64_t master_seed() const { return master_seed_; }

private:
    std::uint64_t master_seed_;
};

} // namespace ddlab
