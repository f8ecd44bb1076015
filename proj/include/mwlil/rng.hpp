#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mwlil {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Maps a 128-bit counter under a 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// A reproducible random stream identified by (master_seed, stream_id).
///
/// The master seed is the Philox key; the stream id occupies the upper half
/// of the counter and the block index the lower half, so every stream has
/// 2^64 blocks (2^65 64-bit outputs) and distinct streams never overlap.
/// Satisfies std::uniform_random_bit_generator.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform double on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// One fair bit; consumes the 64-bit output word bit by bit.
    bool bit() {
        if (bits_left_ == 0) {
            bit_word_ = (*this)();
            bits_left_ = 64;
        }
        const bool b = bit_word_ & 1u;
        bit_word_ >>= 1;
        --bits_left_;
        return b;
    }

    /// Uniform integer on [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t blocks_used() const { return block_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;  // remaining 64-bit words in buffer_ (0..2)
    std::uint64_t bit_word_ = 0;
    int bits_left_ = 0;
};

}  // namespace mwlil
