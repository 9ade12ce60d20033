#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace blockprnu {

// MSB-first bit cursor over an RBSP. Every read past the end throws BitstreamExhausted.
class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> data) noexcept : data_(data) {}

    std::uint32_t read_bit();
    bool read_flag() { return read_bit() != 0; }
    // n in [0, 32]
    std::uint32_t read_bits(int n);
    void skip_bits(std::size_t n);

    // Exp-Golomb ue(v) / se(v).
    std::uint32_t read_ue();
    std::int32_t read_se();

    std::size_t bit_position() const noexcept { return pos_; }
    std::size_t bits_left() const noexcept { return data_.size() * 8 - pos_; }
    bool byte_aligned() const noexcept { return pos_ % 8 == 0; }

    // True while RBSP data precedes the rbsp_stop_one_bit.
    bool more_rbsp_data() const noexcept;

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Maps an ue(v) codeNum onto se(v): 0, 1, -1, 2, -2, ...
constexpr std::int32_t se_from_ue(std::uint32_t k) noexcept {
    const auto magnitude = static_cast<std::int32_t>((static_cast<std::uint64_t>(k) + 1) / 2);
    return (k & 1U) != 0 ? magnitude : -magnitude;
}

}  // namespace blockprnu
