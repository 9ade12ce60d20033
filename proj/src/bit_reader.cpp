#include "blockprnu/bit_reader.hpp"

#include <string>

#include "blockprnu/error.hpp"

namespace blockprnu {

std::uint32_t BitReader::read_bit() {
    if (pos_ >= data_.size() * 8) fail(ErrorKind::BitstreamExhausted, "read past end of RBSP");
    const std::uint32_t bit = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1U;
    ++pos_;
    return bit;
}

std::uint32_t BitReader::read_bits(int n) {
    if (n < 0 || n > 32) fail(ErrorKind::RangeError, "read_bits width " + std::to_string(n));
    if (static_cast<std::size_t>(n) > bits_left()) {
        fail(ErrorKind::BitstreamExhausted, "need " + std::to_string(n) + " bits, have " + std::to_string(bits_left()));
    }
    std::uint64_t value = 0;
    for (int i = 0; i < n; ++i) value = (value << 1) | read_bit();
    return static_cast<std::uint32_t>(value);
}

void BitReader::skip_bits(std::size_t n) {
    if (n > bits_left()) fail(ErrorKind::BitstreamExhausted, "skip past end of RBSP");
    pos_ += n;
}

std::uint32_t BitReader::read_ue() {
    int leading_zeros = 0;
    while (read_bit() == 0) {
        if (++leading_zeros > 31) fail(ErrorKind::MalformedStream, "exp-Golomb prefix longer than 31 bits");
    }
    if (leading_zeros == 0) return 0;
    const std::uint64_t suffix = read_bits(leading_zeros);
    return static_cast<std::uint32_t>((std::uint64_t{1} << leading_zeros) - 1 + suffix);
}

std::int32_t BitReader::read_se() { return se_from_ue(read_ue()); }

bool BitReader::more_rbsp_data() const noexcept {
    const std::size_t total = data_.size() * 8;
    if (pos_ >= total) return false;
    // Locate the last set bit (the stop bit); anything before it is payload.
    std::size_t last_one = total;
    for (std::size_t byte = data_.size(); byte-- > 0;) {
        if (data_[byte] != 0) {
            for (int b = 0; b < 8; ++b) {
                if ((data_[byte] >> b) & 1U) {
                    last_one = byte * 8 + static_cast<std::size_t>(7 - b);
                    break;
                }
            }
            break;
        }
    }
    if (last_one == total) return false;
    return pos_ < last_one;
}

}  // namespace blockprnu
