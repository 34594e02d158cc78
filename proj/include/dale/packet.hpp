#pragma once

#include <cstdint>
#include <vector>

namespace dale {

enum class PacketKind { poll, iam_reply, cctx_broadcast };
enum class PacketEncoding { checksum, manchester };

/// A bit-level RF frame as transmitted. For checksum packets the payload
/// holds the data bytes plus the trailing checksum byte; for Manchester
/// packets it holds the symbol stream (two symbol bits per data bit).
struct Packet {
    PacketKind kind = PacketKind::iam_reply;
    PacketEncoding encoding = PacketEncoding::checksum;
    std::vector<std::uint8_t> payload;
    double air_time = 0.005; ///< seconds
    double timestamp = 0.0;  ///< transmission start, seconds
};

/// MSB-first bit expansion of a byte string.
std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes);

/// Inverse of bytes_to_bits; bit count must be a multiple of 8.
std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits);

/// Appends a modular-sum checksum byte (sum of payload bytes mod 256).
Packet encode_iam(const std::vector<std::uint8_t>& payload, PacketKind kind = PacketKind::iam_reply);

/// Verifies and strips the checksum byte; throws integrity_error on mismatch.
std::vector<std::uint8_t> decode_iam(const Packet& packet);

/// Manchester-codes a bit string: 1 -> symbols 10, 0 -> symbols 01. The
/// packet payload stores one symbol per element (0/1).
Packet encode_cctx(const std::vector<std::uint8_t>& bits);

/// Decodes a Manchester symbol stream; throws manchester_error on any 00 or
/// 11 symbol pair. Corruption that swaps a whole pair decodes silently to a
/// flipped bit.
std::vector<std::uint8_t> decode_cctx(const Packet& packet);

} // namespace dale
