#include "dale/packet.hpp"

#include "dale/errors.hpp"

#include <stdexcept>

namespace dale {

std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes) {
    std::vector<std::uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (std::uint8_t byte : bytes)
        for (int b = 7; b >= 0; --b) bits.push_back((byte >> b) & 1u);
    return bits;
}

std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 8 != 0) throw std::invalid_argument("bits_to_bytes: bit count not a multiple of 8");
    std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        bytes[i / 8] = static_cast<std::uint8_t>((bytes[i / 8] << 1) | (bits[i] & 1u));
    return bytes;
}

Packet encode_iam(const std::vector<std::uint8_t>& payload, PacketKind kind) {
    if (payload.empty()) throw std::invalid_argument("encode_iam: payload must be non-empty");
    Packet packet;
    packet.kind = kind;
    packet.encoding = PacketEncoding::checksum;
    packet.payload = payload;
    unsigned sum = 0;
    for (std::uint8_t byte : payload) sum += byte;
    packet.payload.push_back(static_cast<std::uint8_t>(sum & 0xFFu));
    return packet;
}

std::vector<std::uint8_t> decode_iam(const Packet& packet) {
    if (packet.encoding != PacketEncoding::checksum)
        throw std::invalid_argument("decode_iam: packet is not checksum-encoded");
    if (packet.payload.size() < 2) throw integrity_error("decode_iam: truncated packet");
    unsigned sum = 0;
    for (std::size_t i = 0; i + 1 < packet.payload.size(); ++i) sum += packet.payload[i];
    if (static_cast<std::uint8_t>(sum & 0xFFu) != packet.payload.back())
        throw integrity_error("decode_iam: checksum mismatch");
    return {packet.payload.begin(), packet.payload.end() - 1};
}

Packet encode_cctx(const std::vector<std::uint8_t>& bits) {
    Packet packet;
    packet.kind = PacketKind::cctx_broadcast;
    packet.encoding = PacketEncoding::manchester;
    packet.payload.reserve(bits.size() * 2);
    for (std::uint8_t bit : bits) {
        packet.payload.push_back(bit ? 1 : 0);
        packet.payload.push_back(bit ? 0 : 1);
    }
    return packet;
}

std::vector<std::uint8_t> decode_cctx(const Packet& packet) {
    if (packet.encoding != PacketEncoding::manchester)
        throw std::invalid_argument("decode_cctx: packet is not Manchester-encoded");
    if (packet.payload.size() % 2 != 0) throw manchester_error("decode_cctx: odd symbol count");
    std::vector<std::uint8_t> bits;
    bits.reserve(packet.payload.size() / 2);
    for (std::size_t i = 0; i < packet.payload.size(); i += 2) {
        std::uint8_t first = packet.payload[i] & 1u;
        std::uint8_t second = packet.payload[i + 1] & 1u;
        if (first == second) throw manchester_error("decode_cctx: invalid symbol pair");
        bits.push_back(first);
    }
    return bits;
}

} // namespace dale
