#pragma once

#include "ftcoll/transport.hpp"
#include "ftcoll/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ftcoll::tcp
{
    inline constexpr std::uint8_t wire_version = 1;

    enum class FrameKind : std::uint8_t
    {
        data = 1,
        probe = 2,
        probe_ack = 3,
    };

    /// Probe frames carry only from/to; their phase byte is 0 on the wire.
    struct Frame
    {
        FrameKind kind = FrameKind::data;
        Envelope envelope;
        friend bool operator==(const Frame &, const Frame &) = default;
    };

    class MalformedFrame : public Error
    {
    public:
        using Error::Error;
    };

    class VersionMismatch : public Error
    {
    public:
        explicit VersionMismatch(std::uint8_t got);
    };

    using Bytes = std::vector<std::uint8_t>;

    /// Layout, all integers big-endian:
    ///   length(4) version(1) kind(1) op_id(8) phase(1) from(4) to(4)
    ///   scheme(1) failinfo_len(4) failinfo value_len(4) value
    /// length counts every byte after itself. Failure info is count(4) plus
    /// sorted ids(4 each) for list, count(4) plus bit(1) for count, bit(1)
    /// for bit. The value is a sequence of 8-byte elements.
    Bytes encode_frame(const Frame &f);
    Bytes encode_frame(const Envelope &env);
    Frame probe_frame(FrameKind kind, ProcessId from, ProcessId to);

    /// Decodes exactly one frame occupying the whole buffer.
    Frame decode_frame(std::span<const std::uint8_t> bytes);

    /// Total size (prefix included) of the frame starting at `bytes`, once
    /// the prefix is available. Throws MalformedFrame above `max_frame_bytes`.
    std::optional<std::size_t> frame_size(std::span<const std::uint8_t> bytes);
    inline constexpr std::size_t max_frame_bytes = 64u << 20;
} // namespace ftcoll::tcp
