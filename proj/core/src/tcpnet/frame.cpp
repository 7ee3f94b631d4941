#include "ftcoll/tcpnet/frame.hpp"

#include <algorithm>
#include <string>

namespace ftcoll::tcp
{
    namespace
    {
        class Writer
        {
        public:
            explicit Writer(Bytes &out) : out_(out) {}

            void u8(std::uint8_t v) { out_.push_back(v); }
            void u32(std::uint32_t v)
            {
                for (int shift = 24; shift >= 0; shift -= 8)
                {
                    out_.push_back(static_cast<std::uint8_t>(v >> shift));
                }
            }
            void u64(std::uint64_t v)
            {
                for (int shift = 56; shift >= 0; shift -= 8)
                {
                    out_.push_back(static_cast<std::uint8_t>(v >> shift));
                }
            }
            std::size_t size() const { return out_.size(); }
            void patch_u32(std::size_t at, std::uint32_t v)
            {
                for (int i = 0; i < 4; ++i)
                {
                    out_[at + i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
                }
            }

        private:
            Bytes &out_;
        };

        class Reader
        {
        public:
            explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

            std::uint8_t u8() { return take(1)[0]; }
            std::uint32_t u32()
            {
                auto b = take(4);
                std::uint32_t v = 0;
                for (auto x : b)
                {
                    v = (v << 8) | x;
                }
                return v;
            }
            std::uint64_t u64()
            {
                auto b = take(8);
                std::uint64_t v = 0;
                for (auto x : b)
                {
                    v = (v << 8) | x;
                }
                return v;
            }
            std::span<const std::uint8_t> take(std::size_t n)
            {
                if (in_.size() - pos_ < n)
                {
                    throw MalformedFrame("frame truncated at byte " + std::to_string(pos_));
                }
                auto s = in_.subspan(pos_, n);
                pos_ += n;
                return s;
            }
            bool done() const { return pos_ == in_.size(); }

        private:
            std::span<const std::uint8_t> in_;
            std::size_t pos_ = 0;
        };

        void encode_failure_info(Writer &w, const FailureInfo &fi)
        {
            const auto at = w.size();
            w.u32(0);
            const auto start = w.size();
            std::visit(
                [&](const auto &r) {
                    using T = std::decay_t<decltype(r)>;
                    if constexpr (std::is_same_v<T, FailedList>)
                    {
                        w.u32(static_cast<std::uint32_t>(r.ids.size()));
                        for (auto id : r.ids)
                        {
                            w.u32(id);
                        }
                    }
                    else if constexpr (std::is_same_v<T, FailedCount>)
                    {
                        w.u32(r.count);
                        w.u8(r.subtree_failed ? 1 : 0);
                    }
                    else
                    {
                        w.u8(r.subtree_failed ? 1 : 0);
                    }
                },
                fi.repr());
            w.patch_u32(at, static_cast<std::uint32_t>(w.size() - start));
        }

        bool decode_bit(std::uint8_t b)
        {
            if (b > 1)
            {
                throw MalformedFrame("bit field holds " + std::to_string(b));
            }
            return b == 1;
        }

        FailureInfo decode_failure_info(Scheme scheme, std::span<const std::uint8_t> bytes)
        {
            Reader r(bytes);
            FailureInfo out(scheme);
            switch (scheme)
            {
            case Scheme::list: {
                FailedList l;
                const auto count = r.u32();
                if (count > bytes.size() / 4)
                {
                    throw MalformedFrame("failed-id count exceeds payload");
                }
                for (std::uint32_t i = 0; i < count; ++i)
                {
                    l.ids.push_back(r.u32());
                }
                if (std::adjacent_find(l.ids.begin(), l.ids.end(), std::greater_equal<>()) != l.ids.end())
                {
                    throw MalformedFrame("failed ids not strictly ascending");
                }
                out = FailureInfo(std::move(l));
                break;
            }
            case Scheme::count: {
                const auto count = r.u32();
                out = FailureInfo(FailedCount{count, decode_bit(r.u8())});
                break;
            }
            case Scheme::bit:
                out = FailureInfo(FailedBit{decode_bit(r.u8())});
                break;
            }
            if (!r.done())
            {
                throw MalformedFrame("trailing bytes in failure info");
            }
            return out;
        }
    } // namespace

    VersionMismatch::VersionMismatch(std::uint8_t got)
        : Error("wire version " + std::to_string(got) + ", expected " + std::to_string(wire_version))
    {
    }

    Frame probe_frame(FrameKind kind, ProcessId from, ProcessId to)
    {
        Frame f;
        f.kind = kind;
        f.envelope.from = from;
        f.envelope.to = to;
        return f;
    }

    Bytes encode_frame(const Envelope &env)
    {
        return encode_frame(Frame{FrameKind::data, env});
    }

    Bytes encode_frame(const Frame &f)
    {
        Bytes out;
        Writer w(out);
        w.u32(0);
        w.u8(wire_version);
        w.u8(static_cast<std::uint8_t>(f.kind));
        const auto &e = f.envelope;
        w.u64(e.op_id);
        w.u8(f.kind == FrameKind::data ? static_cast<std::uint8_t>(e.phase) : 0);
        w.u32(e.from);
        w.u32(e.to);
        w.u8(static_cast<std::uint8_t>(e.payload.failinfo.scheme()));
        encode_failure_info(w, e.payload.failinfo);
        w.u32(static_cast<std::uint32_t>(e.payload.value.size() * 8));
        for (auto x : e.payload.value)
        {
            w.u64(static_cast<std::uint64_t>(x));
        }
        w.patch_u32(0, static_cast<std::uint32_t>(out.size() - 4));
        return out;
    }

    std::optional<std::size_t> frame_size(std::span<const std::uint8_t> bytes)
    {
        if (bytes.size() < 4)
        {
            return std::nullopt;
        }
        Reader r(bytes.first(4));
        const std::size_t len = r.u32();
        if (len + 4 > max_frame_bytes)
        {
            throw MalformedFrame("frame of " + std::to_string(len) + " bytes exceeds the limit");
        }
        return len + 4;
    }

    Frame decode_frame(std::span<const std::uint8_t> bytes)
    {
        Reader r(bytes);
        const auto len = r.u32();
        if (len != bytes.size() - 4)
        {
            throw MalformedFrame("length prefix " + std::to_string(len) + " does not match " +
                                 std::to_string(bytes.size() - 4) + " bytes");
        }
        const auto version = r.u8();
        if (version != wire_version)
        {
            throw VersionMismatch(version);
        }
        Frame f;
        const auto kind = r.u8();
        if (kind < 1 || kind > 3)
        {
            throw MalformedFrame("unknown frame kind " + std::to_string(kind));
        }
        f.kind = static_cast<FrameKind>(kind);
        auto &e = f.envelope;
        e.op_id = r.u64();
        const auto phase = r.u8();
        if (f.kind == FrameKind::data)
        {
            if (phase < 1 || phase > 4)
            {
                throw MalformedFrame("unknown phase " + std::to_string(phase));
            }
            e.phase = static_cast<Phase>(phase);
        }
        else if (phase != 0)
        {
            throw MalformedFrame("probe frame with a phase");
        }
        e.from = r.u32();
        e.to = r.u32();
        const auto scheme = r.u8();
        if (scheme < 1 || scheme > 3)
        {
            throw MalformedFrame("unknown scheme " + std::to_string(scheme));
        }
        const auto fi_len = r.u32();
        e.payload.failinfo = decode_failure_info(static_cast<Scheme>(scheme), r.take(fi_len));
        const auto value_len = r.u32();
        if (value_len % 8 != 0)
        {
            throw MalformedFrame("value length not a multiple of 8");
        }
        auto value = r.take(value_len);
        Reader vr(value);
        for (std::uint32_t i = 0; i < value_len / 8; ++i)
        {
            e.payload.value.push_back(static_cast<std::int64_t>(vr.u64()));
        }
        if (!r.done())
        {
            throw MalformedFrame("trailing bytes after value");
        }
        return f;
    }
} // namespace ftcoll::tcp
