#pragma once

#include "ftcoll/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ftcoll::tcp
{
    struct Address
    {
        std::string host;
        std::uint16_t port = 0;

        friend bool operator==(const Address &, const Address &) = default;
    };

    std::string to_string(const Address &a);

    class RegistryError : public Error
    {
    public:
        using Error::Error;
    };

    /// Process id to listening address, total over 0..n-1 with distinct
    /// addresses. Deployment files hold one `<pid> <host>:<port>` per line;
    /// `#` starts a comment.
    class Registry
    {
    public:
        Registry() = default;
        explicit Registry(std::vector<Address> addresses);

        static Registry parse(std::string_view text);
        static Registry load(const std::string &path);
        std::string format() const;

        std::size_t size() const noexcept { return addresses_.size(); }
        const Address &at(ProcessId p) const;

        friend bool operator==(const Registry &, const Registry &) = default;

    private:
        std::vector<Address> addresses_;
    };
} // namespace ftcoll::tcp
