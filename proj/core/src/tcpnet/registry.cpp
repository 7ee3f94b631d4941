#include "ftcoll/tcpnet/registry.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ftcoll::tcp
{
    namespace
    {
        template <class T>
        bool parse_number(std::string_view s, T &out)
        {
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            return ec == std::errc() && ptr == s.data() + s.size();
        }
    } // namespace

    std::string to_string(const Address &a)
    {
        return a.host + ":" + std::to_string(a.port);
    }

    Registry::Registry(std::vector<Address> addresses) : addresses_(std::move(addresses))
    {
        std::set<std::pair<std::string, std::uint16_t>> seen;
        for (const auto &a : addresses_)
        {
            if (a.host.empty())
            {
                throw RegistryError("empty host");
            }
            if (!seen.emplace(a.host, a.port).second)
            {
                throw RegistryError("address " + to_string(a) + " listed twice");
            }
        }
    }

    Registry Registry::parse(std::string_view text)
    {
        std::map<ProcessId, Address> entries;
        std::istringstream in{std::string(text)};
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos)
            {
                line.resize(hash);
            }
            std::istringstream words(line);
            std::string pid_text;
            std::string addr_text;
            std::string extra;
            if (!(words >> pid_text))
            {
                continue;
            }
            const auto where = "deployment line " + std::to_string(lineno) + ": ";
            if (!(words >> addr_text) || (words >> extra))
            {
                throw RegistryError(where + "expected `<pid> <host>:<port>`");
            }
            ProcessId pid = 0;
            if (!parse_number(pid_text, pid))
            {
                throw RegistryError(where + "bad process id '" + pid_text + "'");
            }
            const auto colon = addr_text.rfind(':');
            std::uint16_t port = 0;
            if (colon == std::string::npos || colon == 0 ||
                !parse_number(std::string_view(addr_text).substr(colon + 1), port) || port == 0)
            {
                throw RegistryError(where + "bad address '" + addr_text + "'");
            }
            if (!entries.emplace(pid, Address{addr_text.substr(0, colon), port}).second)
            {
                throw RegistryError(where + "process " + pid_text + " listed twice");
            }
        }
        std::vector<Address> addresses;
        for (const auto &[pid, addr] : entries)
        {
            if (pid != addresses.size())
            {
                throw RegistryError("deployment has no entry for process " + std::to_string(addresses.size()));
            }
            addresses.push_back(addr);
        }
        return Registry(std::move(addresses));
    }

    Registry Registry::load(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw RegistryError("cannot read deployment file " + path);
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    std::string Registry::format() const
    {
        std::string out;
        for (std::size_t p = 0; p < addresses_.size(); ++p)
        {
            out += std::to_string(p) + " " + to_string(addresses_[p]) + "\n";
        }
        return out;
    }

    const Address &Registry::at(ProcessId p) const
    {
        if (p >= addresses_.size())
        {
            throw RegistryError("no address for process " + std::to_string(p));
        }
        return addresses_[p];
    }
} // namespace ftcoll::tcp
