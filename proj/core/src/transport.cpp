#include "ftcoll/transport.hpp"

namespace ftcoll
{
    std::string envelope_note(const Payload &p)
    {
        return "v=" + format_value(p.value) + " fi=" + format_failure_info(p.failinfo);
    }
} // namespace ftcoll
