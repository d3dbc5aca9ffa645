#pragma once
#include <sstream>
#include <stdexcept>
#include <string>

namespace corptax {

// All precondition failures surface as std::invalid_argument carrying the
// offending parameter name and value.
inline void require(bool ok, const std::string& msg)
{
    if (!ok) throw std::invalid_argument(msg);
}

inline std::string range_msg(const char* name, double got, const char* range)
{
    std::ostringstream os;
    os << name << " must be in " << range << "; got " << got;
    return os.str();
}

inline void require_open01(double x, const char* name)
{
    require(x > 0.0 && x < 1.0, range_msg(name, x, "(0,1)"));
}

inline void require_unit_halfopen(double x, const char* name) // [0,1)
{
    require(x >= 0.0 && x < 1.0, range_msg(name, x, "[0,1)"));
}

inline void require_unit_closed(double x, const char* name) // [0,1]
{
    require(x >= 0.0 && x <= 1.0, range_msg(name, x, "[0,1]"));
}

inline void require_halfopen_unit(double x, const char* name) // (0,1]
{
    require(x > 0.0 && x <= 1.0, range_msg(name, x, "(0,1]"));
}

inline void require_positive(double x, const char* name)
{
    require(x > 0.0, range_msg(name, x, "(0,inf)"));
}

} // namespace corptax
