#pragma once

#include <map>
#include <string>
#include <string_view>

namespace hbesso {

// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view s);
std::string url_decode(std::string_view s);  // '+' decodes to a space

// "a=1&b=2" into a map; later duplicates win.
std::map<std::string, std::string> parse_form(std::string_view body);
std::string build_form(const std::map<std::string, std::string>& fields);

}  // namespace hbesso
