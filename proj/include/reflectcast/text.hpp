#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace reflectcast::text {

std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_words(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
// Text up to and including the first sentence terminator, or all of it.
std::string first_sentence(std::string_view s);

}  // namespace reflectcast::text
