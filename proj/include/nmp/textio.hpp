#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nmp/types.hpp"

namespace nmp {

// Parse failure with file/line context.
struct ParseError : std::runtime_error {
  ParseError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  int line_number;
};

// Dataset and corpus files use 9 significant digits; checkpoints and resume
// state use 17 so a double round-trips exactly.
std::string format_g9(double v);
std::string format_g17(double v);

// Snaps a value to what it becomes after one g9 write/read cycle. Generated
// datasets are snapped so that saving and loading them is the identity.
double snap_g9(double v);
Vec snap_g9(const Vec& v);

double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

// Formats "v1,v2,..." / parses the same.
std::string join_g9(const Vec& v);
Vec parse_vec(std::string_view text, const char* what);

}  // namespace nmp
