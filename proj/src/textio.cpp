#include "nmp/textio.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace nmp {

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double snap_g9(double v) { return parse_double(format_g9(v)); }

Vec snap_g9(const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = snap_g9(v[i]);
  return out;
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::runtime_error("bad float: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join_g9(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_g9(v[i]);
  }
  return out;
}

Vec parse_vec(std::string_view text, const char* what) {
  if (text.empty()) return Vec(0);
  const auto parts = split(text, ',');
  Vec v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      v[static_cast<Eigen::Index>(i)] = parse_double(parts[i]);
    } catch (const std::exception&) {
      throw std::runtime_error(std::string(what) + ": bad float '" + parts[i] +
                               "'");
    }
  }
  return v;
}

}  // namespace nmp
