#include "svlab/config.hpp"

#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "svlab/error.hpp"

namespace svlab {

ConfigFile parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is{std::string(text)};
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::invalid_input, fmt::format("config line {}: {}", e.line(), e.message()));
  }
  ConfigFile out;
  for (const auto& [name, section] : tree) {
    if (!section.data().empty())
      throw Error(ErrorCode::invalid_input, fmt::format("config key '{}' outside of any section", name));
    auto& dst = out[name];
    for (const auto& [key, value] : section) dst[key] = value.get_value<std::string>();
  }
  return out;
}

ConfigFile read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_config(std::ostream& os, const ConfigFile& file) {
  bool first = true;
  for (const auto& [name, section] : file) {
    if (!first) os << '\n';
    first = false;
    os << '[' << name << "]\n";
    for (const auto& [key, value] : section) os << key << " = " << value << '\n';
  }
}

}  // namespace svlab
