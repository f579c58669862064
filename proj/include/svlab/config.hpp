#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "svlab/distributions.hpp"

namespace svlab {

/// INI-style file: [section] headers, "key = value" lines, ';' comments.
using ConfigFile = std::map<std::string, ConfigSection>;

ConfigFile parse_config(std::string_view text);
ConfigFile read_config(const std::filesystem::path& path);
void write_config(std::ostream& os, const ConfigFile& file);

}  // namespace svlab
