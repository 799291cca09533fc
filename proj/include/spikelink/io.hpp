#pragma once

#include <map>
#include <string>
#include <vector>

#include "spikelink/errors.hpp"

namespace spikelink::io {

// Writes via a temp file + rename so readers never observe partial output.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Line-oriented key=value text ('#' comments allowed). Used for manifests
// and experiment configs.
std::map<std::string, std::string> parse_kv(const std::string& text);
std::string format_kv(const std::vector<std::pair<std::string, std::string>>& kv);

std::string format_double(double v);

// CSV with '#' provenance header lines (the full flag set of the command)
// followed by a column header and rows.
struct CsvDoc {
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
  void write(const std::string& path) const;
};

}  // namespace spikelink::io
