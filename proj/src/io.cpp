#include "spikelink/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace spikelink::io {

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw DataError("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot rename " + tmp + " to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("key=value expected at line " + std::to_string(lineno));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string format_kv(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string format_double(double v) {
  // shortest representation that parses back to the same double
  char buf[40];
  for (int prec = 12; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string CsvDoc::to_string() const {
  std::string out;
  for (const auto& [k, v] : provenance) {
    out += "# ";
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  return out;
}

void CsvDoc::write(const std::string& path) const {
  atomic_write_file(path, to_string());
}

}  // namespace spikelink::io
