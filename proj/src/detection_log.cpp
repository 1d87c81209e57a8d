#include "robotack/detection_log.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace robotack::sensing {

namespace {
constexpr const char* kHeader = "frame,channel,truth_id,class,cx,cy,w,h";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}
}  // namespace

void write_detection_log(std::ostream& out, const std::vector<Detection>& records) {
  out << kHeader << '\n' << std::setprecision(17);
  for (const auto& d : records) {
    out << d.frame << ',' << to_string(d.channel) << ',' << d.object_truth_id << ',' << to_string(d.cls) << ','
        << d.bbox.cx << ',' << d.bbox.cy << ',' << d.bbox.w << ',' << d.bbox.h << '\n';
  }
}

void write_detection_log(const std::filesystem::path& path, const std::vector<Detection>& records) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write detection log: " + path.string());
  write_detection_log(out, records);
}

std::vector<Detection> read_detection_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame,channel", 0) != 0)
    throw ConfigError("detection log: missing header");
  std::vector<Detection> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 8) throw ConfigError("detection log: bad column count on line " + std::to_string(lineno));
    try {
      Detection d;
      d.frame = std::stoll(c[0]);
      d.channel = parse_channel(c[1]);
      d.object_truth_id = std::stoi(c[2]);
      d.cls = parse_object_class(c[3]);
      d.bbox = {std::stod(c[4]), std::stod(c[5]), std::stod(c[6]), std::stod(c[7])};
      out.push_back(d);
    } catch (const std::logic_error&) {
      throw ConfigError("detection log: bad value on line " + std::to_string(lineno));
    }
  }
  return out;
}

std::vector<Detection> read_detection_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open detection log: " + path.string());
  return read_detection_log(in);
}

}  // namespace robotack::sensing
