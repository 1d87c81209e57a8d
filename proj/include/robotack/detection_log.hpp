#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "robotack/sensing.hpp"

namespace robotack::sensing {

// CSV with header frame,channel,truth_id,class,cx,cy,w,h. Truth-channel rows
// carry the noiseless boxes that detections are paired against.
void write_detection_log(std::ostream& out, const std::vector<Detection>& records);
void write_detection_log(const std::filesystem::path& path, const std::vector<Detection>& records);
std::vector<Detection> read_detection_log(std::istream& in);
std::vector<Detection> read_detection_log(const std::filesystem::path& path);

}  // namespace robotack::sensing
