#include "neuroadapt/montage.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace neuroadapt {

const std::array<std::string_view, 64>& montage_64() {
  static const std::array<std::string_view, 64> kLabels = {
      "Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FC5", "FC1", "FC2",  "FC6", "T7",  "C3",
      "Cz",  "C4",  "T8",  "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3",   "Pz",  "P4",
      "P8",  "PO9", "O1",  "Oz",  "O2",  "PO10", "AF7", "AF3", "AF4", "AF8", "F5",  "F1",  "F2",
      "F6",  "FT9", "FT7", "FC3", "FC4", "FT8", "FT10", "C5",  "C1",  "C2",  "C6",  "TP7", "CP3",
      "CPz", "CP4", "TP8", "P5",  "P1",  "P2",  "P6",  "PO7", "PO3", "POz", "PO4", "PO8"};
  return kLabels;
}

int channel_index(std::string_view label) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string want = lower(label);
  const auto& m = montage_64();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (lower(m[i]) == want) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown channel label '" + std::string(label) + "'");
}

std::vector<std::string> load_montage(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open montage file " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    labels.push_back(line.substr(b, e - b + 1));
  }
  return labels;
}

}  // namespace neuroadapt
