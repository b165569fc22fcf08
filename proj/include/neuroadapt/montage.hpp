#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace neuroadapt {

// Channel labels of the 64-channel 10-20 montage in index order. Mirrors
// data/montage_64.txt.
const std::array<std::string_view, 64>& montage_64();

// Index of a label (case-insensitive). Throws std::invalid_argument.
int channel_index(std::string_view label);

// Reads a montage file: one label per line, '#' comments and blank lines
// ignored.
std::vector<std::string> load_montage(const std::filesystem::path& path);

}  // namespace neuroadapt
