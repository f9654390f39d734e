#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace chiropath {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& file);

}  // namespace chiropath
