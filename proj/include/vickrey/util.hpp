#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace vickrey {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Current threshold, read once from VICKREY_LOG_LEVEL (default: warn).
LogLevel log_level();
void set_log_level(LogLevel level);
void log(LogLevel level, std::string_view message);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double value);

/// Lower-case hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Opens for reading/writing or throws Error(io).
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace vickrey
