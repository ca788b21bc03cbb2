#pragma once

#include <string>

namespace sdnid {

std::string sha256_hex(const std::string& bytes);
// Throws kIo when the file cannot be read.
std::string file_sha256_hex(const std::string& path);

}  // namespace sdnid
