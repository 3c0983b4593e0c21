#pragma once

// urns command-line front end. run() is the whole program, callable in-process.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace urns::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, hex-encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace urns::cli
