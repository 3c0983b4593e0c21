#pragma once

// Line-delimited stream files: one label token per line, '#' starts a
// comment line. Streams of positive integers are read as-is; any other token
// switches the whole file to dictionary encoding (dense 1-based ids in order
// of first appearance).

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "urns/urn_model.hpp"

namespace urns {

struct TokenDictionary {
  /// tokens[id - 1] is the token encoded as id.
  std::vector<std::string> tokens;

  bool empty() const noexcept { return tokens.empty(); }
};

struct ParsedStream {
  Stream stream;
  TokenDictionary dictionary;  ///< empty when the input was already integer labels
  std::vector<std::string> comments;
};

ParsedStream read_stream(std::istream& in);
ParsedStream read_stream_file(const std::string& path);

/// Writes comment lines (each prefixed with "# ") then one label per line.
void write_stream(std::ostream& out, const Stream& stream, const std::vector<std::string>& comments = {});

/// "token<TAB>id" per line.
void write_dictionary(std::ostream& out, const TokenDictionary& dictionary);

}  // namespace urns
