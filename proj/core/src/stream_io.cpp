#include "urns/stream_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace urns {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_label(std::string_view token, Label& out) {
  if (token.empty() || token.front() == '+' || token.front() == '-') return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && out >= 1;
}

}  // namespace

ParsedStream read_stream(std::istream& in) {
  ParsedStream parsed;
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto token = trim(line);
    if (token.empty()) continue;
    if (token.front() == '#') {
      parsed.comments.emplace_back(trim(token.substr(1)));
      continue;
    }
    tokens.emplace_back(token);
  }
  if (tokens.empty()) throw std::invalid_argument("stream input contains no labels");

  std::vector<Label>& labels = parsed.stream.labels;
  labels.reserve(tokens.size());
  bool numeric = true;
  for (const auto& t : tokens) {
    Label value = 0;
    if (!parse_label(t, value)) {
      numeric = false;
      break;
    }
    labels.push_back(value);
  }
  if (numeric) return parsed;

  labels.clear();
  std::unordered_map<std::string, Label> ids;
  for (auto& t : tokens) {
    auto [it, inserted] = ids.try_emplace(t, parsed.dictionary.tokens.size() + 1);
    if (inserted) parsed.dictionary.tokens.push_back(t);
    labels.push_back(it->second);
  }
  return parsed;
}

ParsedStream read_stream_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open stream file: " + path);
  return read_stream(in);
}

void write_stream(std::ostream& out, const Stream& stream, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (Label l : stream.labels) out << l << '\n';
}

void write_dictionary(std::ostream& out, const TokenDictionary& dictionary) {
  for (std::size_t i = 0; i < dictionary.tokens.size(); ++i) out << dictionary.tokens[i] << '\t' << (i + 1) << '\n';
}

}  // namespace urns
