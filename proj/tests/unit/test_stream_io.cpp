#include <gtest/gtest.h>

#include <sstream>

#include "urns/stream_io.hpp"

using namespace urns;

TEST(StreamIo, IntegerLabelsKeptAsIs) {
  std::istringstream in("# header\n3\n\n1\n3\n  7  \n");
  const auto parsed = read_stream(in);
  EXPECT_EQ(parsed.stream.labels, (std::vector<Label>{3, 1, 3, 7}));
  EXPECT_TRUE(parsed.dictionary.empty());
  ASSERT_EQ(parsed.comments.size(), 1u);
}

TEST(StreamIo, TokensEncodedInFirstAppearanceOrder) {
  std::istringstream in("the\ncat\nthe\n42\ncat\n");
  const auto parsed = read_stream(in);
  EXPECT_EQ(parsed.stream.labels, (std::vector<Label>{1, 2, 1, 3, 2}));
  EXPECT_EQ(parsed.dictionary.tokens, (std::vector<std::string>{"the", "cat", "42"}));
  std::ostringstream dict;
  write_dictionary(dict, parsed.dictionary);
  EXPECT_EQ(dict.str(), "the\t1\ncat\t2\n42\t3\n");
}

TEST(StreamIo, ZeroIsNotALabel) {
  std::istringstream in("0\n1\n");
  const auto parsed = read_stream(in);
  EXPECT_FALSE(parsed.dictionary.empty());
  EXPECT_EQ(parsed.stream.labels, (std::vector<Label>{1, 2}));
}

TEST(StreamIo, EncodingIsStable) {
  const std::string text = "b\na\nb\nc\n";
  std::istringstream a(text), b(text);
  EXPECT_EQ(read_stream(a).stream.labels, read_stream(b).stream.labels);
}

TEST(StreamIo, EmptyInputRejected) {
  std::istringstream in("# only a comment\n\n");
  EXPECT_THROW(read_stream(in), std::invalid_argument);
}

TEST(StreamIo, RoundTrip) {
  const Stream s{{5, 1, 5, 9}};
  std::ostringstream out;
  write_stream(out, s, {"seed=1"});
  EXPECT_EQ(out.str(), "# seed=1\n5\n1\n5\n9\n");
  std::istringstream in(out.str());
  const auto parsed = read_stream(in);
  EXPECT_EQ(parsed.stream.labels, s.labels);
  EXPECT_EQ(parsed.comments, (std::vector<std::string>{"seed=1"}));
}
