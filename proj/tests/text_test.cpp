#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hypw2v/error.hpp"
#include "hypw2v/text.hpp"

namespace {

using hypw2v::IngestionError;
using hypw2v::text::split;
using hypw2v::text::tokenize_line;
using Tokens = std::vector<std::string>;

TEST(TokenizeLine, Examples) {
  EXPECT_EQ(tokenize_line("Das Haus ist groß"), (Tokens{"das", "haus", "ist", "groß"}));
  EXPECT_EQ(tokenize_line(""), Tokens{});
  EXPECT_EQ(tokenize_line("  a\tb "), (Tokens{"a", "b"}));
}

TEST(TokenizeLine, UnicodeWhitespaceSeparatesTokens) {
  // no-break space, ideographic space, line separator
  EXPECT_EQ(tokenize_line("a b　c d"), (Tokens{"a", "b", "c", "d"}));
  EXPECT_EQ(tokenize_line("\r\n\v\f"), Tokens{});
}

TEST(TokenizeLine, LowercasesBeyondAscii) {
  EXPECT_EQ(tokenize_line("ÄÖÜ ÉCOLE ΣΟΦΙΑ МОСКВА"), (Tokens{"äöü", "école", "σοφια", "москва"}));
  EXPECT_EQ(tokenize_line("STRAẞE"), Tokens{"straße"});
}

TEST(TokenizeLine, NoOtherNormalization) {
  EXPECT_EQ(tokenize_line("don't, (x)."), (Tokens{"don't,", "(x)."}));
  EXPECT_EQ(split("Keep Case", false), (Tokens{"Keep", "Case"}));
}

TEST(TokenizeLine, RejectsInvalidUtf8WithLineNumber) {
  const std::vector<std::string> bad{"\xff", "a\xc3", "\xc0\xaf", "\xed\xa0\x80", "\xf4\x90\x80\x80"};
  for (const auto& s : bad) {
    try {
      tokenize_line(s, 42);
      FAIL() << "accepted invalid UTF-8";
    } catch (const IngestionError& e) {
      EXPECT_NE(std::string(e.what()).find("line 42"), std::string::npos);
    }
  }
}

}  // namespace
