#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace harass {

enum class TokenKind { Word, Mention, Url, Hashtag, Number, EmojiOrSymbol };

std::string_view to_string(TokenKind kind);

struct Token {
  std::string surface;
  TokenKind kind = TokenKind::Word;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenStream {
  std::vector<Token> tokens;
  std::string source_id;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
};

inline constexpr std::string_view kUrlToken = "<url>";
inline constexpr std::string_view kUserToken = "<usr>";

/// True for tokens that count as words in lexicon, frequency and TF-IDF
/// statistics: everything except collapsed mentions and URLs.
constexpr bool counts_as_word(TokenKind kind) {
  return kind != TokenKind::Mention && kind != TokenKind::Url;
}

/// Lowercases ASCII, collapses URLs to <url> and @-mentions to <usr>, keeps
/// hashtag bodies, strips punctuation at word edges. Apostrophes between
/// word characters and '*' (censored forms) stay inside tokens. Bytes of
/// multi-byte UTF-8 sequences are treated as word characters.
TokenStream tokenize(std::string_view text, std::string source_id = {});

/// Surfaces joined by single spaces.
std::string join_surfaces(const TokenStream& stream);

/// Character n-grams of "<token>" for n in [n_min, n_max], increasing n then
/// left to right, followed by the whole wrapped token. n counts UTF-8 code
/// points. An n-gram spanning the entire wrapped token is not repeated.
std::vector<std::string> character_ngrams(std::string_view token, std::size_t n_min,
                                          std::size_t n_max);

}  // namespace harass
