#include "harass/text.hpp"

#include "harass/error.hpp"

namespace harass {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Word: return "word";
    case TokenKind::Mention: return "mention";
    case TokenKind::Url: return "url";
    case TokenKind::Hashtag: return "hashtag";
    case TokenKind::Number: return "number";
    case TokenKind::EmojiOrSymbol: return "emoji-or-symbol";
  }
  return "word";
}

namespace {

bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }
bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_word_char(unsigned char c) { return is_ascii_alnum(c) || c == '_' || c == '*' || c >= 0x80; }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(s[i]) != prefix[i]) return false;
  }
  return true;
}

bool is_url(std::string_view chunk) {
  return starts_with_ci(chunk, "http://") || starts_with_ci(chunk, "https://") ||
         starts_with_ci(chunk, "www.");
}

TokenKind word_kind(std::string_view surface) {
  bool all_digits = true;
  bool has_letter = false;
  for (unsigned char c : surface) {
    if (c < '0' || c > '9') all_digits = false;
    if ((c >= 'a' && c <= 'z') || c == '*' || c == '_') has_letter = true;
  }
  if (all_digits) return TokenKind::Number;
  if (has_letter) return TokenKind::Word;
  // Multi-byte sequences without any ASCII letter: emoji, symbols, non-Latin
  // script. Digits mixed with them also end up here.
  bool has_digit = false;
  for (unsigned char c : surface) has_digit |= (c >= '0' && c <= '9');
  return has_digit ? TokenKind::Word : TokenKind::EmojiOrSymbol;
}

// Splits a whitespace-free chunk into runs of word characters. An apostrophe
// stays when it sits between two word characters.
void split_words(std::string_view chunk, TokenKind first_kind, std::vector<Token>& out) {
  std::string current;
  bool first = true;
  auto flush = [&] {
    if (current.empty()) return;
    TokenKind kind = word_kind(current);
    if (first && first_kind == TokenKind::Hashtag) kind = TokenKind::Hashtag;
    out.push_back({std::move(current), kind});
    current.clear();
    first = false;
  };
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const auto c = static_cast<unsigned char>(chunk[i]);
    if (is_word_char(c)) {
      current.push_back(lower(static_cast<char>(c)));
    } else if (c == '\'' && !current.empty() && i + 1 < chunk.size() &&
               is_word_char(static_cast<unsigned char>(chunk[i + 1]))) {
      current.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
}

}  // namespace

TokenStream tokenize(std::string_view text, std::string source_id) {
  TokenStream stream;
  stream.source_id = std::move(source_id);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string_view chunk = text.substr(i, j - i);
    i = j;

    if (chunk == kUrlToken || is_url(chunk)) {
      stream.tokens.push_back({std::string(kUrlToken), TokenKind::Url});
      continue;
    }
    if (chunk == kUserToken) {
      stream.tokens.push_back({std::string(kUserToken), TokenKind::Mention});
      continue;
    }
    // Leading punctuation decides mention/hashtag status ("(@bob", "\#tag").
    std::size_t lead = 0;
    while (lead < chunk.size() && !is_word_char(static_cast<unsigned char>(chunk[lead])) &&
           chunk[lead] != '@' && chunk[lead] != '#') {
      ++lead;
    }
    std::string_view rest = chunk.substr(lead);
    if (!rest.empty() && rest.front() == '@' && rest.size() > 1 &&
        is_word_char(static_cast<unsigned char>(rest[1]))) {
      stream.tokens.push_back({std::string(kUserToken), TokenKind::Mention});
      // Anything glued after the handle ("@bob's") belongs to the handle.
      continue;
    }
    TokenKind first_kind = TokenKind::Word;
    if (!rest.empty() && rest.front() == '#') {
      first_kind = TokenKind::Hashtag;
      rest.remove_prefix(1);
    }
    split_words(rest, first_kind, stream.tokens);
  }
  return stream;
}

std::string join_surfaces(const TokenStream& stream) {
  std::string out;
  for (const auto& t : stream.tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.surface;
  }
  return out;
}

namespace {

// Byte offsets of code point starts, plus the end offset.
std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(s.size());
  return offsets;
}

}  // namespace

std::vector<std::string> character_ngrams(std::string_view token, std::size_t n_min,
                                          std::size_t n_max) {
  if (n_min < 1 || n_min > n_max) {
    fail(ErrorCode::InvalidArgument, "character_ngrams needs 1 <= n_min <= n_max");
  }
  std::string wrapped;
  wrapped.reserve(token.size() + 2);
  wrapped.push_back('<');
  wrapped.append(token);
  wrapped.push_back('>');

  const auto offsets = code_point_offsets(wrapped);
  const std::size_t length = offsets.size() - 1;
  std::vector<std::string> grams;
  for (std::size_t n = n_min; n <= n_max && n < length; ++n) {
    for (std::size_t start = 0; start + n <= length; ++start) {
      grams.emplace_back(wrapped.substr(offsets[start], offsets[start + n] - offsets[start]));
    }
  }
  grams.push_back(std::move(wrapped));
  return grams;
}

}  // namespace harass
