#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace pwrank {

struct Truncation {
    std::string text;
    bool truncated = false;
};

/// Token counting and prefix truncation. Implementations must be stateless
/// or internally synchronized; scorers share one instance across threads.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    /// Longest prefix of `text` holding at most `max_tokens` tokens.
    virtual Truncation truncate(std::string_view text, std::size_t max_tokens) const = 0;
};

/// Splits on ASCII whitespace. Truncation keeps the original bytes up to the
/// end of the last retained token.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::size_t count(std::string_view text) const override;
    Truncation truncate(std::string_view text, std::size_t max_tokens) const override;
};

const Tokenizer& default_tokenizer();

}  // namespace pwrank
