#include "pwrank/tokenizer.hpp"

namespace pwrank {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

Truncation WhitespaceTokenizer::truncate(std::string_view text, std::size_t max_tokens) const {
    std::size_t n = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_space(text[i])) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            if (++n > max_tokens) {
                std::size_t end = i;
                while (end > 0 && is_space(text[end - 1])) --end;
                return {std::string(text.substr(0, end)), true};
            }
        }
    }
    return {std::string(text), false};
}

const Tokenizer& default_tokenizer() {
    static const WhitespaceTokenizer tokenizer;
    return tokenizer;
}

}  // namespace pwrank
