#include "psychoseed/text.hpp"

#include "psychoseed/common.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace psychoseed {
namespace {

icu::UnicodeString from_utf8(std::string_view text) {
    return icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
}

std::string to_utf8(const icu::UnicodeString& s) {
    std::string out;
    s.toUTF8String(out);
    return out;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

bool is_punct(UChar32 c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
               (c >= 0x7b && c <= 0x7e);
    }
    return u_ispunct(c) != 0;
}

/// Splits a UTF-16 string into whitespace-separated pieces.
std::vector<icu::UnicodeString> split_unicode(const icu::UnicodeString& s) {
    std::vector<icu::UnicodeString> out;
    int32_t start = -1;
    int32_t i = 0;
    while (i < s.length()) {
        const UChar32 c = s.char32At(i);
        const int32_t next = s.moveIndex32(i, 1);
        if (is_space(c)) {
            if (start >= 0) {
                out.emplace_back(s, start, i - start);
                start = -1;
            }
        } else if (start < 0) {
            start = i;
        }
        i = next;
    }
    if (start >= 0) out.emplace_back(s, start, s.length() - start);
    return out;
}

icu::UnicodeString strip_punct(const icu::UnicodeString& s) {
    int32_t begin = 0;
    int32_t end = s.length();
    while (begin < end) {
        const UChar32 c = s.char32At(begin);
        if (!is_punct(c)) break;
        begin = s.moveIndex32(begin, 1);
    }
    while (end > begin) {
        const int32_t prev = s.moveIndex32(end, -1);
        if (!is_punct(s.char32At(prev))) break;
        end = prev;
    }
    return icu::UnicodeString(s, begin, end - begin);
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw Error(std::string("ICU NFC normalizer unavailable: ") + u_errorName(status));
    }
    icu::UnicodeString s = nfc->normalize(from_utf8(text), status);
    if (U_FAILURE(status)) {
        throw Error(std::string("NFC normalization failed: ") + u_errorName(status));
    }
    s.toLower(icu::Locale::getRoot());

    TokenSeq seq;
    for (const auto& piece : split_unicode(s)) {
        icu::UnicodeString tok = strip_punct(piece);
        if (!tok.isEmpty()) seq.tokens.push_back(to_utf8(tok));
    }
    return seq;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& piece : split_unicode(from_utf8(text))) out.push_back(to_utf8(piece));
    return out;
}

std::string join_words(const std::vector<std::string>& words, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) out += sep;
        out += words[i];
    }
    return out;
}

std::string to_lower(std::string_view text) {
    icu::UnicodeString s = from_utf8(text);
    s.toLower(icu::Locale::getRoot());
    return to_utf8(s);
}

std::string capitalize_first(std::string_view word) {
    icu::UnicodeString s = from_utf8(word);
    if (s.isEmpty()) return {};
    const UChar32 first = s.char32At(0);
    const int32_t len = s.moveIndex32(0, 1);
    icu::UnicodeString out;
    out.append(u_toupper(first));
    out.append(s, len, s.length() - len);
    return to_utf8(out);
}

bool starts_upper(std::string_view word) {
    icu::UnicodeString s = from_utf8(word);
    return !s.isEmpty() && u_isupper(s.char32At(0));
}

std::string normalize_text(std::string_view text) {
    return join_words(split_words(to_lower(text)));
}

std::string trim(std::string_view text) {
    const icu::UnicodeString s = from_utf8(text);
    int32_t begin = 0;
    int32_t end = s.length();
    while (begin < end && is_space(s.char32At(begin))) begin = s.moveIndex32(begin, 1);
    while (end > begin) {
        const int32_t prev = s.moveIndex32(end, -1);
        if (!is_space(s.char32At(prev))) break;
        end = prev;
    }
    return to_utf8(icu::UnicodeString(s, begin, end - begin));
}

}  // namespace psychoseed
