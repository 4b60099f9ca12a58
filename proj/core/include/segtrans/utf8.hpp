#pragma once

#include <string>
#include <string_view>

namespace segtrans {

// Minimal UTF-8 codec. Invalid byte sequences decode to U+FFFD so that
// ingestion is total; encoding assumes valid scalar values.

// Decodes one code point starting at bytes[i] and advances i past it.
// On an invalid sequence returns U+FFFD and advances by one byte.
char32_t decode_utf8_step(std::string_view bytes, size_t& i);

std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view chars);
std::string encode_utf8(char32_t c);

}  // namespace segtrans
