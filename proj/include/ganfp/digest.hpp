#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "ganfp/error.hpp"

namespace ganfp {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::string_view text) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
        fail(ErrorCode::IoError, "SHA-256 computation failed");
    return out;
}

inline std::string to_hex(const Digest& d) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : d) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xf]);
    }
    return out;
}

}  // namespace ganfp
