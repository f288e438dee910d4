#include "mmarc/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace mmarc {

namespace {

std::vector<std::uint8_t> sha256_raw(const std::uint8_t* data, std::size_t size) {
    std::vector<std::uint8_t> out(EVP_MAX_MD_SIZE);
    unsigned int out_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, size) != 1 ||
        EVP_DigestFinal_ex(ctx, out.data(), &out_len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    out.resize(out_len);
    return out;
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    static const char* hex = "0123456789abcdef";
    auto raw = sha256_raw(bytes.data(), bytes.size());
    std::string out;
    out.reserve(raw.size() * 2);
    for (std::uint8_t b : raw) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0x0f]);
    }
    return out;
}

std::string sha256_hex(const std::string& text) {
    return sha256_hex(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint64_t sha256_prefix64(const std::string& text) {
    auto raw = sha256_raw(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) {
        value = (value << 8) | raw[static_cast<std::size_t>(i)];
    }
    return value;
}

}  // namespace mmarc
