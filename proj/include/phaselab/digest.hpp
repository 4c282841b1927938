#pragma once

#include <fstream>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "phaselab/core.hpp"

namespace phaselab {

namespace detail {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("cannot initialize SHA-256");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, size_t size) {
    if (EVP_DigestUpdate(ctx_, data, size) != 1) {
      throw std::runtime_error("SHA-256 update failed");
    }
  }

  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, digest, &len) != 1) {
      throw std::runtime_error("SHA-256 finalize failed");
    }
    static const char* alphabet = "0123456789abcdef";
    std::string out(2 * len, '0');
    for (unsigned int i = 0; i < len; ++i) {
      out[2 * i] = alphabet[digest[i] >> 4];
      out[2 * i + 1] = alphabet[digest[i] & 0xf];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace detail

inline std::string sha256_hex(std::string_view data) {
  detail::Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path + " for hashing");
  detail::Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<size_t>(in.gcount()));
  }
  return h.hex();
}

}  // namespace phaselab
