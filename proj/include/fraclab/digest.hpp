#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "fraclab/types.hpp"

namespace fraclab {

/// 64-bit FNV-1a over raw bytes; used to tag reported numbers with the inputs
/// they were computed from.
class Digest {
 public:
  Digest& add(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Digest& add(std::string_view s) { return add(s.data(), s.size()); }
  Digest& add(double v) { return add(&v, sizeof v); }
  Digest& add(const Vector& v) { return add(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double)); }

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t s = state_;
    for (int i = 15; i >= 0; --i, s >>= 4) out[static_cast<std::size_t>(i)] = kDigits[s & 0xf];
    return out;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace fraclab
