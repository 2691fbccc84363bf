// Copyright 2026 The ctmneg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Little-endian byte packing shared by the embedding and checkpoint formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "ctmneg/errors.hpp"

namespace ctmneg::detail {

class ByteWriter {
 public:
  template <typename U>
  void put(U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
  void put_f32(float f) { put(std::bit_cast<std::uint32_t>(f)); }
  void put_f64(double d) { put(std::bit_cast<std::uint64_t>(d)); }
  void put_bytes(std::string_view s) { buf_.append(s); }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }
  const std::string& bytes() const { return buf_; }
  void reserve(std::size_t n) { buf_.reserve(n); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const unsigned char* data, std::size_t size, std::string what)
      : data_(data), size_(size), what_(std::move(what)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::string get_string() { return get_bytes(get<std::uint32_t>()); }
  std::size_t remaining() const { return size_ - pos_; }

  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw DataError(what_ + " truncated");
  }

 private:
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace ctmneg::detail
