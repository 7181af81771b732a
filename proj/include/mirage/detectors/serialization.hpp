/*
 * Copyright 2026 The Mirage Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Little-endian byte streams for model sections. Doubles are written as their
// IEEE-754 bit pattern, so a round trip is exact.

#ifndef MIRAGE_DETECTORS_SERIALIZATION_HPP_
#define MIRAGE_DETECTORS_SERIALIZATION_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/detectors/tree.hpp"

namespace mirage {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }

  void f64_array(std::span<const double> v) {
    u64(v.size());
    for (double d : v) f64(d);
  }

  void tree(const Tree& t) {
    u64(t.nodes().size());
    for (const auto& n : t.nodes()) {
      i32(n.feature);
      f64(n.threshold);
      i32(n.left);
      i32(n.right);
      f64(n.value);
    }
  }

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : data_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::size_t n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::vector<double> f64_array() {
    const std::size_t n = checked_count(u64(), 8);
    std::vector<double> v(n);
    for (auto& d : v) d = f64();
    return v;
  }

  Tree tree() {
    const std::size_t n = checked_count(u64(), 24);
    Tree t;
    t.nodes().resize(n);
    for (auto& node : t.nodes()) {
      node.feature = i32();
      node.threshold = f64();
      node.left = i32();
      node.right = i32();
      node.value = f64();
    }
    if (!t.well_formed()) throw DataError("model file: malformed tree section");
    return t;
  }

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DataError("model file: truncated section");
  }
  std::size_t checked_count(std::uint64_t n, std::size_t elem_bytes) const {
    if (n > remaining() / elem_bytes) throw DataError("model file: implausible array length");
    return static_cast<std::size_t>(n);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace mirage

#endif  // MIRAGE_DETECTORS_SERIALIZATION_HPP_
