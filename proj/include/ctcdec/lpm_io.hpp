// ctcdec/lpm_io.hpp

// Copyright 2026   ctcdec authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CTCDEC_LPM_IO_HPP_
#define CTCDEC_LPM_IO_HPP_

// LPM container: the binary interchange format for log-posterior matrices.
//
//   magic "LPM1" | u32le T | u32le N | T*N f32le, row-major
//
// The payload is IEEE-754 binary32; in-memory matrices are double, so
// store_lpm rounds through binary32 and load(store(m)) returns exactly the
// rounded values. store(load(file)) reproduces the file byte for byte.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ctcdec/errors.hpp"
#include "ctcdec/matrix.hpp"

namespace ctcdec {

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Serializes to LPM bytes. Values are rounded to binary32; the rounded
/// matrix must still satisfy the log-posterior invariants.
inline std::string encode_lpm(const LogPosteriorMatrix& m) {
  Matrix rounded(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    rounded.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
  check_log_posteriors(rounded, "encode_lpm");

  std::string out;
  out.reserve(12 + 4 * m.data().size());
  out += "LPM1";
  detail::put_u32le(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32le(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : rounded.data()) {
    detail::put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

inline LogPosteriorMatrix decode_lpm(const std::string& bytes,
                                     const std::string& context) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4 || bytes.compare(0, 4, "LPM1") != 0) {
    throw FormatError(context + ": bad magic, expected LPM1");
  }
  if (bytes.size() < 12) {
    throw FormatError(context + ": truncated header");
  }
  std::uint32_t rows = detail::get_u32le(p + 4);
  std::uint32_t cols = detail::get_u32le(p + 8);
  if (rows == 0 || cols == 0) {
    throw FormatError(context + ": zero dimension in header");
  }
  std::size_t payload = static_cast<std::size_t>(rows) * cols * 4;
  if (bytes.size() < 12 + payload) {
    throw FormatError(context + ": truncated payload, expected " +
                      std::to_string(12 + payload) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  if (bytes.size() > 12 + payload) {
    throw FormatError(context + ": trailing bytes after payload");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    std::uint32_t u = detail::get_u32le(p + 12 + 4 * i);
    m.data()[i] = static_cast<double>(std::bit_cast<float>(u));
  }
  check_log_posteriors(m, context);
  return m;
}

inline void store_lpm(const LogPosteriorMatrix& m,
                      const std::filesystem::path& path) {
  std::string bytes = encode_lpm(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("cannot open " + path.string() + " for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw FormatError("short write to " + path.string());
  }
}

inline LogPosteriorMatrix load_lpm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_lpm(bytes, path.string());
}

}  // namespace ctcdec

#endif  // CTCDEC_LPM_IO_HPP_
