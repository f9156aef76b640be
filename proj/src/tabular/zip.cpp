// Copyright 2026 The Convex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "convex/tabular/zip.hpp"

#include <zlib.h>

#include <cstdint>

namespace convex::tabular {
namespace {

constexpr uint32_t kLocalHeader = 0x04034b50;
constexpr uint32_t kCentralHeader = 0x02014b50;
constexpr uint32_t kEndOfCentralDir = 0x06054b50;

uint16_t u16(std::string_view b, size_t at) {
  if (at + 2 > b.size()) throw ZipError("truncated archive");
  return static_cast<uint16_t>(static_cast<unsigned char>(b[at]) |
                               static_cast<unsigned char>(b[at + 1]) << 8);
}

uint32_t u32(std::string_view b, size_t at) {
  return static_cast<uint32_t>(u16(b, at)) |
         static_cast<uint32_t>(u16(b, at + 2)) << 16;
}

void put16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, uint32_t v) {
  put16(out, static_cast<uint16_t>(v & 0xffff));
  put16(out, static_cast<uint16_t>(v >> 16));
}

uint32_t crc_of(std::string_view data) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
            static_cast<uInt>(data.size())));
}

std::string inflate_raw(std::string_view in, size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ZipError("inflate init");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) {
    throw ZipError("corrupt deflate stream");
  }
  return out;
}

}  // namespace

bool has_zip_magic(std::string_view bytes) {
  return bytes.size() >= 4 && bytes.substr(0, 2) == "PK" &&
         (bytes.substr(2, 2) == std::string_view("\x03\x04", 2) ||
          bytes.substr(2, 2) == std::string_view("\x05\x06", 2));
}

std::vector<ZipEntry> read_zip(std::string_view b) {
  if (b.size() < 22) throw ZipError("archive too small");
  size_t eocd = std::string_view::npos;
  size_t lowest = b.size() > 22 + 0xffff ? b.size() - 22 - 0xffff : 0;
  for (size_t at = b.size() - 22 + 1; at-- > lowest;) {
    if (u32(b, at) == kEndOfCentralDir) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string_view::npos) {
    throw ZipError("end of central directory not found");
  }
  const uint16_t count = u16(b, eocd + 10);
  size_t at = u32(b, eocd + 16);
  std::vector<ZipEntry> entries;
  for (uint16_t i = 0; i < count; ++i) {
    if (u32(b, at) != kCentralHeader) throw ZipError("bad central header");
    const uint16_t method = u16(b, at + 10);
    const uint32_t crc = u32(b, at + 16);
    const uint32_t csize = u32(b, at + 20);
    const uint32_t usize = u32(b, at + 24);
    const uint16_t name_len = u16(b, at + 28);
    const uint16_t extra_len = u16(b, at + 30);
    const uint16_t comment_len = u16(b, at + 32);
    const uint32_t local = u32(b, at + 42);
    if (at + 46 + name_len > b.size()) throw ZipError("truncated name");
    std::string name(b.substr(at + 46, name_len));
    at += 46 + name_len + extra_len + comment_len;

    if (!name.empty() && name.back() == '/') continue;
    if (u32(b, local) != kLocalHeader) throw ZipError("bad local header");
    size_t data_at = local + 30 + u16(b, local + 26) + u16(b, local + 28);
    if (data_at + csize > b.size()) throw ZipError("truncated entry " + name);
    std::string_view raw = b.substr(data_at, csize);
    std::string data;
    if (method == 0) {
      data.assign(raw);
    } else if (method == 8) {
      data = inflate_raw(raw, usize);
    } else {
      throw ZipError("unsupported compression method " +
                     std::to_string(method) + " for " + name);
    }
    if (crc_of(data) != crc) throw ZipError("crc mismatch for " + name);
    entries.push_back({std::move(name), std::move(data)});
  }
  return entries;
}

std::string write_zip(const std::vector<ZipEntry>& entries) {
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    const uint32_t offset = static_cast<uint32_t>(out.size());
    const uint32_t crc = crc_of(e.data);
    const auto size = static_cast<uint32_t>(e.data.size());
    const auto name_len = static_cast<uint16_t>(e.name.size());

    put32(out, kLocalHeader);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // stored
    put16(out, 0);   // mod time
    put16(out, 0x21);  // mod date 1980-01-01
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);
    out += e.name;
    out += e.data;

    put32(central, kCentralHeader);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += e.name;
  }
  const auto cd_offset = static_cast<uint32_t>(out.size());
  out += central;
  put32(out, kEndOfCentralDir);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<uint16_t>(entries.size()));
  put16(out, static_cast<uint16_t>(entries.size()));
  put32(out, static_cast<uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

}  // namespace convex::tabular
