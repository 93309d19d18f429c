// Copyright 2026 The kaf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kaf/container.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "kaf/core.hpp"
#include "kaf/rng.hpp"

namespace kaf {

namespace {

constexpr std::uint32_t kFooterMark = 0xFFFFFFFFu;
// Records larger than this are treated as corruption, not data.
constexpr std::uint32_t kMaxRecordBytes = 1u << 30;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  std::memcpy(b, &v, 4);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  std::memcpy(b, &v, 8);
  out.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) return false;
  std::memcpy(&v, b, 4);
  return true;
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) return false;
  std::memcpy(&v, b, 8);
  return true;
}

// Chunked read so a corrupt length prefix cannot force a giant allocation
// before EOF is noticed.
bool read_exact(std::istream& in, std::string& out, std::uint32_t len) {
  out.clear();
  char buf[65536];
  std::uint32_t remaining = len;
  while (remaining > 0) {
    const auto want = std::min<std::uint32_t>(remaining, sizeof(buf));
    in.read(buf, want);
    const auto got = static_cast<std::uint32_t>(in.gcount());
    out.append(buf, got);
    if (got < want) return false;
    remaining -= got;
  }
  return true;
}

}  // namespace

ContainerWriter::ContainerWriter(std::ostream& out, const nlohmann::json& header)
    : out_(out) {
  out_.write(kContainerMagic.data(),
             static_cast<std::streamsize>(kContainerMagic.size()));
  write_record(header.dump());
}

void ContainerWriter::write_record(const std::string& bytes) {
  if (finished_) throw ContractViolation("ContainerWriter: already finished");
  const std::uint64_t sum = fnv1a64(bytes.data(), bytes.size());
  put_u32(out_, static_cast<std::uint32_t>(bytes.size()));
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  put_u64(out_, sum);
  running_ = fnv1a64_u64(sum, running_);
  if (!out_) throw IoError("ContainerWriter: write failed");
}

void ContainerWriter::write(const nlohmann::json& payload) {
  write_record(payload.dump());
  ++records_;
}

void ContainerWriter::finish() {
  if (finished_) return;
  put_u32(out_, kFooterMark);
  put_u64(out_, records_);
  put_u64(out_, running_);
  if (!out_) throw IoError("ContainerWriter: write failed");
  finished_ = true;
}

ContainerReader::ContainerReader(std::istream& in) : in_(in) {
  char magic[7];
  in_.read(magic, 7);
  if (in_.gcount() != 7 || std::string_view(magic, 7) != kContainerMagic)
    throw IntegrityError("container: bad magic header");
  std::uint32_t len = 0;
  if (!get_u32(in_, len) || len == kFooterMark)
    throw IntegrityError("container: missing header record");
  if (len > kMaxRecordBytes) throw IntegrityError("container: absurd header length");
  std::string bytes;
  if (!read_exact(in_, bytes, len))
    throw IntegrityError("container: truncated header record");
  std::uint64_t sum = 0;
  if (!get_u64(in_, sum)) throw IntegrityError("container: truncated header checksum");
  if (sum != fnv1a64(bytes.data(), bytes.size()))
    throw IntegrityError("container: header checksum mismatch");
  running_ = fnv1a64_u64(sum, running_);
  try {
    header_ = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("container: header not valid JSON: ") + e.what());
  }
}

std::optional<nlohmann::json> ContainerReader::next() {
  if (done_) return std::nullopt;
  std::uint32_t len = 0;
  if (!get_u32(in_, len))
    throw IntegrityError("container: truncated before footer");
  if (len == kFooterMark) {
    std::uint64_t count = 0, sum = 0;
    if (!get_u64(in_, count) || !get_u64(in_, sum))
      throw IntegrityError("container: truncated footer");
    if (count != records_)
      throw IntegrityError("container: footer count " + std::to_string(count) +
                           " != records read " + std::to_string(records_));
    if (sum != running_)
      throw IntegrityError("container: footer checksum mismatch");
    done_ = true;
    return std::nullopt;
  }
  if (len > kMaxRecordBytes) throw IntegrityError("container: absurd record length");
  std::string bytes;
  if (!read_exact(in_, bytes, len))
    throw IntegrityError("container: truncated record " + std::to_string(records_));
  std::uint64_t sum = 0;
  if (!get_u64(in_, sum))
    throw IntegrityError("container: truncated record checksum");
  if (sum != fnv1a64(bytes.data(), bytes.size()))
    throw IntegrityError("container: checksum mismatch in record " +
                         std::to_string(records_));
  running_ = fnv1a64_u64(sum, running_);
  ++records_;
  try {
    return nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("container: record not valid JSON: ") + e.what());
  }
}

void write_container_file(const std::filesystem::path& path,
                          const nlohmann::json& header,
                          const std::vector<nlohmann::json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());
  ContainerWriter writer(out, header);
  for (const auto& r : records) writer.write(r);
  writer.finish();
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

ContainerContents read_container_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path.string());
  ContainerReader reader(in);
  ContainerContents contents;
  contents.header = reader.header();
  while (auto record = reader.next()) contents.records.push_back(std::move(*record));
  return contents;
}

std::size_t validate_container(const std::filesystem::path& path) {
  return read_container_file(path).records.size();
}

}  // namespace kaf
