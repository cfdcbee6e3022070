#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "aatr/bvox.hpp"
#include "oracles.hpp"

using namespace aatr;

TEST_CASE("4x4x4 raw volume encodes to 158 bytes") {
  RawVolume raw({4, 4, 4}, {0.5f, 0.5f, 1.5f}, 1000);
  auto bytes = encode_bvox(raw);
  CHECK(bytes.size() == 158);
  CHECK(std::memcmp(bytes.data(), "BVOX1", 5) == 0);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 4);
  CHECK(bytes[30] == (1000 & 0xff));
  CHECK(bytes[31] == (1000 >> 8));
}

TEST_CASE("round trip raw and labels bit-exactly") {
  Rng rng(3);
  RawVolume raw({5, 3, 2}, {475.0f / 512.0f, 475.0f / 512.0f, 1.5f});
  for (auto& v : raw.voxels()) v = static_cast<std::uint16_t>(rng.uniform_int(0, 32767));
  auto back = decode_bvox(encode_bvox(raw));
  REQUIRE(std::holds_alternative<RawVolume>(back));
  CHECK(std::get<RawVolume>(back) == raw);

  LabelVolume lab({3, 3, 3}, {1, 2, 3});
  for (auto& v : lab.voxels()) v = static_cast<std::uint32_t>(rng.next_u64());
  auto lback = decode_bvox(encode_bvox(lab));
  REQUIRE(std::holds_alternative<LabelVolume>(lback));
  CHECK(std::get<LabelVolume>(lback) == lab);
}

TEST_CASE("malformed files raise format errors") {
  RawVolume raw({2, 2, 2}, {1, 1, 1}, 5);
  auto good = encode_bvox(raw);
  auto expect_format = [](std::vector<std::uint8_t> b) {
    try {
      decode_bvox(b);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Format);
    }
  };
  expect_format({good.begin(), good.begin() + 10});
  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_format(bad_magic);
  auto bad_type = good;
  bad_type[5] = 7;
  expect_format(bad_type);
  expect_format({good.begin(), good.end() - 1});
  auto trailing = good;
  trailing.push_back(0);
  expect_format(trailing);
  auto big = good;
  big[30] = 0xff;
  big[31] = 0xff;
  expect_format(big);
}

TEST_CASE("file round trip and typed readers") {
  const auto dir = std::filesystem::temp_directory_path() / "aatr_bvox_test";
  std::filesystem::create_directories(dir);
  RawVolume raw({3, 2, 1}, {1, 1, 1}, 42);
  write_volume(raw, dir / "r.bvox");
  CHECK(read_raw(dir / "r.bvox") == raw);
  CHECK_THROWS_AS(read_labels(dir / "r.bvox"), Error);
  try {
    read_raw(dir / "missing.bvox");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
  std::filesystem::remove_all(dir);
}
