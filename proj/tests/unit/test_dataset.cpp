#include <filesystem>

#include "doctest.h"
#include "rsm/dataset.hpp"
#include "rsm/error.hpp"

using namespace rsm;

TEST_CASE("protocol splits") {
  CHECK(protocol_config(EnvKind::shapes, Split::train).object_count == 5);
  CHECK(protocol_config(EnvKind::shapes, Split::test_ood).object_count == 3);
  CHECK(protocol_config(EnvKind::balls, Split::eval).radius == 5.0);
  CHECK(protocol_config(EnvKind::balls, Split::test_ood).radius == 3.0);
  CHECK(protocol_config(EnvKind::balls, Split::test_iid).radius == 4.0);
  CHECK(parse_split("test_iid") == Split::test_iid);
  CHECK_THROWS_AS(parse_split("valid"), ValidationError);
  CHECK_THROWS_AS(parse_env("atari"), ValidationError);
}

TEST_CASE("episode shapes") {
  auto s = generate_dataset(EnvKind::shapes, Split::train, 2, 10, 1);
  CHECK(s.episodes[0].frames.size() == 11);
  CHECK(s.episodes[0].actions.size() == 10);
  CHECK(s.episodes[0].length() == 10);
  auto b = generate_dataset(EnvKind::balls, Split::train, 2, 10, 1);
  CHECK(b.episodes[0].frames.size() == 12);
  CHECK(b.episodes[0].actions.empty());
  CHECK(b.transition_count() == 20);
}

TEST_CASE("split contract is enforced") {
  EnvConfig c = protocol_config(EnvKind::shapes, Split::train);
  c.object_count = 4;
  CHECK_THROWS_AS(generate_dataset(c, Split::train, 1, 1, 1), ValidationError);
  CHECK_THROWS_AS(generate_dataset(EnvKind::shapes, Split::train, 1, 0, 1), ValidationError);
}

TEST_CASE("episodes depend only on their own seed") {
  auto a = generate_dataset(EnvKind::shapes, Split::train, 4, 5, 9);
  auto b = generate_dataset(EnvKind::shapes, Split::train, 6, 5, 9);
  for (int i = 0; i < 4; ++i) CHECK(a.episodes[static_cast<std::size_t>(i)] == b.episodes[static_cast<std::size_t>(i)]);
  CHECK(split_seed(1, Split::train) != split_seed(1, Split::eval));
}

TEST_CASE("corrupt and truncated files are rejected") {
  auto bytes = serialize_dataset(generate_dataset(EnvKind::balls, Split::train, 2, 3, 5));
  auto flipped = bytes;
  flipped[100] ^= 1;
  CHECK_THROWS_AS(parse_dataset(flipped), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  CHECK_THROWS_AS(parse_dataset(truncated), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse_dataset(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(parse_dataset(bad_version), FormatError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.rsmd"), FormatError);
}

TEST_CASE("save and load through the filesystem") {
  auto ds = generate_dataset(EnvKind::shapes, Split::test_ood, 3, 4, 2);
  const auto path = std::filesystem::temp_directory_path() / "rsm_test_dataset.rsmd";
  save_dataset(ds, path);
  CHECK(load_dataset(path) == ds);
  std::filesystem::remove(path);
}
