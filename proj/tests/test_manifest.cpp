#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "siqa/error.hpp"
#include "siqa/io.hpp"
#include "siqa/manifest.hpp"
#include "support/temp_dir.hpp"

using namespace siqa;
namespace fs = std::filesystem;

TEST_CASE("sha256 matches standard test vectors") {
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  testing::TempDir dir;
  auto p = dir.write("abc.txt", "abc");
  CHECK(io::sha256_file(p) == io::sha256_hex("abc"));
}

TEST_CASE("manifest fingerprint ignores timestamps and outputs") {
  testing::TempDir dir;
  auto input = dir.write("train.jsonl", "{}\n");
  RunManifest a;
  a.command = "tag";
  a.config = {{"mode", "relation"}, {"lr", 1e-5}};
  a.seed = 42;
  a.record_input(input);
  a.started_at = "2020-01-01T00:00:00Z";
  auto b = a;
  b.started_at = utc_timestamp();
  b.outputs = {"tagged.jsonl"};
  CHECK(a.fingerprint() == b.fingerprint());

  b.seed = 43;
  CHECK(a.fingerprint() != b.fingerprint());
  b = a;
  b.config["lr"] = 2e-5;
  CHECK(a.fingerprint() != b.fingerprint());

  // A changed input changes the digest recorded on the next run.
  b = a;
  dir.write("train.jsonl", "{\"x\":1}\n");
  b.record_input(input);
  CHECK(a.fingerprint() != b.fingerprint());

  CHECK_THROWS_AS(a.record_input(dir.path() / "missing.jsonl"), Error);
}

TEST_CASE("manifest round trips through disk") {
  testing::TempDir dir;
  RunManifest m;
  m.command = "train-qa";
  m.config = {{"b", 1}, {"a", 2}};
  m.seed = 7;
  m.input_digests["x"] = io::sha256_hex("x");
  m.started_at = utc_timestamp();
  m.finished_at = utc_timestamp();
  m.outputs = {"a", "b"};
  m.extra = {{"pretrained", false}};
  m.write(dir.path());
  auto back = RunManifest::read(dir.path());
  REQUIRE(back.has_value());
  CHECK(back->to_json() == m.to_json());
  CHECK(back->config.begin().key() == "b");  // key order survives
  CHECK_FALSE(RunManifest::read(dir.path() / "nowhere").has_value());
  dir.write("broken/manifest.json", "{ not json");
  CHECK_FALSE(RunManifest::read(dir.path() / "broken").has_value());
  CHECK(utc_timestamp().size() == 20);
}

TEST_CASE("staged directory appears only on commit") {
  testing::TempDir dir;
  const auto final_path = dir.path() / "run";
  {
    StagedDirectory stage(final_path);
    io::write_file_atomic(stage.path() / "out.txt", "partial");
    CHECK_FALSE(fs::exists(final_path));
  }
  CHECK_FALSE(fs::exists(final_path));
  for (const auto& e : fs::directory_iterator(dir.path())) FAIL("leftover " << e.path());

  {
    StagedDirectory stage(final_path);
    io::write_file_atomic(stage.path() / "out.txt", "first");
    stage.commit();
  }
  CHECK(io::read_file(final_path / "out.txt") == "first");

  {
    StagedDirectory stage(final_path);
    io::write_file_atomic(stage.path() / "other.txt", "second");
    CHECK(io::read_file(final_path / "out.txt") == "first");
    stage.commit();
  }
  CHECK(io::read_file(final_path / "other.txt") == "second");
  CHECK_FALSE(fs::exists(final_path / "out.txt"));
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++entries;
  CHECK(entries == 1);
}

TEST_CASE("write_file_atomic replaces content and read_lines strips carriage returns") {
  testing::TempDir dir;
  auto p = dir.path() / "sub" / "f.txt";
  io::write_file_atomic(p, "a\r\nb\n");
  io::write_file_atomic(p, "a\r\nb\r\n");
  CHECK(io::read_lines(p) == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(io::read_file(dir.path() / "nope"), Error);
}
