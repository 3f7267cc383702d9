#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sau/io.hpp"
#include "sau/rng.hpp"
#include "sau/tensor.hpp"

using namespace sau;

namespace {

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() /
           (std::string("sau_test_") + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("tensor shape and data") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  t.at(1, 2) = -4.0;
  CHECK(t[5] == -4.0);
  CHECK(t.all_finite());
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());

  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("rng streams are independent and reproducible") {
  RngStream a(StreamKey{7, 1, 2, 3, Draw::kViewB1V1});
  RngStream b(StreamKey{7, 1, 2, 3, Draw::kViewB1V1});
  RngStream c(StreamKey{7, 1, 2, 3, Draw::kViewB1V2});
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    std::uint64_t x = a.next_u64();
    all_equal = all_equal && (x == b.next_u64());
    any_diff = any_diff || (x != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng uniform stays in (0,1) and below() in range") {
  RngStream r(StreamKey{11, 0, 0, 0, Draw::kTestData});
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
}

TEST_CASE("rng normal moments") {
  RngStream r(StreamKey{13, 0, 0, 0, Draw::kTestData});
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("rng beta(2,2) mean") {
  RngStream r(StreamKey{17, 0, 0, 0, Draw::kTestData});
  double sum = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += r.beta(2.0, 2.0);
  CHECK(std::abs(sum / n - 0.5) < 0.02);
}

TEST_CASE("tensor blob round trip in both dtypes") {
  auto dir = temp_dir("blob");
  Tensor t = Tensor::from_data({2, 3}, {1.0, -2.5, 3.25, 0.0, 1e-7, 42.0});

  write_tensor_blob_file(dir / "a.blob", t, DType::kF64);
  DType dt;
  Tensor back = read_tensor_blob_file(dir / "a.blob", &dt);
  CHECK(dt == DType::kF64);
  REQUIRE(back.same_shape(t));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);

  write_tensor_blob_file(dir / "b.blob", t, DType::kF32);
  back = read_tensor_blob_file(dir / "b.blob", &dt);
  CHECK(dt == DType::kF32);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(back[i] == doctest::Approx(t[i]).epsilon(1e-6));
  std::filesystem::remove_all(dir);
}

TEST_CASE("truncated blob is a dimension mismatch error") {
  auto dir = temp_dir("trunc");
  Tensor t({4, 4}, 1.0);
  write_tensor_blob_file(dir / "t.blob", t, DType::kF32);
  auto size = std::filesystem::file_size(dir / "t.blob");
  std::filesystem::resize_file(dir / "t.blob", size - 8);
  CHECK_THROWS_WITH_AS(read_tensor_blob_file(dir / "t.blob"),
                       doctest::Contains("truncated"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset save/load round trip") {
  auto dir = temp_dir("ds");
  std::vector<Sample> samples;
  RngStream r(StreamKey{3, 0, 0, 0, Draw::kTestData});
  for (int i = 0; i < 7; ++i) {
    Sample s;
    s.id = static_cast<std::uint64_t>(i) * 3 + 1;
    s.label = i % 3;
    s.is_synthetic = i % 2 == 0;
    s.quality = 0.25 + 0.1 * i;
    s.features = Tensor({5});
    for (std::size_t j = 0; j < 5; ++j) s.features[j] = std::floor(r.normal() * 100) / 128.0;
    samples.push_back(std::move(s));
  }
  save_dataset(dir / "x.jsonl", samples);
  std::vector<Sample> back = load_dataset(dir / "x.jsonl");
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == samples[i].id);
    CHECK(back[i].label == samples[i].label);
    CHECK(back[i].is_synthetic == samples[i].is_synthetic);
    CHECK(back[i].quality == doctest::Approx(samples[i].quality));
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(back[i].features[j] == doctest::Approx(samples[i].features[j]).epsilon(1e-6));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty manifest loads to empty list") {
  auto dir = temp_dir("empty");
  save_dataset(dir / "e.jsonl", {});
  CHECK(load_dataset(dir / "e.jsonl").empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed manifest line reports the line number") {
  auto dir = temp_dir("bad");
  std::vector<Sample> samples(2);
  samples[0].features = Tensor({3}, 1.0);
  samples[0].id = 0;
  samples[1].features = Tensor({3}, 2.0);
  samples[1].id = 1;
  save_dataset(dir / "m.jsonl", samples);
  {
    std::ifstream in(dir / "m.jsonl");
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    in.close();
    std::ofstream out(dir / "m.jsonl");
    out << l1 << '\n' << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(dir / "m.jsonl"), doctest::Contains("line 2"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest rerun bytes are identical") {
  auto dir = temp_dir("det");
  std::vector<Sample> samples(3);
  for (int i = 0; i < 3; ++i) {
    samples[i].features = Tensor({4}, 0.5 * i);
    samples[i].id = static_cast<std::uint64_t>(i);
    samples[i].label = i;
  }
  save_dataset(dir / "a.jsonl", samples);
  save_dataset(dir / "b.jsonl", samples);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.blob") == slurp(dir / "b.blob"));
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
