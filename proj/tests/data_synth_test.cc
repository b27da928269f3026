// Copyright 2026 The DSCL Authors. All Rights Reserved.
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

#include <cstring>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dscl/encoder.h"
#include "dscl/errors.h"
#include "dscl/grad_check.h"
#include "dscl/manifest.h"
#include "dscl/ops.h"
#include "dscl/rng.h"
#include "dscl/synth.h"
#include "dscl/tensor_io.h"
#include "oracles.h"

namespace dscl {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dscl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(SynthTest, ZeroBlobsRejected) {
  SynthConfig cfg;
  cfg.min_blobs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(generate_scene(cfg, 1), ConfigError);
}

TEST(SynthTest, RangeChecks) {
  SynthConfig cfg;
  cfg.width = 8;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.classes = 9;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.max_blobs = cfg.classes;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SynthTest, DeterministicPerSeed) {
  const SynthConfig cfg;
  const Scene a = generate_scene(cfg, 42), b = generate_scene(cfg, 42), c = generate_scene(cfg, 43);
  EXPECT_TRUE(a.image.identical(b.image));
  EXPECT_TRUE(a.gt_mask.identical(b.gt_mask));
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_FALSE(a.image.identical(c.image));
}

TEST(SynthTest, LabelSetMatchesMaskOver500Seeds) {
  const SynthConfig cfg;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const Scene sc = generate_scene(cfg, s);
    ASSERT_EQ(sc.labels, mask_classes(sc.gt_mask)) << "seed " << s;
    ASSERT_GE(sc.labels.size(), 1u);
    ASSERT_LE(sc.labels.size(), static_cast<std::size_t>(cfg.classes - 1));
    for (double v : sc.image.f64()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
  }
}

TEST(SynthTest, EveryClassInAtLeastTenPercentOfScenes) {
  SynthConfig cfg;
  cfg.classes = 4;
  std::vector<int> count(cfg.classes, 0);
  const auto scenes = generate_scenes(cfg, 9, 1000);
  for (const Scene& s : scenes)
    for (int k : s.labels) ++count[k];
  for (int k = 1; k < cfg.classes; ++k) EXPECT_GE(count[k], 100) << "class " << k;
}

TEST(TensorIoTest, Float64RoundTripIsBitExact) {
  Rng rng(1);
  const Tensor t = oracle::to_tensor(oracle::random_mat(rng, 4, 5, -1e6, 1e6));
  const fs::path p = scratch_dir("io") / "t.dst";
  write_tensor(p, t);
  EXPECT_TRUE(read_tensor(p).identical(t));
}

TEST(TensorIoTest, Uint16Rank3RoundTrip) {
  std::vector<std::uint16_t> v(2 * 3 * 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::uint16_t>(i * 997);
  const Tensor t({2, 3, 4}, v);
  EXPECT_TRUE(decode_tensor(encode_tensor(t)).identical(t));
  const Tensor f({3}, std::vector<float>{1.5f, -0.0f, 3e-8f});
  EXPECT_TRUE(decode_tensor(encode_tensor(f)).identical(f));
}

TEST(TensorIoTest, HeaderLayout) {
  const auto bytes = encode_tensor(Tensor({2, 1}, std::vector<double>{1.0, 2.0}));
  ASSERT_EQ(bytes.size(), 8u + 16u + 16u);
  EXPECT_EQ(std::memcmp(bytes.data(), "DST1", 4), 0);
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[5], 2);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], 0);
  EXPECT_EQ(load_u64(bytes, 8), 2u);
  EXPECT_EQ(load_u64(bytes, 16), 1u);
}

TEST(TensorIoTest, BadMagicAtOffsetZero) {
  auto bytes = encode_tensor(Tensor::zeros({2, 2}));
  std::memcpy(bytes.data(), "XXXX", 4);
  try {
    decode_tensor(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(TensorIoTest, BadDtypeAndTruncation) {
  auto bytes = encode_tensor(Tensor::zeros({2, 2}));
  auto bad = bytes;
  bad[4] = 9;
  try {
    decode_tensor(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(decode_tensor(bytes), FormatError);
}

TEST(ManifestTest, ParseSerializeIdempotent) {
  const std::string text =
      "# classes=4\n# seed=7\n# a comment\nimg0,images/img0.dst,1;3,masks/img0.dst\nimg1,images/img1.dst,2\n";
  const DatasetManifest m = parse_manifest(text);
  EXPECT_EQ(m.classes, 4);
  EXPECT_EQ(m.seed, 7u);
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].labels, (std::vector<int>{1, 3}));
  EXPECT_FALSE(m.entries[1].gt_mask_path.has_value());
  const std::string once = serialize_manifest(m);
  EXPECT_EQ(serialize_manifest(parse_manifest(once)), once);
  EXPECT_EQ(parse_manifest(once), m);
}

TEST(ManifestTest, RejectsDuplicatesAndBadClasses) {
  EXPECT_THROW(parse_manifest("# classes=3\na,x.dst,1\na,y.dst,2\n"), FormatError);
  EXPECT_THROW(parse_manifest("# classes=3\na,x.dst,5\n"), FormatError);
  EXPECT_THROW(parse_manifest("# classes=1\n"), FormatError);
}

TEST(ManifestTest, SaveAndLoadDataset) {
  const SynthConfig cfg;
  const auto scenes = generate_scenes(cfg, 3, 5);
  const fs::path dir = scratch_dir("dataset");
  save_dataset(dir, scenes, cfg.classes, 3);
  const Dataset d = load_dataset(dir / "manifest.csv");
  ASSERT_EQ(d.scenes.size(), 5u);
  EXPECT_EQ(d.classes, cfg.classes);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_TRUE(d.scenes[i].image.identical(scenes[i].image));
    EXPECT_TRUE(d.scenes[i].gt_mask.identical(scenes[i].gt_mask));
    EXPECT_EQ(d.scenes[i].labels, scenes[i].labels);
  }
}

TEST(EncoderTest, ZeroImageZeroBiasGivesZeroFeatures) {
  const TinyEncoder enc = make_encoder(EncoderConfig{}, 5);
  const FeatureMap f = encode(enc, Tensor::zeros({32, 32, 3}));
  for (double v : f.values.value().f64()) EXPECT_EQ(v, 0.0);
}

TEST(EncoderTest, OutputShape) {
  for (std::size_t depth : {4u, 16u, 32u}) {
    EncoderConfig cfg;
    cfg.widths = {8, 8, depth};
    const TinyEncoder enc = make_encoder(cfg, 1);
    for (std::size_t h : {16u, 17u, 30u}) {
      const FeatureMap f = encode(enc, Tensor::filled({h, 20, 3}, 0.5));
      EXPECT_EQ(f.depth(), depth);
      EXPECT_EQ(f.height, (h + 3) / 4);
      EXPECT_EQ(f.width, 5u);
    }
  }
}

TEST(EncoderTest, DimMismatchIsShapeError) {
  const TinyEncoder enc = make_encoder(EncoderConfig{}, 5);
  EXPECT_THROW(encode(enc, Tensor::zeros({16, 16, 4})), ShapeError);
}

TEST(EncoderTest, CentreTapStageIsPerPixelLinearMap) {
  Rng rng(4);
  EncoderConfig cfg;
  cfg.widths = {5};
  cfg.strides = {1};
  TinyEncoder enc = make_encoder(cfg, 2);
  ASSERT_FALSE(enc.stages[0].relu);
  // Zero every tap but the centre one: the stage is then a 1x1 convolution.
  const auto w = oracle::random_mat(rng, 3, 5);
  const auto b = oracle::random_mat(rng, 1, 5)[0];
  auto wv = enc.stages[0].weight.mutable_value().f64();
  std::fill(wv.begin(), wv.end(), 0.0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t o = 0; o < 5; ++o) wv[((1 * 3 + 1) * 3 + c) * 5 + o] = w[c][o];
  std::copy(b.begin(), b.end(), enc.stages[0].bias.mutable_value().f64().begin());
  const auto img = oracle::random_mat(rng, 6 * 7, 3, 0.0, 1.0);
  const FeatureMap f = encode(enc, oracle::to_tensor(img).reshaped({6, 7, 3}));
  auto want = oracle::matmul(img, w);
  for (std::size_t p = 0; p < 42; ++p)
    for (std::size_t o = 0; o < 5; ++o) EXPECT_NEAR(f.values.value().at(p, o), want[p][o] + b[o], 1e-12);
}

TEST(EncoderTest, GradientMatchesFiniteDifferences) {
  EncoderConfig cfg;
  cfg.widths = {4, 3};
  cfg.strides = {2, 1};
  const TinyEncoder enc = make_encoder(cfg, 8);
  Rng rng(3);
  const Tensor img = oracle::to_tensor(oracle::random_mat(rng, 36, 3, 0.0, 1.0)).reshaped({6, 6, 3});
  const Tensor w = oracle::to_tensor(oracle::random_mat(rng, 9, 3));
  std::vector<NamedParam> ps;
  for (std::size_t i = 0; i < enc.stages.size(); ++i) {
    ps.push_back({"w" + std::to_string(i), enc.stages[i].weight});
    ps.push_back({"b" + std::to_string(i), enc.stages[i].bias});
  }
  const GradReport r = finite_diff_check([&] { return sum(mul(encode(enc, img).values, Var::constant(w))); }, ps);
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

}  // namespace
}  // namespace dscl
