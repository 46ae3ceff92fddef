// Copyright 2026 The QR Codec Authors.
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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "qrc/config.h"
#include "qrc/dataset.h"
#include "qrc/io.h"

namespace qrc {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("qrc_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<uint8_t> Bytes(const std::string& s) {
  return std::vector<uint8_t>(s.begin(), s.end());
}

ImageBuffer Gradient(int w, int h, const std::string& source = "g") {
  ImageBuffer img;
  img.width = w;
  img.height = h;
  img.source = source;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        img.samples.push_back(static_cast<uint8_t>((x * 16 + y + c) & 255));
      }
  return img;
}

std::string ErrorOf(const std::vector<uint8_t>& bytes) {
  try {
    DecodePpm(bytes, "t.ppm");
  } catch (const IoError& e) {
    return e.what();
  }
  return "";
}

TEST(PpmTest, EncodesGoldenBytes) {
  ImageBuffer img;
  img.width = 2;
  img.height = 1;
  img.samples = {255, 0, 0, 0, 128, 255};
  std::vector<uint8_t> want = Bytes("P6\n2 1\n255\n");
  want.insert(want.end(), img.samples.begin(), img.samples.end());
  EXPECT_EQ(EncodePpm(img), want);
  const ImageBuffer back = DecodePpm(want);
  EXPECT_EQ(back.width, 2);
  EXPECT_EQ(back.height, 1);
  EXPECT_EQ(back.samples, img.samples);
  EXPECT_EQ(back.at(1, 0, 1), 128);
}

TEST(PpmTest, AcceptsCommentsAndLooseWhitespace) {
  std::vector<uint8_t> bytes = Bytes("P6 # made by hand\n 1\t# w\n1 255 ");
  bytes.insert(bytes.end(), {1, 2, 3});
  const ImageBuffer img = DecodePpm(bytes);
  EXPECT_EQ(img.samples, (std::vector<uint8_t>{1, 2, 3}));
}

TEST(PpmTest, ReportsByteOffsets) {
  std::vector<uint8_t> truncated = Bytes("P6\n2 2\n255\n");
  truncated.insert(truncated.end(), 5, 7);
  const std::string e = ErrorOf(truncated);
  EXPECT_NE(e.find("truncated"), std::string::npos) << e;
  EXPECT_NE(e.find("byte offset 16"), std::string::npos) << e;
  EXPECT_NE(e.find("t.ppm"), std::string::npos) << e;

  const std::string m = ErrorOf(Bytes("P6\n1 1\n65535\n\x01\x02\x03"));
  EXPECT_NE(m.find("maxval 65535"), std::string::npos) << m;
  EXPECT_NE(m.find("byte offset 12"), std::string::npos) << m;

  EXPECT_NE(ErrorOf(Bytes("P3\n1 1\n255\n")).find("P6"), std::string::npos);
  EXPECT_NE(ErrorOf(Bytes("P6\nx 1\n255\n")).find("malformed width"),
            std::string::npos);
  EXPECT_NE(ErrorOf(Bytes("P6\n0 1\n255\n")).find("zero"), std::string::npos);
}

TEST(PpmTest, TensorConversionRoundtrips) {
  const ImageBuffer img = Gradient(5, 3);
  const Tensor t = ImageToTensor(img);
  EXPECT_EQ(t.shape(), (Shape{1, 3, 3, 5}));
  EXPECT_DOUBLE_EQ(t[(1 * 3 + 2) * 5 + 4], img.at(4, 2, 1) / 255.0);
  EXPECT_EQ(TensorToImage(t).samples, img.samples);
  Tensor out_of_range({1, 3, 1, 1}, {-0.2, 0.5, 1.7});
  EXPECT_EQ(TensorToImage(out_of_range).samples,
            (std::vector<uint8_t>{0, 128, 255}));
  EXPECT_THROW(TensorToImage(Tensor({1, 1, 2, 2})), ShapeError);
}

TEST(FileTest, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = TempDir("atomic");
  const fs::path path = dir / "a.bin";
  WriteTextAtomic(path, "first");
  WriteTextAtomic(path, "second");
  EXPECT_EQ(ReadFileText(path), "second");
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  EXPECT_THROW(WriteTextAtomic(dir / "no" / "such" / "x", "y"), IoError);
  EXPECT_THROW(ReadFileBytes(dir / "missing"), IoError);
}

TEST(FileTest, ListsImagesInSortedOrder) {
  const fs::path dir = TempDir("list");
  for (const char* name : {"b.ppm", "a.ppm", "c.txt", "d.ppm"}) {
    SaveImage(Gradient(2, 2, name), dir / name);
  }
  const std::vector<fs::path> files = ListImages(dir);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "a.ppm");
  EXPECT_EQ(files[2].filename(), "d.ppm");
  const std::vector<ImageBuffer> images = LoadImages(dir);
  ASSERT_EQ(images.size(), 3u);
  EXPECT_EQ(images[1].samples, Gradient(2, 2).samples);
  EXPECT_THROW(ListImages(dir / "nope"), IoError);
}

TEST(ConfigTest, ParsesAndHashesCanonically) {
  const Config a = Config::Parse("# comment\nq = 3\n  alpha=0.001  \n\n");
  const Config b = Config::Parse("alpha = 0.001\nq = 3\n");
  EXPECT_EQ(a.GetInt("q", 0), 3);
  EXPECT_DOUBLE_EQ(a.GetReal("alpha", 0), 0.001);
  EXPECT_EQ(a.GetString("missing", "x"), "x");
  EXPECT_EQ(a.ToText(), "alpha = 0.001\nq = 3\n");
  EXPECT_EQ(a.HashHex(), b.HashHex());
  EXPECT_EQ(a.HashHex().size(), 16u);
  EXPECT_NE(a.HashHex(), Config::Parse("q = 4\nalpha = 0.001").HashHex());
}

TEST(ConfigTest, ErrorsNameTheLine) {
  try {
    Config::Parse("q = 1\nq = 2\n", "run.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
  }
  EXPECT_THROW(Config::Parse("novalue\n"), ConfigError);
  const Config c = Config::Parse("q = three\nn = -1\nzeta = 1");
  EXPECT_THROW(c.GetInt("q", 0), ConfigError);
  EXPECT_THROW(c.GetUnsigned("n", 0), ConfigError);
  EXPECT_THROW(c.RequireKnown({"q", "n"}), ConfigError);
  EXPECT_NO_THROW(c.RequireKnown({"q", "n", "zeta"}));
}

TEST(ConfigTest, SeedEnvironmentOverride) {
  Config c = Config::Parse("seed = 1\n");
  ::unsetenv(kSeedEnvironmentVariable);
  ApplySeedOverride(c);
  EXPECT_EQ(c.GetUnsigned("seed", 0), 1u);
  ::setenv(kSeedEnvironmentVariable, "42", 1);
  ApplySeedOverride(c);
  EXPECT_EQ(c.GetUnsigned("seed", 0), 42u);
  ::setenv(kSeedEnvironmentVariable, "abc", 1);
  EXPECT_THROW(ApplySeedOverride(c), ConfigError);
  ::unsetenv(kSeedEnvironmentVariable);
}

TEST(DatasetTest, ExactSizeImageYieldsWholeImage) {
  PatchDataset data({Gradient(8, 8)}, 8);
  Rng rng(1);
  const Patch p = data.Sample(0, rng);
  EXPECT_EQ(p.x, 0);
  EXPECT_EQ(p.y, 0);
  EXPECT_EQ(TensorToImage(p.pixels).samples, Gradient(8, 8).samples);
}

TEST(DatasetTest, SkipsSmallImagesWithWarning) {
  std::ostringstream warn;
  PatchDataset data({Gradient(4, 9, "small.ppm"), Gradient(9, 9)}, 8, &warn);
  EXPECT_EQ(data.size(), 1);
  EXPECT_NE(warn.str().find("small.ppm"), std::string::npos);
  EXPECT_THROW(PatchDataset({Gradient(4, 4)}, 8), std::invalid_argument);
}

TEST(DatasetTest, SameSeedSamePatches) {
  PatchDataset data({Gradient(20, 12), Gradient(16, 16), Gradient(9, 30)}, 8);
  Rng a(5), b(5), c(6);
  const std::vector<Patch> pa = data.Epoch(a), pb = data.Epoch(b),
                           pc = data.Epoch(c);
  bool differs = false;
  ASSERT_EQ(pa.size(), 3u);
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].image, pb[i].image);
    EXPECT_EQ(pa[i].x, pb[i].x);
    EXPECT_EQ(pa[i].y, pb[i].y);
    differs |= pa[i].image != pc[i].image || pa[i].x != pc[i].x ||
               pa[i].y != pc[i].y;
  }
  EXPECT_TRUE(differs);
}

TEST(DatasetTest, OffsetsAreUniform) {
  PatchDataset data({Gradient(12, 12)}, 8);
  Rng rng(11);
  const int draws = 100000;
  std::vector<int> xs(5), ys(5);
  for (int i = 0; i < draws; ++i) {
    const Patch p = data.Sample(0, rng);
    ++xs.at(p.x);
    ++ys.at(p.y);
  }
  for (const std::vector<int>& counts : {xs, ys}) {
    double chi2 = 0;
    for (int n : counts) chi2 += (n - draws / 5.0) * (n - draws / 5.0) / (draws / 5.0);
    EXPECT_LT(chi2, 18.47);  // p = 0.001 with 4 degrees of freedom
  }
}

}  // namespace
}  // namespace qrc
