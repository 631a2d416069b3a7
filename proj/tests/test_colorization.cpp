#include <gtest/gtest.h>

#include <regex>

#include "ssltune/colorization.hpp"
#include "ssltune/templates.hpp"
#include "support.hpp"

using namespace ssltune;

namespace {

ColorVocab shipped_vocab() { return ColorVocab::load_csv(SSLTUNE_DEFAULT_VOCAB); }

// Three vertical solid blocks, each `bw` wide.
ImageBuffer three_blocks(int bw, int h, Rgb a, Rgb b, Rgb c) {
  ImageBuffer img(3 * bw, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < 3 * bw; ++x) img.set(x, y, x < bw ? a : (x < 2 * bw ? b : c));
  return img;
}

Rgb direct_mean(const ImageBuffer& img, Point p, int r) {
  long s[3] = {0, 0, 0};
  for (int y = p.y - r / 2; y < p.y - r / 2 + r; ++y)
    for (int x = p.x - r / 2; x < p.x - r / 2 + r; ++x) {
      s[0] += img.at(x, y).r;
      s[1] += img.at(x, y).g;
      s[2] += img.at(x, y).b;
    }
  const double n = double(r) * r;
  auto avg = [&](long v) { return std::uint8_t(std::floor(double(v) / n + 0.5)); };
  return {avg(s[0]), avg(s[1]), avg(s[2])};
}

}  // namespace

TEST(Vocab, ShippedFileParses) {
  const auto v = shipped_vocab();
  EXPECT_EQ(v.size(), 949u);
  EXPECT_EQ(v.entries().front().name, "cloudy blue");
}

TEST(Vocab, CsvErrors) {
  EXPECT_THROW(ColorVocab::parse_csv("red,#ff0000\nred,#fe0000\n"), FormatError);
  EXPECT_THROW(ColorVocab::parse_csv("red;#ff0000\n"), FormatError);
  EXPECT_THROW(ColorVocab::parse_csv("red,#ff00zz\n"), FormatError);
  EXPECT_THROW(ColorVocab::parse_csv(""), FormatError);
  const auto v = ColorVocab::parse_csv("a, b,#010203\r\n\nc,#0A0b0C");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.entries()[0].name, "a, b");
  EXPECT_EQ(v.entries()[1].rgb, (Rgb{10, 11, 12}));
}

TEST(NearestName, ExactAndTwoEntryCases) {
  const auto v = shipped_vocab();
  for (std::size_t i = 0; i < v.size(); i += 37) {
    const auto& e = v.entries()[i];
    // Exact hit returns this entry unless an earlier entry has the same RGB.
    const auto& name = nearest_color_name(e.rgb, v);
    std::size_t first = 0;
    while (!(v.entries()[first].rgb == e.rgb)) ++first;
    EXPECT_EQ(name, v.entries()[first].name);
  }
  const ColorVocab rb({{"red", {255, 0, 0}}, {"blue", {0, 0, 255}}});
  EXPECT_EQ(nearest_color_name({200, 10, 10}, rb), "red");
}

TEST(NearestName, TieGoesToLowestIndex) {
  const ColorVocab v({{"a", {0, 0, 0}}, {"b", {100, 100, 100}}, {"c", {50, 50, 250}}, {"d", {20, 0, 0}}});
  EXPECT_EQ(nearest_color_name({10, 0, 0}, v), "a");
}

TEST(Grayscale, Detection) {
  EXPECT_TRUE(is_grayscale(ImageBuffer(5, 5, Rgb{9, 9, 9})));
  ImageBuffer img(5, 5, Rgb{9, 9, 9});
  img.set(2, 2, {255, 0, 0});
  EXPECT_FALSE(is_grayscale(img));
  ImageBuffer near(4, 4, Rgb{100, 102, 101});
  EXPECT_TRUE(is_grayscale(near));
  near.set(0, 0, {100, 103, 101});
  EXPECT_FALSE(is_grayscale(near));
}

TEST(MeanRgb, ConstantAndHandOracle) {
  EXPECT_EQ(mean_rgb(ImageBuffer(30, 30, Rgb{100, 150, 200}), {15, 9}, 5), (Rgb{100, 150, 200}));
  ImageBuffer img(5, 5, Rgb{0, 0, 0});
  img.set(1, 3, {255, 255, 255});
  EXPECT_EQ(mean_rgb(img, {2, 2}, 5), (Rgb{10, 10, 10}));
}

TEST(MeanRgb, HalfRoundsUp) {
  // 2x2 window over columns of 0 and 1: mean 0.5 rounds to 1.
  ImageBuffer img(2, 2);
  img.set(1, 0, {1, 1, 1});
  img.set(1, 1, {1, 1, 1});
  EXPECT_EQ(mean_rgb(img, {1, 1}, 2), (Rgb{1, 1, 1}));
}

TEST(MeanRgb, WindowLeavingImageThrows) {
  const ImageBuffer img(10, 10);
  EXPECT_THROW(mean_rgb(img, {1, 5}, 5), WindowOutOfBounds);
  EXPECT_THROW(mean_rgb(img, {5, 8}, 5), WindowOutOfBounds);
  EXPECT_NO_THROW(mean_rgb(img, {2, 7}, 5));
}

TEST(MeanRgb, MatchesDirectSummation) {
  RngStream rng(1);
  const auto img = fixtures::random_noise_image(rng, 40, 30);
  for (int i = 0; i < 300; ++i) {
    const int r = 1 + 2 * int(rng.below(4));
    const Point p{int(rng.uniform_int(r / 2, 39 - r / 2)), int(rng.uniform_int(r / 2, 29 - r / 2))};
    ASSERT_EQ(mean_rgb(img, p, r), direct_mean(img, p, r));
  }
}

TEST(SamplePoints, ColorfulImageSatisfiesConstraints) {
  RngStream src(2);
  const auto img = fixtures::colorful_image(src, 160, 120);
  ColorTaskConfig cfg;
  RngStream rng(3);
  const auto pts = sample_distinct_points(img, cfg, rng);
  ASSERT_EQ(pts.size(), 5u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_GE(pts[i].location.x, 20);
    EXPECT_GE(pts[i].location.y, 20);
    EXPECT_LE(pts[i].location.x, 160 - 1 - 20);
    EXPECT_LE(pts[i].location.y, 120 - 1 - 20);
    EXPECT_EQ(pts[i].color, direct_mean(img, pts[i].location, 5));
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      EXPECT_GE(std::sqrt(double(rgb_distance2(pts[i].color, pts[j].color))), 40.0);
  }
}

TEST(SamplePoints, UniformImageExhausts) {
  ColorTaskConfig cfg;
  cfg.max_attempts = 200;
  RngStream rng(4);
  EXPECT_THROW(sample_distinct_points(ImageBuffer(100, 100, Rgb{1, 200, 3}), cfg, rng),
               RejectionExhausted);
}

TEST(SamplePoints, TooSmallForMargin) {
  ColorTaskConfig cfg;
  RngStream rng(5);
  EXPECT_THROW(sample_distinct_points(ImageBuffer(40, 100, Rgb{1, 2, 3}), cfg, rng), DegenerateImage);
}

TEST(SamplePoints, OnePointPerSolidBlock) {
  const Rgb a{255, 0, 0};
  const Rgb b{0, 255, 0};
  const Rgb c{0, 0, 255};
  const auto img = three_blocks(60, 60, a, b, c);
  ColorTaskConfig cfg;
  cfg.K = 3;
  cfg.r = 1;  // single-pixel windows see exactly one block color
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed);
    const auto pts = sample_distinct_points(img, cfg, rng);
    ASSERT_EQ(pts.size(), 3u);
    std::set<int> blocks;
    for (const auto& p : pts) blocks.insert(p.location.x / 60);
    EXPECT_EQ(blocks.size(), 3u);
  }
}

TEST(ColorConfig, Validation) {
  ColorTaskConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.K = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.K = 27;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.r = 4;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.margin = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ColorAnswer, Formatting) {
  EXPECT_EQ(format_color_answer({1, 2, 3, 4, 5}), "A-1,B-2,C-3,D-4,E-5");
  EXPECT_EQ(format_color_answer({3, 1, 2, 5, 4}).substr(0, 3), "A-3");
  EXPECT_EQ(format_candidate(2, {1, 22, 133}, "blue"), "2. RGB(1, 22, 133) (blue)");
}

TEST(GenColor, GrayscaleSourceRejected) {
  const auto vocab = shipped_vocab();
  RngStream rng(6);
  EXPECT_THROW(gen_color_sample("g.png", ImageBuffer(100, 100, Rgb{7, 7, 7}), vocab, {}, rng,
                                templates::builtin("colorization")),
               GrayscaleSource);
}

TEST(GenColor, EndToEndMatchesIndependentDerivation) {
  const auto vocab = shipped_vocab();
  const auto img = three_blocks(60, 70, {200, 30, 40}, {20, 180, 60}, {40, 60, 220});
  ColorTaskConfig cfg;
  cfg.K = 3;
  const std::regex line(R"((\d+)\. RGB\((\d+), (\d+), (\d+)\))");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RngStream rng(seed);
    const auto g = gen_color_sample("b.png", img, vocab, cfg, rng, templates::builtin("colorization"));
    ASSERT_EQ(g.images.size(), 1u);
    EXPECT_EQ(g.images[0].at(0, 0), to_grayscale(img).at(0, 0));

    // Candidate colors as listed in the instruction text.
    std::vector<std::pair<int, Rgb>> listed;
    for (std::sregex_iterator it(g.sample.instruction.begin(), g.sample.instruction.end(), line), end;
         it != end; ++it)
      listed.push_back({std::stoi((*it)[1]), Rgb{std::uint8_t(std::stoi((*it)[2])),
                                                  std::uint8_t(std::stoi((*it)[3])),
                                                  std::uint8_t(std::stoi((*it)[4]))}});
    ASSERT_EQ(listed.size(), 3u);

    std::string expected;
    const auto& pts = g.sample.meta["points"];
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Point p{pts[k]["x"].get<int>(), pts[k]["y"].get<int>()};
      const Rgb truth = direct_mean(img, p, cfg.r);
      int slot = -1;
      for (const auto& [idx, c] : listed)
        if (c == truth) slot = idx;
      ASSERT_NE(slot, -1);
      if (k) expected += ',';
      expected += std::string(1, char('A' + k)) + "-" + std::to_string(slot);
    }
    EXPECT_EQ(g.sample.response, expected);
    EXPECT_EQ(g.sample.instruction.rfind("<image>\n", 0), 0u);
  }
}

TEST(GenColor, DeterministicForSameStream) {
  const auto vocab = shipped_vocab();
  RngStream src(7);
  const auto img = fixtures::colorful_image(src, 120, 100);
  RngStream r1(8);
  RngStream r2(8);
  const auto tpl = templates::builtin("colorization");
  const auto a = gen_color_sample("x", img, vocab, {}, r1, tpl);
  const auto b = gen_color_sample("x", img, vocab, {}, r2, tpl);
  EXPECT_EQ(a.sample, b.sample);
  EXPECT_EQ(a.images, b.images);
}
