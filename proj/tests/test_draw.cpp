#include <gtest/gtest.h>

#include "ssltune/draw.hpp"
#include "support.hpp"

using namespace ssltune;

TEST(Marker, ChangesExactlyTheDiscPixels) {
  const ImageBuffer img(41, 41, Rgb{10, 10, 10});
  MarkerStyle style;
  style.label_offset = {100, 100};  // label lands outside the image
  const auto out = draw_point_marker(img, {20, 20}, "A", style);
  for (int y = 0; y < 41; ++y)
    for (int x = 0; x < 41; ++x) {
      const int dx = x - 20;
      const int dy = y - 20;
      const bool in_disc = dx * dx + dy * dy <= 64;
      EXPECT_EQ(out.at(x, y), (in_disc ? Rgb{255, 0, 0} : Rgb{10, 10, 10})) << x << "," << y;
    }
}

TEST(Marker, LabelUsesEmbeddedFont) {
  const ImageBuffer img(40, 20, Rgb{0, 0, 0});
  MarkerStyle style = MarkerStyle::with_radius(1);
  const auto out = draw_point_marker(img, {2, 6}, "1", style);
  const auto* rows = font8x8::glyph('1');
  ASSERT_NE(rows, nullptr);
  for (int gy = 0; gy < 8; ++gy)
    for (int gx = 0; gx < 8; ++gx) {
      const bool on = ((*rows)[std::size_t(gy)] >> gx) & 1u;
      const Point q{2 + 3 + gx, 6 - 4 + gy};
      EXPECT_EQ(out.at(q.x, q.y), (on ? Rgb{255, 255, 255} : Rgb{0, 0, 0}));
    }
}

TEST(Marker, GlyphCoverage) {
  for (char c = '0'; c <= '9'; ++c) EXPECT_NE(font8x8::glyph(c), nullptr);
  for (char c = 'A'; c <= 'Z'; ++c) EXPECT_NE(font8x8::glyph(c), nullptr);
  EXPECT_EQ(font8x8::glyph('%'), nullptr);
}

TEST(Marker, DeterministicRendering) {
  RngStream rng(1);
  const auto img = fixtures::random_noise_image(rng, 30, 30);
  EXPECT_EQ(draw_point_marker(img, {5, 6}, "Q"), draw_point_marker(img, {5, 6}, "Q"));
}

TEST(Marker, ClipsAtEdges) {
  const ImageBuffer img(20, 20, Rgb{0, 0, 0});
  ImageBuffer out;
  ASSERT_NO_THROW(out = draw_point_marker(img, {0, 19}, "Z"));
  EXPECT_EQ(out.at(0, 19), (Rgb{255, 0, 0}));
  EXPECT_EQ(out.at(8, 19), (Rgb{255, 0, 0}));
  EXPECT_EQ(out.at(0, 11), (Rgb{255, 0, 0}));
}

TEST(Marker, CenterOutsideThrows) {
  const ImageBuffer img(10, 10);
  EXPECT_THROW(draw_point_marker(img, {10, 0}, "A"), PointOutOfBounds);
  EXPECT_THROW(draw_point_marker(img, {0, -1}, "A"), PointOutOfBounds);
  EXPECT_THROW(draw_point_marker(img, {1, 1}, "A", MarkerStyle::with_radius(0)), ConfigError);
}

TEST(Composite, EqualHeights) {
  const ImageBuffer a(30, 20, Rgb{1, 1, 1});
  const ImageBuffer b(15, 20, Rgb{2, 2, 2});
  const auto c = compose_side_by_side(a, b);
  EXPECT_DOUBLE_EQ(c.layout.scale2, 1.0);
  EXPECT_EQ(c.layout.x_offset, 30);
  EXPECT_EQ(c.image.width(), 45);
  EXPECT_EQ(c.image.height(), 20);
  EXPECT_EQ(c.image.at(29, 5), (Rgb{1, 1, 1}));
  EXPECT_EQ(c.image.at(30, 5), (Rgb{2, 2, 2}));
  EXPECT_EQ(c.layout.map_image2({3, 4}), (Point{33, 4}));
}

TEST(Composite, TallerSecondImageIsHalved) {
  const ImageBuffer a(100, 40, Rgb{1, 1, 1});
  const ImageBuffer b(60, 80, Rgb{2, 2, 2});
  const auto c = compose_side_by_side(a, b);
  EXPECT_DOUBLE_EQ(c.layout.scale2, 0.5);
  EXPECT_EQ(c.layout.width2, 30);
  EXPECT_EQ(c.image.width(), 130);
  EXPECT_EQ(c.layout.map_image2({10, 20}), (Point{105, 10}));
}

TEST(Composite, MappingClampsToRescaledImage) {
  CompositeLayout l{50, 0.5, 10, 10};
  EXPECT_EQ(l.map_image2({19, 19}), (Point{59, 9}));  // 9.5 rounds to 10, clamped to 9
  EXPECT_EQ(l.map_image2({3, 5}), (Point{52, 3}));    // 1.5 -> 2, 2.5 -> 3
}
