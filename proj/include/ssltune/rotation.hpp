#pragma once

#include <array>
#include <string>
#include <vector>

#include "ssltune/generated.hpp"
#include "ssltune/image.hpp"
#include "ssltune/manifest.hpp"
#include "ssltune/rng.hpp"
#include "ssltune/templates.hpp"
#include "ssltune/transforms.hpp"

namespace ssltune {

inline constexpr std::array<int, 4> kRotationAngles = {0, 90, 180, 270};

// Rotation prediction: the image is rotated clockwise by an angle drawn
// uniformly from {0, 90, 180, 270}; the response is that angle in decimal.
inline GeneratedSample gen_rotation_sample(const std::string& img_ref, const ImageBuffer& img,
                                           RngStream& rng, const PromptTemplate& tpl) {
  const int theta = kRotationAngles[rng.below(kRotationAngles.size())];
  GeneratedSample out;
  out.images.push_back(rotate90(img, theta));
  auto& s = out.sample;
  s.task = TaskTag::rotation;
  s.instruction = with_image_tokens(1, tpl.render({}));
  s.response = std::to_string(theta);
  s.meta = Json{{"theta", theta},
                {"source_image", img_ref},
                {"source_width", img.width()},
                {"source_height", img.height()},
                {"template", tpl.task + "/" + tpl.version}};
  return out;
}

}  // namespace ssltune
