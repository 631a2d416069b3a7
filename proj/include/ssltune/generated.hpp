#pragma once

#include <vector>

#include "ssltune/image.hpp"
#include "ssltune/manifest.hpp"

namespace ssltune {

// A generated sample plus the rendered images it refers to. The caller
// assigns `sample.id` and `sample.images` (file references) when
// materializing.
struct GeneratedSample {
  InstructionSample sample;
  std::vector<ImageBuffer> images;
};

}  // namespace ssltune
