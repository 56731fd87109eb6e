#pragma once

#include <string_view>

namespace tkg::prompts {

extern const std::string_view kGapDetectV1;
extern const std::string_view kRerankV1;
extern const std::string_view kJustifyCollabV1;
extern const std::string_view kJustifyDatasetV1;

}  // namespace tkg::prompts
