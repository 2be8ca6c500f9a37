#pragma once

#include <string_view>

namespace aggtopics::detail {

extern const std::string_view kStopwordsFile;
extern const std::string_view kUsStatesFile;

}  // namespace aggtopics::detail
