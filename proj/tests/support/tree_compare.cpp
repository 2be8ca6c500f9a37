#include "tree_compare.hpp"

#include <fstream>
#include <iterator>
#include <set>

namespace aggtopics::testing {

namespace {

namespace fs = std::filesystem;

std::set<std::string> files_under(const fs::path& root) {
  std::set<std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == "timing.json" || name == "timing.csv") continue;
    out.insert(fs::relative(e.path(), root).generic_string());
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::string> tree_differences(const fs::path& a, const fs::path& b) {
  const auto fa = files_under(a), fb = files_under(b);
  std::set<std::string> all = fa;
  all.insert(fb.begin(), fb.end());
  std::vector<std::string> diff;
  for (const auto& rel : all) {
    if (!fa.contains(rel) || !fb.contains(rel) || slurp(a / rel) != slurp(b / rel)) diff.push_back(rel);
  }
  return diff;
}

}  // namespace aggtopics::testing
