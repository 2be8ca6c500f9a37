#include "synthetic.hpp"

#include <cstdio>

#include "aggtopics/random.hpp"

namespace aggtopics::testing {

namespace {

std::string numbered(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

// Marker terms use letters only so no two groups share a token.
std::string marker_term(int group, int j) {
  std::string s = "mk";
  s += static_cast<char>('a' + group / 26);
  s += static_cast<char>('a' + group % 26);
  s += static_cast<char>('a' + j);
  return s;
}

}  // namespace

GroupDictionary SyntheticData::marker_dictionary() const {
  GroupDictionary dict;
  dict.group_key = "group";
  for (const auto& terms : markers)
    for (const auto& t : terms) dict.add_single(t, DictionaryRule::dominance);
  return dict;
}

SyntheticData make_synthetic(const SyntheticOptions& o) {
  Rng rng(o.seed);
  SyntheticData data;
  std::vector<std::string> background;
  for (int v = 0; v < o.background_terms; ++v) background.push_back(numbered("w", v, 3));
  const int per_theme = o.background_terms / o.themes;

  for (int g = 0; g < o.groups; ++g) {
    data.group_names.push_back(numbered("g", g, 2));
    std::vector<std::string> m;
    for (int j = 0; j < o.marker_terms; ++j) m.push_back(marker_term(g, j));
    data.markers.push_back(std::move(m));
  }

  const int units_per_entity = o.units_per_group / o.entities_per_group;
  const int marked = static_cast<int>(o.marker_unit_share * o.units_per_group + 0.5);
  for (int g = 0; g < o.groups; ++g) {
    // Marked units are spread evenly over the group's entities: the i-th
    // marked unit goes to entity i mod E, at a random position inside it.
    std::vector<bool> has_marker(o.units_per_group, false);
    std::vector<std::vector<int>> free_slots(o.entities_per_group);
    for (int u = 0; u < o.units_per_group; ++u) free_slots[u / units_per_entity].push_back(u);
    for (int i = 0; i < marked; ++i) {
      auto& slots = free_slots[i % o.entities_per_group];
      if (slots.empty()) continue;
      const auto pick = rng.below(slots.size());
      has_marker[slots[pick]] = true;
      slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(pick));
    }

    for (int u = 0; u < o.units_per_group; ++u) {
      const int theme = static_cast<int>(rng.below(o.themes));
      const int len = o.min_tokens + static_cast<int>(rng.below(o.max_tokens - o.min_tokens + 1));
      std::string text;
      auto emit = [&](const std::string& w) {
        if (!text.empty()) text += ' ';
        text += w;
      };
      const int n_marker = has_marker[u] ? o.marker_tokens : 0;
      for (int t = 0; t < n_marker; ++t) emit(data.markers[g][rng.below(o.marker_terms)]);
      for (int t = n_marker; t < len; ++t) {
        if (rng.uniform() < o.theme_share)
          emit(background[theme * per_theme + rng.below(per_theme)]);
        else
          emit(background[rng.below(o.background_terms)]);
      }
      RawUnit unit;
      unit.id = data.group_names[g] + "_u" + numbered("", u, 3);
      unit.text = std::move(text);
      unit.meta["group"] = {data.group_names[g]};
      unit.meta["entity"] = {data.group_names[g] + "_e" + numbered("", u / units_per_entity, 2)};
      data.units.push_back(std::move(unit));
    }
  }
  return data;
}

}  // namespace aggtopics::testing
