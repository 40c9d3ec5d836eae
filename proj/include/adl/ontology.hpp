// Copyright 2026 The adlrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADL_ONTOLOGY_HPP_
#define ADL_ONTOLOGY_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adl/embedding.hpp"
#include "adl/error.hpp"
#include "adl/io.hpp"

namespace adl {

inline constexpr int kNumClasses = 15;

enum class Category { Bathroom, Kitchen, LivingBedroom, Outdoor };

inline std::string_view category_name(Category c) {
  switch (c) {
    case Category::Bathroom: return "Bathroom";
    case Category::Kitchen: return "Kitchen";
    case Category::LivingBedroom: return "Living/Bed room";
    case Category::Outdoor: return "Outdoor";
  }
  return "?";
}

struct ActivityClass {
  int id;
  std::string_view name;
  Category category;
};

// The 15 target home activities. Ids are stable and define the class index
// used throughout training, checkpoints, and reports.
inline const std::array<ActivityClass, kNumClasses>& activity_classes() {
  static const std::array<ActivityClass, kNumClasses> classes = {{
      {0, "Bathing/Showering", Category::Bathroom},
      {1, "Washing hands and face", Category::Bathroom},
      {2, "Flushing toilet", Category::Bathroom},
      {3, "Brushing teeth", Category::Bathroom},
      {4, "Shavering", Category::Bathroom},
      {5, "Chopping food", Category::Kitchen},
      {6, "Frying food", Category::Kitchen},
      {7, "Boiling water", Category::Kitchen},
      {8, "Squeezing juice", Category::Kitchen},
      {9, "Using microwave oven", Category::Kitchen},
      {10, "Watching TV", Category::LivingBedroom},
      {11, "Listening to music", Category::LivingBedroom},
      {12, "Floor cleaning", Category::LivingBedroom},
      {13, "Chatting", Category::LivingBedroom},
      {14, "Strolling", Category::Outdoor},
  }};
  return classes;
}

inline const ActivityClass& activity_class(int id) { return activity_classes()[static_cast<std::size_t>(id)]; }

inline std::string_view class_name(int id) { return activity_class(id).name; }

inline std::optional<int> class_id_by_name(std::string_view name) {
  for (const auto& c : activity_classes()) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

// Source-ontology display name -> activity class. Matching is exact-string;
// any disambiguation happens when the map is built, not at lookup time.
class LabelMap {
 public:
  // The shipped association: 18 source labels onto the 15 classes.
  static LabelMap builtin() {
    LabelMap m;
    m.add("Bathtub (filling or washing)", 0);
    m.add("Sink (filling or washing)", 1);
    m.add("Water tap, faucet", 1);
    m.add("Toilet flush", 2);
    m.add("Toothbrush", 3);
    m.add("Electric shaver, electric razor", 4);
    m.add("Chopping (food)", 5);
    m.add("Frying (food)", 6);
    m.add("Boiling", 7);
    m.add("Blender", 8);
    m.add("Microwave oven", 9);
    m.add("Television", 10);
    m.add("Piano", 11);
    m.add("Vacuum cleaner", 12);
    m.add("Conversation", 13);
    m.add("Narration, monologue", 13);
    m.add("Walk, footsteps", 14);
    m.add("Wind noise (microphone)", 14);
    return m;
  }

  // CSV columns: source_label,activity_name,category.
  static LabelMap from_csv(const std::filesystem::path& path) {
    auto in = open_input(path, /*binary=*/false);
    LabelMap m;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = csv_split(line);
      if (first && !fields.empty() && fields[0] == "source_label") {
        first = false;
        continue;
      }
      first = false;
      if (fields.size() < 2) {
        throw format_error(path.string() + ": label map rows need source_label,activity_name");
      }
      const auto id = class_id_by_name(fields[1]);
      if (!id) {
        throw format_error(path.string() + ": unknown activity class '" + fields[1] + "'");
      }
      m.add(fields[0], *id);
    }
    return m;
  }

  void to_csv(const std::filesystem::path& path) const {
    auto out = open_output(path, /*binary=*/false);
    out << "source_label,activity_name,category\n";
    for (const auto& [label, id] : entries_) {
      const auto& cls = activity_class(id);
      out << csv_field(label) << ',' << csv_field(std::string(cls.name)) << ','
          << csv_field(std::string(category_name(cls.category))) << '\n';
    }
  }

  void add(std::string source_label, int class_id) {
    if (class_id < 0 || class_id >= kNumClasses) {
      throw input_error("LabelMap: class id out of range: " + std::to_string(class_id));
    }
    entries_[std::move(source_label)] = class_id;
  }

  std::optional<int> lookup(const std::string& source_label) const {
    const auto it = entries_.find(source_label);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, int>& entries() const { return entries_; }

 private:
  std::map<std::string, int> entries_;
};

// Maps raw labels to target classes; unrecognized labels are ignored.
inline std::set<int> associate(const std::set<std::string>& raw_labels, const LabelMap& map) {
  std::set<int> classes;
  for (const auto& label : raw_labels) {
    if (const auto id = map.lookup(label)) classes.insert(*id);
  }
  return classes;
}

struct LabeledClip {
  EmbeddingClip clip;
  int class_id;
};

// Keeps exactly the clips whose raw labels map to one target class; clips
// touching two or more target classes are dropped for mutual exclusiveness.
// Labels outside the target set never count as co-occurrence.
inline std::vector<LabeledClip> filter_cooccurrence(const std::vector<EmbeddingClip>& clips,
                                                    const LabelMap& map) {
  std::vector<LabeledClip> kept;
  for (const auto& clip : clips) {
    const auto classes = associate(clip.raw_labels, map);
    if (classes.size() == 1) {
      kept.push_back(LabeledClip{clip, *classes.begin()});
    }
  }
  return kept;
}

}  // namespace adl

#endif  // ADL_ONTOLOGY_HPP_
