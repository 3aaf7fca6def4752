// Copyright 2026 The shapefit Authors. All Rights Reserved.
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

#ifndef SHAPEFIT_DATASET_HPP
#define SHAPEFIT_DATASET_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "shapefit/error.hpp"
#include "shapefit/geometry.hpp"
#include "shapefit/image.hpp"

namespace shapefit {

enum class Split { train, test };

inline std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

struct DatasetEntry {
  Split split = Split::train;
  std::filesystem::path image;
  std::optional<std::filesystem::path> landmarks;
  std::optional<std::filesystem::path> mask;

  /// Output file stem shared by every artifact derived from this entry.
  std::string name() const { return image.stem().string(); }
};

struct Dataset {
  std::vector<DatasetEntry> entries;
  std::size_t landmark_count = 0;  ///< 0 when no entry has landmarks

  std::vector<const DatasetEntry*> split(Split s) const {
    std::vector<const DatasetEntry*> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(&e);
    return out;
  }
};

/// Manifest lines: "<train|test>\t<image>\t<landmarks|->\t<mask|->". Paths
/// are relative to the manifest's directory; '#' starts a comment line.
inline Dataset parse_manifest(std::istream& in, const std::filesystem::path& base,
                              const std::string& name) {
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  auto resolve = [&](const std::string& p) -> std::optional<std::filesystem::path> {
    if (p == "-") return std::nullopt;
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string where = name + ":" + std::to_string(lineno);
    if (fields.size() != 4) throw DataError(where + ": expected 4 tab-separated fields");
    DatasetEntry e;
    if (fields[0] == "train") e.split = Split::train;
    else if (fields[0] == "test") e.split = Split::test;
    else throw DataError(where + ": split must be 'train' or 'test'");
    auto image = resolve(fields[1]);
    if (!image) throw DataError(where + ": image path is required");
    e.image = *image;
    e.landmarks = resolve(fields[2]);
    e.mask = resolve(fields[3]);
    if (e.split == Split::train && !e.landmarks)
      throw DataError(where + ": training entries need a landmark file");
    ds.entries.push_back(std::move(e));
  }
  if (ds.entries.empty()) throw DataError(name + ": manifest lists no entries");
  return ds;
}

/// Parses the manifest and checks that every referenced file exists, masks
/// match their image size and all landmark files have the same length.
inline Dataset load_dataset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest " + manifest.string());
  Dataset ds = parse_manifest(in, manifest.parent_path(), manifest.string());

  std::optional<std::filesystem::path> first_landmarks;
  for (const auto& e : ds.entries) {
    if (!std::filesystem::exists(e.image)) throw DataError("missing file " + e.image.string());
    if (e.mask && !std::filesystem::exists(*e.mask))
      throw DataError("missing file " + e.mask->string());
    if (e.landmarks) {
      const LandmarkShape shape = read_landmarks(*e.landmarks);
      if (ds.landmark_count == 0) {
        ds.landmark_count = shape.size();
        first_landmarks = *e.landmarks;
      } else if (shape.size() != ds.landmark_count) {
        throw DataError("landmark count mismatch: " + e.landmarks->string() + " has " +
                        std::to_string(shape.size()) + " points, " + first_landmarks->string() +
                        " has " + std::to_string(ds.landmark_count));
      }
    }
    if (e.mask) {
      const GrayImage img = read_gray_image(e.image);
      const GrayImage mask = read_gray_image(*e.mask);
      if (img.width != mask.width || img.height != mask.height)
        throw DataError("mask " + e.mask->string() + " is " + std::to_string(mask.width) + "x" +
                        std::to_string(mask.height) + " but image " + e.image.string() + " is " +
                        std::to_string(img.width) + "x" + std::to_string(img.height));
    }
  }
  return ds;
}

inline std::string format_manifest(const Dataset& ds, const std::filesystem::path& base) {
  std::string out = "# split\timage\tlandmarks\tmask\n";
  auto rel = [&](const std::optional<std::filesystem::path>& p) {
    return p ? std::filesystem::relative(*p, base).generic_string() : std::string("-");
  };
  for (const auto& e : ds.entries) {
    out += std::string(to_string(e.split)) + "\t" + rel(e.image) + "\t" + rel(e.landmarks) + "\t" +
           rel(e.mask) + "\n";
  }
  return out;
}

}  // namespace shapefit

#endif  // SHAPEFIT_DATASET_HPP
