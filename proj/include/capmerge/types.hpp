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

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace capmerge {

// Problems caused by user input (bad files, bad flags, schema violations).
// The CLI maps these to exit code 1; any other exception is exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pixel rectangle, origin at the top-left corner of the image.
struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
};

struct FaceObservation {
  BBox bbox;
  std::optional<std::vector<double>> embedding;
  std::optional<std::string> identity;   // canonical name once resolved
  std::optional<double> similarity;
};

struct ImageRecord {
  std::string id;
  int width = 0;
  int height = 0;
  std::string description;
  std::optional<std::string> first_sentence;
  std::optional<std::string> synthetic_caption;
  std::vector<std::string> ground_truth_names;
  std::vector<FaceObservation> faces;
};

}  // namespace capmerge
