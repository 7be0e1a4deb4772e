// Copyright 2026 The vocrep Authors.
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

#include "vocrep/model/params.hpp"

#include <cmath>

#include "vocrep/rng.hpp"

namespace vocrep::model {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

template <typename T>
void init_scratch(NamedParams<T>& params, std::uint64_t seed) {
  for (auto& [name, tensor] : params) {
    auto values = tensor.mutable_values();
    if (ends_with(name, ".bias")) {
      std::fill(values.begin(), values.end(), T(0));
    } else if (ends_with(name, ".gain")) {
      std::fill(values.begin(), values.end(), T(1));
    } else {
      Rng rng = Rng::substream(seed, "init." + name);
      double bound = 0.1;
      if (!ends_with(name, "mask_emb")) {
        std::size_t fan_in = 1;
        for (std::size_t i = 1; i < tensor.rank(); ++i) fan_in *= tensor.dim(i);
        bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      }
      for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
    }
  }
}

template void init_scratch(NamedParams<float>&, std::uint64_t);
template void init_scratch(NamedParams<double>&, std::uint64_t);

}  // namespace vocrep::model
