/*
 * Copyright 2026 The ctxad Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CTXAD_ARTIFACT_HPP_
#define CTXAD_ARTIFACT_HPP_

#include <string>

#include "ctxad/pipeline.hpp"

namespace ctxad {

inline constexpr const char* kModelFormat = "ctxad-model/1";

// Single JSON document. Matrices are {"rows", "cols", "data"} with data in
// row-major order; doubles are written in shortest round-trip form so a
// reload is bit-identical.
std::string serialize_model(const Model& model);
Model deserialize_model(const std::string& text);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// Every numeric parameter compared bit for bit.
bool bit_identical(const Model& a, const Model& b);

}  // namespace ctxad

#endif  // CTXAD_ARTIFACT_HPP_
