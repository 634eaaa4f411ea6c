// Copyright 2026 The Gemel Authors.
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

// Generated by tests/oracles/make_oracle_values.py; do not edit.
#ifndef GEMEL_TESTS_ORACLE_VALUES_H_
#define GEMEL_TESTS_ORACLE_VALUES_H_

#include <cstddef>

namespace oracle {

inline constexpr size_t kLmVocab = 9, kLmWidth = 4, kLmHeads = 2, kLmLayers = 2, kLmMaxLen = 8;
inline constexpr unsigned kLmInput[] = {1, 6, 2, 7, 3};
inline constexpr double kLmLogits[] = {0.62051475836519665, -0.91920300580733838, 1.1116724569977163, -1.1756822431711946, 1.1038356930889666, -0.90443505774059796, 0.6005221410853131, -0.227215697052918, -0.17234672925759154, 0.73289427773325166, -1.0284733628358345, 1.2052068807598402, -1.2426723335231837, 1.1365403887929548, -0.89907515726274467, 0.55771700943333713, -0.15191169485526129, -0.27144782403040324, 0.87945499614444911, -1.1284193172175458, 1.2469887845044412, -1.2214620654291333, 1.0547889081487818, -0.76622928246543276, 0.3891277878781127, 0.03293949223796807, -0.4512004388319043, 0.80459363074725965, -1.0854273918156472, 1.2408342447375718, -1.252856101101276, 1.1201037714637345, -0.85791749357942637, 0.49659428633825847, -0.077886968093204861, -0.34982060356952993, 0.86654234490490301, -1.1226503542672677, 1.2490301441955032, -1.2310778577919299, 1.0708679772326357, -0.78691360631856, 0.41202718286634304, 0.010471172999682327, -0.43175952913295801};
inline constexpr double kBm25ThreeDocs[] = {0.98082925301172641, 0, 0};
inline constexpr double kBm25MixedDocs[] = {1.401184647159609, 0.55294544617145369, 0.4086988080397701};
inline constexpr double kBm25MixedDocsDupQuery[] = {0, 1.1058908923429074, 0.8173976160795402};
inline constexpr double kNearestRank[] = {1, 0, 10, 0, 5};
inline constexpr double kAdamWThreeSteps[] = {0.94744570831935049};
inline constexpr double kAdamWFirstStepNoDecay[] = {-0.00099999999000000028};

}  // namespace oracle

#endif  // GEMEL_TESTS_ORACLE_VALUES_H_
