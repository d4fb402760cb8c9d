// Copyright 2026 The Bitext Authors.
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

#ifndef BITEXT_TESTS_ORACLES_H_
#define BITEXT_TESTS_ORACLES_H_

// Independent reference computations for tests. None of these share code
// paths with the library routines they check.

#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bitext/evaluation.h"
#include "bitext/index.h"
#include "bitext/matrix.h"
#include "bitext/random.h"

namespace bitext::oracle {

Matrix RandomMatrix(size_t rows, size_t cols, Rng &rng, double scale = 1.0);
Matrix RandomUnitRows(size_t rows, size_t cols, Rng &rng);

// Direct evaluation of the margin softmax loss with plain exp/log (no
// max-shift). Only safe for moderate logits.
double NaiveAmsLoss(const std::vector<std::vector<double>> &sim, double margin,
                    double scale, bool transpose);

// Central differences of f over every coordinate of `values`.
std::vector<double> CentralDifference(std::vector<double> values,
                                      const std::function<double(const std::vector<double> &)> &f,
                                      double h);

// max |a - b| / max(|a|, |b|, floor).
double MaxRelativeError(const std::vector<double> &a, const std::vector<double> &b,
                        double floor);

// Top-k by full sort: score descending, id ascending.
std::vector<std::pair<std::string, double>> BruteForceTopK(const EmbeddingPool &pool,
                                                           std::span<const float> query,
                                                           size_t k);

// Tries every distinct candidate score as a threshold by filtering the
// candidate list from scratch.
Prf ExhaustiveBestF1(const std::vector<Candidate> &candidates,
                     const std::set<std::pair<std::string, std::string>> &gold);

// Pearson via raw moment sums: (n Sxy - Sx Sy) / sqrt((n Sxx - Sx^2)(n Syy - Sy^2)).
double MomentPearson(const std::vector<double> &x, const std::vector<double> &y);

}  // namespace bitext::oracle

#endif  // BITEXT_TESTS_ORACLES_H_
