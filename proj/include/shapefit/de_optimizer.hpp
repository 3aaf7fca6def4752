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

#ifndef SHAPEFIT_DE_OPTIMIZER_HPP
#define SHAPEFIT_DE_OPTIMIZER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shapefit/error.hpp"
#include "shapefit/format.hpp"
#include "shapefit/parallel.hpp"
#include "shapefit/prob_map.hpp"
#include "shapefit/random.hpp"
#include "shapefit/shape_model.hpp"

namespace shapefit {

enum class Strategy { rand_1_bin, rand_1_exp, best_1_bin };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::rand_1_bin: return "rand/1/bin";
    case Strategy::rand_1_exp: return "rand/1/exp";
    case Strategy::best_1_bin: return "best/1/bin";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view s) {
  for (auto v : {Strategy::rand_1_bin, Strategy::rand_1_exp, Strategy::best_1_bin})
    if (s == to_string(v) || s == "DE/" + std::string(to_string(v))) return v;
  throw ConfigError("unknown DE strategy '" + std::string(s) + "'");
}

enum class BoundHandling { clamp, reflect };

struct DEConfig {
  Strategy strategy = Strategy::rand_1_bin;
  double F = 0.5;
  double CR = 0.75;
  std::size_t pop_size = 0;  ///< 0 = 10 * dimension
  /// Total generations, counting the initial population as generation 1.
  std::size_t max_generations = 1500;
  double target_cost = 0.05;
  std::uint64_t seed = 0;
  BoundHandling bound_handling = BoundHandling::clamp;
  std::size_t threads = 1;  ///< fitness evaluation workers; results do not depend on it
  bool record_populations = false;

  std::size_t population_for(std::size_t dimension) const {
    return pop_size > 0 ? pop_size : 10 * dimension;
  }
};

inline void validate(const DEConfig& c, std::size_t dimension) {
  if (!(c.F > 0.0 && c.F <= 2.0)) throw ConfigError("F must be in (0, 2]");
  if (!(c.CR >= 0.0 && c.CR <= 1.0)) throw ConfigError("CR must be in [0, 1]");
  if (c.population_for(dimension) < 4) throw ConfigError("population size must be >= 4");
  if (c.max_generations < 1) throw ConfigError("max_generations must be >= 1");
  if (std::isnan(c.target_cost)) throw ConfigError("target cost is NaN");
}

inline nlohmann::ordered_json to_json(const DEConfig& c) {
  return {{"strategy", std::string(to_string(c.strategy))},
          {"F", c.F},
          {"CR", c.CR},
          {"pop_size", c.pop_size},
          {"max_generations", c.max_generations},
          {"target_cost", c.target_cost},
          {"seed", c.seed},
          {"bound_handling", c.bound_handling == BoundHandling::clamp ? "clamp" : "reflect"}};
}

struct GenerationRecord {
  std::size_t generation = 0;
  double best_cost = 0.0;
  double mean_cost = 0.0;
  std::vector<double> best_member;
};

struct DETrace {
  std::vector<GenerationRecord> generations;
  /// Every member of every generation; filled only with record_populations.
  std::vector<std::vector<std::vector<double>>> populations;
};

struct DEResult {
  std::vector<double> best;
  double best_cost = 0.0;
  std::size_t generations = 0;
  bool reached_target = false;
  DETrace trace;
};

namespace detail {

inline double confine(double v, const Interval& b, BoundHandling mode) {
  if (mode == BoundHandling::reflect) {
    if (v < b.lo) v = b.lo + (b.lo - v);
    else if (v > b.hi) v = b.hi - (v - b.hi);
  }
  return std::clamp(v, b.lo, b.hi);
}

/// Three population indices, pairwise distinct and distinct from `i`.
inline std::array<std::size_t, 3> draw_donors(Rng& rng, std::size_t np, std::size_t i) {
  std::size_t r1, r2, r3;
  do r1 = rng.index(np); while (r1 == i);
  do r2 = rng.index(np); while (r2 == i || r2 == r1);
  do r3 = rng.index(np); while (r3 == i || r3 == r1 || r3 == r2);
  return {r1, r2, r3};
}

inline double sanitize_cost(double c) {
  return std::isnan(c) ? std::numeric_limits<double>::infinity() : c;
}

}  // namespace detail

/// Bounded Differential Evolution minimizer. All trial vectors of a
/// generation are drawn before any is evaluated and selection runs after all
/// costs are in, so `config.threads` cannot change the result.
template <typename CostFn>
DEResult de_minimize(CostFn&& cost_fn, std::span<const Interval> bounds, const DEConfig& config) {
  const std::size_t D = bounds.size();
  if (D == 0) throw ConfigError("DE needs at least one dimension");
  for (const auto& b : bounds)
    if (!(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi))
      throw ConfigError("each bound needs finite lo < hi");
  validate(config, D);
  const std::size_t NP = config.population_for(D);

  Rng rng(config.seed);
  std::vector<std::vector<double>> pop(NP, std::vector<double>(D));
  for (auto& m : pop)
    for (std::size_t j = 0; j < D; ++j) m[j] = rng.uniform(bounds[j].lo, bounds[j].hi);
  std::vector<double> costs(NP);

  auto evaluate = [&](const std::vector<std::vector<double>>& members, std::vector<double>& out) {
    parallel_for(members.size(), config.threads, [&](std::size_t i) {
      out[i] = detail::sanitize_cost(cost_fn(std::span<const double>(members[i])));
    });
  };
  evaluate(pop, costs);

  DEResult result;
  auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());
  };
  auto record = [&](std::size_t generation) {
    const std::size_t b = best_index();
    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= static_cast<double>(NP);
    result.trace.generations.push_back({generation, costs[b], mean, pop[b]});
    if (config.record_populations) result.trace.populations.push_back(pop);
    return costs[b];
  };

  std::size_t generation = 1;
  double best = record(generation);
  std::vector<std::vector<double>> trials(NP, std::vector<double>(D));
  std::vector<double> trial_costs(NP);
  while (best > config.target_cost && generation < config.max_generations) {
    const std::size_t best_i = best_index();
    for (std::size_t i = 0; i < NP; ++i) {
      const auto [r1, r2, r3] = detail::draw_donors(rng, NP, i);
      const auto& base = config.strategy == Strategy::best_1_bin ? pop[best_i] : pop[r1];

      auto& trial = trials[i];
      trial = pop[i];
      auto mutate = [&](std::size_t j) {
        trial[j] = base[j] + config.F * (pop[r2][j] - pop[r3][j]);
      };
      if (config.strategy == Strategy::rand_1_exp) {
        std::size_t j = rng.index(D);
        std::size_t len = 0;
        do {
          mutate(j);
          j = (j + 1) % D;
          ++len;
        } while (len < D && rng.uniform() < config.CR);
      } else {
        const std::size_t j_rand = rng.index(D);
        for (std::size_t j = 0; j < D; ++j)
          if (j == j_rand || rng.uniform() < config.CR) mutate(j);
      }
      for (std::size_t j = 0; j < D; ++j)
        trial[j] = detail::confine(trial[j], bounds[j], config.bound_handling);
    }
    evaluate(trials, trial_costs);
    for (std::size_t i = 0; i < NP; ++i) {
      if (trial_costs[i] <= costs[i]) {
        std::swap(pop[i], trials[i]);
        costs[i] = trial_costs[i];
      }
    }
    ++generation;
    best = record(generation);
  }

  const std::size_t b = best_index();
  result.best = pop[b];
  result.best_cost = costs[b];
  result.generations = generation;
  result.reached_target = costs[b] <= config.target_cost;
  return result;
}

/// CSV: generation,best_cost,mean_cost,x0..x{D-1}.
inline std::string format_trace_csv(const DETrace& trace) {
  std::string out = "generation,best_cost,mean_cost";
  const std::size_t D = trace.generations.empty() ? 0 : trace.generations.front().best_member.size();
  for (std::size_t j = 0; j < D; ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (const auto& g : trace.generations) {
    out += std::to_string(g.generation);
    out += ',' + format_double(g.best_cost);
    out += ',' + format_double(g.mean_cost);
    for (double v : g.best_member) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

inline void write_trace_csv(const std::filesystem::path& path, const DETrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << format_trace_csv(trace);
}

struct FitResult {
  ShapeParams params;
  LandmarkShape shape;
  double likelihood = 0.0;
  DEResult optimization;
};

/// Maximizes the mean landmark probability over the model's bounded
/// parameter box.
inline FitResult fit_shape(const ProbabilityMap& map, const ShapeModel& model,
                           const DEConfig& config, const BoundsConfig& box = {}) {
  const auto bounds = parameter_bounds(model, map.width, map.height, box);
  auto cost = [&](std::span<const double> v) {
    return shape_cost(map, model, ShapeParams::from_vector(v));
  };
  FitResult fit;
  fit.optimization = de_minimize(cost, bounds, config);
  fit.params = ShapeParams::from_vector(fit.optimization.best);
  fit.shape = synthesize(model, fit.params);
  fit.likelihood = 1.0 - fit.optimization.best_cost;
  return fit;
}

}  // namespace shapefit

#endif  // SHAPEFIT_DE_OPTIMIZER_HPP
