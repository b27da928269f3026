// Copyright 2026 The DSCL Authors. All Rights Reserved.
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

#include "dscl/ablation.h"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "dscl/errors.h"
#include "dscl/eval.h"
#include "dscl/synth.h"
#include "dscl/train.h"

namespace dscl {

const AblationCell& AblationTable::cell(AblationMode mode, std::uint64_t seed) const {
  for (const AblationCell& c : cells)
    if (c.mode == mode && c.seed == seed) return c;
  throw ContractError("ablation: no cell for that mode and seed");
}

const AblationSummary& AblationTable::of(AblationMode mode) const {
  for (const AblationSummary& s : summary)
    if (s.mode == mode) return s;
  throw ContractError("ablation: no summary for that mode");
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AblationTable run_ablation(const RunConfig& base, const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  if (seeds.size() < 3) throw ConfigError("run_ablation: needs at least three seeds");
  base.synth.validate();
  base.train.validate_ranges();

  std::vector<std::vector<Scene>> data(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) data[s] = generate_scenes(base.synth, seeds[s], base.scenes);

  AblationTable table;
  for (std::uint64_t seed : seeds)
    for (AblationMode m : kAllModes) table.cells.push_back(AblationCell{m, seed, {}, {}, {}});

  const std::size_t per_seed = std::size(kAllModes);
  auto run_cell = [&](std::size_t i) {
    AblationCell& c = table.cells[i];
    TrainConfig cfg = base.train.for_mode(c.mode);
    cfg.seed = c.seed;
    const std::vector<Scene>& scenes = data[i / per_seed];
    try {
      const TrainResult r = train(cfg, scenes, base.synth.classes);
      if (!r.metrics.empty() && r.metrics.back().miou_base) {
        c.miou_base = r.metrics.back().miou_base;
        c.miou_refined = r.metrics.back().miou_refined;
      } else {
        const EvalResult e = evaluate(r.state, scenes, base.synth.classes, cfg);
        c.miou_base = e.base.miou;
        c.miou_refined = e.refined.miou;
      }
    } catch (const Error& e) {
      c.error = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, table.cells.size()));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < table.cells.size(); i = next++) run_cell(i);
      });
    }
  }

  for (AblationMode m : kAllModes) {
    AblationSummary s;
    s.mode = m;
    std::vector<double> b, r;
    for (const AblationCell& c : table.cells) {
      if (c.mode != m) continue;
      ++s.runs;
      if (!c.error.empty() || !c.miou_base) {
        ++s.aborted;
        continue;
      }
      b.push_back(*c.miou_base);
      r.push_back(*c.miou_refined);
    }
    if (!b.empty()) {
      s.median_base = median(b);
      s.median_refined = median(r);
    }
    table.summary.push_back(s);
  }
  return table;
}

std::string ablation_csv(const AblationTable& table) {
  std::ostringstream out;
  out << "mode,seed,miou_base,miou_refined\n";
  for (const AblationCell& c : table.cells) {
    out << mode_name(c.mode) << ',' << c.seed << ',';
    if (c.miou_base) out << format_double(*c.miou_base);
    out << ',';
    if (c.miou_refined) out << format_double(*c.miou_refined);
    out << '\n';
  }
  return out.str();
}

}  // namespace dscl
