// Copyright 2026 The funcseg Authors.
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

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "funcseg/config.hpp"
#include "funcseg/digest.hpp"
#include "funcseg/evaluation.hpp"
#include "funcseg/lifting.hpp"
#include "funcseg/view_selection.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace funcseg;

namespace {

struct Outcome {
  bool ok = true;
  std::vector<std::string> notes;
  void check(bool cond, std::string what) {
    if (!cond) {
      ok = false;
      notes.push_back(std::move(what));
    }
  }
};

struct Paths {
  std::string data;
  std::string cli;
  std::string readme;
};

// 1. Worked score combination.
void combination(Outcome& o, const Paths&) {
  const SelectionConfig c;
  const double a = combine_scores(0.40, 0.98, 0.75, c);
  const double b = combine_scores(0.30, 0.66, 0.54, c);
  o.check(std::abs(a - 0.6325) <= 1e-9, fmt::format("combine(0.40, 0.98, 0.75) = {:.12f}", a));
  o.check(fmt::format("{:.2f}", a) == "0.63", "0.6325 does not display as 0.63");
  o.check(std::abs(b - 0.45) <= 1e-9, fmt::format("combine(0.30, 0.66, 0.54) = {:.12f}", b));
}

// 2. KL uniformity scores.
void kl_scoring(Outcome& o, const Paths&) {
  constexpr double kPi = std::numbers::pi;
  for (int B : {2, 8, 16, 64}) {
    std::vector<PolarCoord> coords;
    for (int k = 0; k < B; ++k) {
      coords.push_back({k == B - 1 ? 1.0 : (k + 0.5) / B, -kPi + (k + 0.5) * 2 * kPi / B});
    }
    const auto s = distribution_scores(coords, B, B);
    o.check(std::abs(s.distance - 1) <= 1e-6 && std::abs(s.angle - 1) <= 1e-6,
            fmt::format("uniform B={} gives ({}, {})", B, s.distance, s.angle));
  }
  const std::vector<PolarCoord> one_hot(1000, PolarCoord{0.5, 0.3});
  const double s_alpha = distribution_scores(one_hot, 16, 16).angle;
  o.check(s_alpha <= 1e-3, fmt::format("one-hot S_alpha = {}", s_alpha));

  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = 8 + static_cast<int>(rng() % 313), h = 8 + static_cast<int>(rng() % 233);
    const int n = 1 + static_cast<int>(rng() % 2000);
    std::vector<PixelCoord> px;
    // Compact blobs as well as scattered pixels.
    const bool blob = trial % 2 == 0;
    const int cx = static_cast<int>(rng() % w), cy = static_cast<int>(rng() % h);
    for (int i = 0; i < n; ++i) {
      int x = static_cast<int>(rng() % w), y = static_cast<int>(rng() % h);
      if (blob) {
        x = std::clamp(cx + static_cast<int>(rng() % 21) - 10, 0, w - 1);
        y = std::clamp(cy + static_cast<int>(rng() % 21) - 10, 0, h - 1);
      }
      px.push_back({x, y});
    }
    const auto got = distribution_scores(polar_coordinates(px, {w, h}), 16, 16);
    const auto want = oracle::polar_scores(px, {w, h}, 16, 16, kHistogramSmoothing);
    worst = std::max({worst, std::abs(got.distance - want.distance),
                      std::abs(got.angle - want.angle)});
  }
  o.check(worst <= 1e-9, fmt::format("max deviation from oracle over 1000 masks = {}", worst));
}

std::vector<PixelToPointMap> maps_for(const oracle::FuzzScene& s) {
  const SpatialHashGrid grid(s.cloud, s.radius);
  std::vector<PixelToPointMap> maps;
  for (const auto& v : s.views) maps.push_back(build_pixel_map(v, grid));
  return maps;
}

// 3. Lifting against brute force.
void lifting_oracle(Outcome& o, const Paths&) {
  std::mt19937_64 rng(77);
  int mismatches = 0, nonempty = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = oracle::random_scene(rng, 1000, 5, 64);
    const Heatmap3D h = accumulate(s.masks, maps_for(s));
    const auto want = oracle::lift(s.cloud, s.views, s.masks, s.radius);
    bool same = h.raw == want.counts && h.normalized == want.normalized;
    for (double tau : {0.0, 0.25, 0.5, 0.7, 0.9}) {
      same = same && threshold(h, tau).point_indices == oracle::threshold(want, tau);
    }
    mismatches += !same;
    nonempty += !h.raw.empty();
  }
  o.check(mismatches == 0, fmt::format("{} of 100 scenes differ from brute force", mismatches));
  o.check(nonempty >= 50, fmt::format("only {} scenes produced any votes", nonempty));
}

// 4. Multi-view agreement invariants.
void invariants(Outcome& o, const Paths&) {
  std::mt19937_64 rng(4242);
  int order = 0, jobs = 0, mono = 0, conserve = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto s = oracle::random_scene(rng, 1000, 5, 64);
    auto maps = maps_for(s);
    const Heatmap3D base = accumulate(s.masks, maps, 1);
    const std::string base_bytes = to_json(base).dump() + to_json(threshold(base, 0.7)).dump();

    std::uint64_t mapped = 0, total = 0;
    for (std::size_t k = 0; k < s.masks.size(); ++k) {
      for (const auto& p : s.masks[k].mask.pixels()) mapped += maps[k].at(p.x, p.y).has_value();
    }
    for (const auto& [i, c] : base.raw) total += c;
    conserve += total != mapped;

    std::vector<FunctionalMask2D> masks = s.masks;
    std::shuffle(masks.begin(), masks.end(), rng);
    std::shuffle(maps.begin(), maps.end(), rng);
    const Heatmap3D shuffled = accumulate(masks, maps, 1);
    order += to_json(shuffled).dump() + to_json(threshold(shuffled, 0.7)).dump() != base_bytes;
    const Heatmap3D eight = accumulate(masks, maps, 8);
    jobs += to_json(eight).dump() + to_json(threshold(eight, 0.7)).dump() != base_bytes;

    std::size_t prev = std::numeric_limits<std::size_t>::max();
    std::vector<std::uint32_t> prev_set;
    for (int i = 0; i < 20; ++i) {
      const auto m = threshold(base, i / 20.0).point_indices;
      if (m.size() > prev ||
          (i > 0 && !std::includes(prev_set.begin(), prev_set.end(), m.begin(), m.end()))) {
        ++mono;
        break;
      }
      prev = m.size();
      prev_set = m;
    }
  }
  o.check(order == 0, fmt::format("{} cases depend on view order", order));
  o.check(jobs == 0, fmt::format("{} cases differ between 1 and 8 workers", jobs));
  o.check(mono == 0, fmt::format("{} cases not monotone in tau", mono));
  o.check(conserve == 0, fmt::format("{} cases violate count conservation", conserve));
}

// 5. Metrics.
void metrics(Outcome& o, const Paths&) {
  const auto m = aggregate_ious(std::vector<double>{1.0, 0.6, 0.3, 0.0});
  o.check(m.AP25 == 75.0 && m.AP50 == 50.0 && m.mAP == 30.0 && m.mIoU == 47.5,
          fmt::format("hand case gives AP25={} AP50={} mAP={} mIoU={}", m.AP25, m.AP50, m.mAP,
                      m.mIoU));
  const auto p = aggregate_ious(std::vector<double>(7, 1.0));
  const auto z = aggregate_ious(std::vector<double>(7, 0.0));
  for (double v : {p.mAP, p.AP50, p.AP25, p.mAR, p.AR50, p.AR25, p.mIoU}) {
    o.check(v == 100.0, "all-perfect case is not 100");
  }
  for (double v : {z.mAP, z.AP50, z.AP25, z.mAR, z.AR50, z.AR25, z.mIoU}) {
    o.check(v == 0.0, "all-zero case is not 0");
  }
}

int run_cli(const Paths& paths, const std::string& args) {
  const std::string cmd = paths.cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string digest_of(const fs::path& p) { return sha256_hex(read_file_bytes(p.string())); }

// 6. End-to-end fixture reproducibility and ablation orderings.
void end_to_end(Outcome& o, const Paths& paths) {
  funcseg::testing::TempDir dir;
  const fs::path data = dir.path() / "desk";
  fs::copy(paths.data, data, fs::copy_options::recursive);
  fs::remove_all(data / "cache");
  const std::string config = (data / "config.json").string();

  const auto tasks_bytes = read_file_bytes((data / "tasks.json").string());
  const auto tasks = nlohmann::json::parse(tasks_bytes.begin(), tasks_bytes.end());
  std::set<std::string> scenes;
  for (const auto& t : tasks) scenes.insert(t.at("scene_id").get<std::string>());
  std::size_t views = 0;
  for (const auto& s : scenes) {
    const auto mb = read_file_bytes((data / "scenes" / s / "manifest.json").string());
    views += nlohmann::json::parse(mb.begin(), mb.end()).at("views").size();
  }
  o.check(scenes.size() == 2 && tasks.size() == 4,
          fmt::format("dataset has {} scenes, {} tasks", scenes.size(), tasks.size()));
  o.check(views >= 20 && views <= 40, fmt::format("dataset has {} views", views));

  const auto a = (dir.path() / "run1").string(), b = (dir.path() / "run2").string();
  o.check(run_cli(paths, "run --config " + config + " --out " + a) == 0, "first run failed");
  o.check(run_cli(paths, "run --config " + config + " --cache-dir " + (dir.path() / "cold").string() +
                             " --out " + b) == 0,
          "second run failed");
  for (const char* f : {"results.json", "metrics.csv"}) {
    if (fs::exists(fs::path(a) / f) && fs::exists(fs::path(b) / f)) {
      o.check(digest_of(fs::path(a) / f) == digest_of(fs::path(b) / f),
              std::string(f) + " differs between runs");
    } else {
      o.check(false, std::string(f) + " missing");
    }
  }

  const auto sw = (dir.path() / "sweep").string();
  if (run_cli(paths, "sweep --config " + config + " --grid " + (data / "sweep.json").string() +
                         " --out " + sw) != 0) {
    o.check(false, "sweep failed");
    return;
  }
  const auto sb = read_file_bytes(sw + "/sweep.json");
  const auto rows = nlohmann::json::parse(sb.begin(), sb.end());
  std::map<std::tuple<std::vector<double>, int, double>, double> miou;
  std::set<int> budgets;
  for (const auto& r : rows) {
    miou[{r.at("lambda").get<std::vector<double>>(), r.at("views").get<int>(),
          r.at("tau").get<double>()}] = r.at("metrics").at("mIoU").get<double>();
    budgets.insert(r.at("views").get<int>());
  }
  const std::vector<double> full{0.5, 0.25, 0.25};
  const std::vector<std::vector<double>> ablations{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0.5, 0.5}};
  o.check(budgets.contains(2) && budgets.contains(50), "sweep grid lacks V=2 or V=50");
  for (int v : budgets) {
    const auto f = miou.find({full, v, 0.7});
    if (f == miou.end()) {
      o.check(false, fmt::format("no full-score cell at V={} tau=0.7", v));
      continue;
    }
    for (const auto& l : ablations) {
      const auto it = miou.find({l, v, 0.7});
      o.check(it != miou.end(), fmt::format("missing ablation cell at V={}", v));
      if (it != miou.end()) {
        o.check(f->second >= it->second,
                fmt::format("V={} tau=0.7: full {:.2f} < lambda ({},{},{}) {:.2f}", v, f->second,
                            l[0], l[1], l[2], it->second));
      }
    }
  }
  const auto v50 = miou.find({full, 50, 0.7}), v2 = miou.find({full, 2, 0.7});
  if (v50 != miou.end() && v2 != miou.end()) {
    o.check(v50->second >= v2->second,
            fmt::format("mIoU at V=50 ({:.2f}) < V=2 ({:.2f})", v50->second, v2->second));
    o.notes.push_back(fmt::format("mIoU tau=0.7 full lambda: V=2 {:.1f}, V=50 {:.1f}", v2->second,
                                  v50->second));
  }
}

// 7. Published configuration exposed; reproduction limits stated.
void configuration(Outcome& o, const Paths& paths) {
  const PipelineConfig d;
  o.check(d.selection.lambda_m == 0.5 && d.selection.lambda_d == 0.25 &&
              d.selection.lambda_alpha == 0.25 && d.selection.max_views == 50 && d.tau == 0.7,
          "built-in defaults differ from (0.5, 0.25, 0.25), V=50, tau=0.7");
  const auto bundled = PipelineConfig::load(paths.data + "/config.json");
  o.check(bundled.selection.lambda_m == 0.5 && bundled.selection.lambda_d == 0.25 &&
              bundled.selection.lambda_alpha == 0.25 && bundled.selection.max_views == 50 &&
              bundled.tau == 0.7,
          "bundled config differs from the published settings");
  if (!fs::exists(paths.readme)) {
    o.check(false, "README missing");
    return;
  }
  const auto rb = read_file_bytes(paths.readme);
  const std::string readme(rb.begin(), rb.end());
  for (const char* needle : {"SceneFun3D", "15.2", "not acceptance targets", "lambda_m = 0.5",
                             "V = 50", "tau = 0.7"}) {
    o.check(readme.find(needle) != std::string::npos,
            std::string("README lacks '") + needle + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"funcseg acceptance checks"};
  Paths paths;
  app.add_option("--data", paths.data, "Bundled desk dataset")->required();
  app.add_option("--cli", paths.cli, "funcseg executable")->required();
  app.add_option("--readme", paths.readme, "README.md")->required();
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&, const Paths&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "score combination", 1.0, combination},
      {2, "KL scoring properties", 10.0, kl_scoring},
      {3, "lifting oracle equivalence", 60.0, lifting_oracle},
      {4, "multi-view agreement invariants", 30.0, invariants},
      {5, "metrics correctness", 1.0, metrics},
      {6, "end-to-end fixture reproducibility", 120.0, end_to_end},
      {7, "published configuration and reproduction scope", 1.0, configuration},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o, paths);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.check(s <= c.budget_s, fmt::format("took {:.2f}s, budget {:.0f}s", s, c.budget_s));
    std::cout << fmt::format("{} criterion {}: {} ({:.2f}s)", o.ok ? "PASS" : "FAIL", c.id, c.name, s)
              << "\n";
    for (const auto& n : o.notes) std::cout << "    " << n << "\n";
    failed += !o.ok;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed;
}
