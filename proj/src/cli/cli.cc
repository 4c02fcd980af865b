// Copyright 2026 The zipar Authors.
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

#include "cli/cli.h"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "zipar/analysis.h"
#include "zipar/engine.h"
#include "zipar/errors.h"
#include "zipar/local_oracle.h"
#include "zipar/scheduler.h"
#include "zipar/toy_transformer.h"

namespace zipar::cli {
namespace {

// Expands `--config FILE` into flags. The file holds a flat JSON object
// whose keys are long flag names; keys already given on the command line
// are skipped so flags override the file. Arrays are joined with commas,
// true booleans become bare flags and false ones are dropped.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 == args.size()) throw ConfigError("--config needs a file path");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (!path) return out;
  std::ifstream f(*path);
  if (!f) throw ConfigError("cannot open config file " + *path);
  nlohmann::ordered_json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + *path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  auto given = [&](const std::string& flag) {
    return std::any_of(out.begin(), out.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  auto scalar = [](const std::string& key, const nlohmann::ordered_json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    throw ConfigError("config key '" + key + "' must be a string, number or array of them");
  };
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_array()) {
      for (const auto& v : value) {
        if (!text.empty()) text += ',';
        text += scalar(key, v);
      }
    } else {
      text = scalar(key, value);
    }
    out.push_back(flag);
    out.push_back(text);
  }
  return out;
}

struct ShapeArgs {
  int rows = 0;
  int cols = 0;
  bool eor = false;
  std::string prefix;
};

struct BackendArgs {
  std::string kind = "toy";
  int vocab = 256;
  int layers = 2;
  int width = 64;
  int heads = 4;
  std::uint64_t model_seed = 0;
  int radius = 1;
  double sharpness = 3.0;
  std::string sidecar;
  std::string write_sidecar;
};

void add_shape(CLI::App* app, ShapeArgs& a) {
  app->add_option("--rows", a.rows, "Grid rows H")->required()->check(CLI::PositiveNumber);
  app->add_option("--cols", a.cols, "Grid columns W")->required()->check(CLI::PositiveNumber);
  app->add_flag("--eor", a.eor, "Terminate every row with an end-of-row token (id vocab-1)");
  app->add_option("--prefix", a.prefix, "Conditioning prefix token ids, e.g. 7 or 3,9,12");
}

void add_backend(CLI::App* app, BackendArgs& a) {
  app->add_option("--backend", a.kind, "Model backend")
      ->check(CLI::IsMember({"toy", "oracle"}))
      ->capture_default_str();
  app->add_option("--vocab", a.vocab, "Vocabulary size")->capture_default_str();
  app->add_option("--layers", a.layers, "Toy transformer layers")->capture_default_str();
  app->add_option("--width", a.width, "Toy transformer width")->capture_default_str();
  app->add_option("--heads", a.heads, "Toy transformer attention heads")->capture_default_str();
  app->add_option("--model-seed", a.model_seed, "Seed of the backend parameters")
      ->capture_default_str();
  app->add_option("--radius", a.radius, "Locality radius of the oracle backend")
      ->capture_default_str();
  app->add_option("--sharpness", a.sharpness, "Logit scale of the oracle backend")
      ->capture_default_str();
  app->add_option("--sidecar", a.sidecar, "Read toy transformer parameters from this JSON file");
  app->add_option("--write-sidecar", a.write_sidecar,
                  "Write the toy transformer parameters to this JSON file");
}

void add_sampler(CLI::App* app, SamplerConfig& s) {
  app->add_option("--temperature", s.temperature, "Softmax temperature")->capture_default_str();
  app->add_option("--top-k", s.top_k, "Keep the k most likely tokens (0 = off)")
      ->capture_default_str();
  app->add_option("--top-p", s.top_p, "Nucleus mass (1 = off)")->capture_default_str();
  app->add_option("--cfg-scale", s.cfg_scale, "Classifier-free guidance scale (0 = off)")
      ->capture_default_str();
}

// Documents --config in the help; expand_config consumes it before parsing.
void add_config(CLI::App* app) {
  app->add_option("--config", "JSON file whose keys mirror the long flags");
}

std::vector<TokenId> parse_prefix(const std::string& text, int vocab) {
  std::vector<TokenId> prefix;
  if (text.empty()) return prefix;
  for (long long v : parse_int_list(text)) {
    if (v < 0 || v >= vocab) {
      throw ConfigError("prefix token " + std::to_string(v) + " is outside the vocabulary [0, " +
                        std::to_string(vocab) + ")");
    }
    prefix.push_back(static_cast<TokenId>(v));
  }
  return prefix;
}

std::unique_ptr<ModelBackend> make_backend(const BackendArgs& a) {
  if (a.kind == "oracle") {
    if (!a.sidecar.empty() || !a.write_sidecar.empty()) {
      throw ConfigError("--sidecar and --write-sidecar apply to --backend toy only");
    }
    LocalOracleConfig c;
    c.radius = a.radius;
    c.vocab_size = a.vocab;
    c.seed = a.model_seed;
    c.sharpness = a.sharpness;
    return std::make_unique<LocalOracle>(c);
  }
  ToyTransformerConfig c;
  if (!a.sidecar.empty()) {
    c = read_sidecar(a.sidecar);
  } else {
    c.layers = a.layers;
    c.width = a.width;
    c.heads = a.heads;
    c.vocab_size = a.vocab;
    c.seed = a.model_seed;
  }
  c.validate();
  if (!a.write_sidecar.empty()) write_sidecar(a.write_sidecar, c);
  return std::make_unique<ToyTransformer>(c);
}

GridShape make_grid_shape(const ShapeArgs& s, int vocab, std::size_t prefix_len) {
  return make_shape(s.rows, s.cols, vocab, s.eor, static_cast<int>(prefix_len));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw Error("failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::optional<std::uint64_t> env_u64(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  std::uint64_t out = 0;
  const char* end = v + std::char_traits<char>::length(v);
  auto [p, ec] = std::from_chars(v, end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError(std::string(name) + " must be a nonnegative integer, got '" + v + "'");
  }
  return out;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

std::vector<std::pair<int, int>> parse_grids(const std::string& text) {
  std::vector<std::pair<int, int>> grids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    int h = 0, w = 0;
    bool ok = x != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(item.data(), item.data() + x, h);
      auto r2 = std::from_chars(item.data() + x + 1, item.data() + item.size(), w);
      ok = r1.ec == std::errc() && r1.ptr == item.data() + x && r2.ec == std::errc() &&
           r2.ptr == item.data() + item.size() && h > 0 && w > 0;
    }
    if (!ok) throw ConfigError("grid '" + item + "' is not of the form HxW");
    grids.emplace_back(h, w);
  }
  if (grids.empty()) throw ConfigError("--grids needs at least one HxW entry");
  return grids;
}

// Deepest subcommand selected so far, for usage text on errors.
const CLI::App* selected(const CLI::App& app) {
  const CLI::App* cur = &app;
  for (;;) {
    auto subs = cur->get_subcommands();
    if (subs.empty()) return cur;
    cur = subs.front();
  }
}

}  // namespace

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  auto parse_one = [&](std::string_view s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("'" + std::string(s) + "' in '" + text + "' is not an integer");
    }
    return v;
  };
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_one(item));
      continue;
    }
    const long long lo = parse_one(std::string_view(item).substr(0, dots));
    const long long hi = parse_one(std::string_view(item).substr(dots + 2));
    if (hi < lo) throw ConfigError("range '" + item + "' is empty");
    if (hi - lo > 1'000'000) throw ConfigError("range '" + item + "' is too long");
    for (long long v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::uint64_t default_seed = 0;
  unsigned thread_cap = 0;
  try {
    default_seed = env_u64("ZIPAR_SEED").value_or(0);
    if (auto t = env_u64("ZIPAR_THREADS")) thread_cap = static_cast<unsigned>(std::max<std::uint64_t>(*t, 1));
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Parallel raster-order decoding of image-token grids", "zipar"};
  app.name("zipar");
  app.require_subcommand(1);

  std::uint64_t seed = default_seed;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed (default: ZIPAR_SEED or 0)")->capture_default_str();
  };

  // plan
  CLI::App* plan = app.add_subcommand("plan", "Fixed-window schedule and step table");
  ShapeArgs plan_shape;
  int plan_window = 0;
  std::string plan_out;
  plan->add_option("--rows", plan_shape.rows, "Grid rows H")->required()->check(CLI::PositiveNumber);
  plan->add_option("--cols", plan_shape.cols, "Grid columns W")->required()->check(CLI::PositiveNumber);
  plan->add_flag("--eor", plan_shape.eor, "Rows end with an end-of-row token");
  plan->add_option("--window", plan_window, "Local window s")->required();
  plan->add_option("--out", plan_out, "Write the plan JSON here instead of stdout");
  add_seed(plan);
  add_config(plan);

  // generate
  CLI::App* gen = app.add_subcommand("generate", "Generate one token grid");
  ShapeArgs gen_shape;
  BackendArgs gen_backend;
  SamplerConfig gen_sampler;
  std::string gen_mode;
  std::optional<int> gen_window, gen_min_window;
  std::string gen_out, gen_log;
  gen->add_option("--mode", gen_mode, "Decoding mode")
      ->required()
      ->check(CLI::IsMember({"ntp", "fixed", "adaptive"}));
  add_shape(gen, gen_shape);
  gen->add_option("--window", gen_window, "Local window s (fixed mode)");
  gen->add_option("--min-window", gen_min_window, "Minimum window s_min (adaptive mode)");
  add_backend(gen, gen_backend);
  add_sampler(gen, gen_sampler);
  gen->add_option("--out", gen_out, "Write the token grid JSON here instead of stdout");
  gen->add_option("--log", gen_log, "Write the step log JSON here");
  add_seed(gen);
  add_config(gen);

  // compare
  CLI::App* cmp = app.add_subcommand("compare", "Equivalence report against NTP");
  ShapeArgs cmp_shape;
  BackendArgs cmp_backend;
  SamplerConfig cmp_sampler;
  std::string cmp_modes = "fixed,adaptive";
  std::string cmp_windows, cmp_seeds, cmp_out;
  unsigned cmp_threads = 0;
  add_shape(cmp, cmp_shape);
  cmp->add_option("--modes", cmp_modes, "Parallel modes, comma separated")->capture_default_str();
  cmp->add_option("--windows", cmp_windows, "Windows, e.g. 2,4,8 or 1..16 (default 1..W)");
  cmp->add_option("--seeds", cmp_seeds, "Seeds, e.g. 0..9 (default: --seed)");
  cmp->add_option("--threads", cmp_threads, "Worker threads (0 = all cores, capped by ZIPAR_THREADS)");
  add_backend(cmp, cmp_backend);
  add_sampler(cmp, cmp_sampler);
  cmp->add_option("--out", cmp_out, "Write the report JSON here instead of stdout");
  add_seed(cmp);
  add_config(cmp);

  // analyze
  CLI::App* ana = app.add_subcommand("analyze", "Attention locality and step tables");
  ana->require_subcommand(1);
  CLI::App* att = ana->add_subcommand("attention", "Minimum row-start window retaining attention mass");
  ShapeArgs att_shape;
  BackendArgs att_backend;
  SamplerConfig att_sampler;
  double att_retain = 0.95;
  std::string att_out;
  add_shape(att, att_shape);
  add_backend(att, att_backend);
  add_sampler(att, att_sampler);
  att->add_option("--retain", att_retain, "Attention fraction to retain")->capture_default_str();
  att->add_option("--out", att_out, "Write the CSV here instead of stdout");
  add_seed(att);
  add_config(att);

  CLI::App* stp = ana->add_subcommand("steps", "Fixed-window step counts against NTP");
  std::string stp_grids, stp_windows, stp_out;
  bool stp_eor = false;
  stp->add_option("--grids", stp_grids, "Grids, e.g. 24x24,32x32")->required();
  stp->add_option("--windows", stp_windows, "Windows, e.g. 1..24")->required();
  stp->add_flag("--eor", stp_eor, "Rows end with an end-of-row token");
  stp->add_option("--out", stp_out, "Write the CSV here instead of stdout");
  add_seed(stp);
  add_config(stp);

  // render
  CLI::App* ren = app.add_subcommand("render", "Render a token grid as a binary PGM");
  std::string ren_in, ren_out;
  std::optional<std::uint64_t> ren_seed;
  ren->add_option("grid", ren_in, "Token grid JSON")->required();
  ren->add_option("out", ren_out, "Output PGM path")->required();
  ren->add_option("--seed", ren_seed, "Seed recorded in the PGM comment (default: the grid's)");
  add_config(ren);

  std::vector<std::string> reversed;
  try {
    const std::vector<std::string> expanded = expand_config(args);
    reversed.assign(expanded.rbegin(), expanded.rend());
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << selected(app)->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << selected(app)->help();
    return kExitUsage;
  }

  try {
    if (plan->parsed()) {
      const GridShape shape = make_shape(plan_shape.rows, plan_shape.cols, 2, plan_shape.eor);
      const SchedulePlan p = plan_fixed(shape, plan_window);
      auto doc = nlohmann::ordered_json::parse(to_json(p));
      doc["eor"] = shape.eor;
      doc["ntp_steps"] = ntp_step_count(shape);
      doc["seed"] = seed;
      std::vector<int> windows;
      for (int s = 1; s <= shape.cols; ++s) windows.push_back(s);
      const std::string table = step_table_text(step_table({{shape.rows, shape.cols}}, windows, shape.eor));
      if (plan_out.empty()) {
        out << doc.dump() << "\n\n" << table;
      } else {
        write_file(plan_out, doc.dump() + "\n");
        out << table;
      }
      const double red = 1.0 - static_cast<double>(p.total_steps) / static_cast<double>(ntp_step_count(shape));
      err << "plan window=" << p.window << " steps=" << p.total_steps << " ntp=" << ntp_step_count(shape)
          << " reduction=" << percent(red) << " max_lanes=" << p.max_batch_width << " seed=" << seed << "\n";
      return kExitOk;
    }

    if (gen->parsed()) {
      const DecodeMode mode = parse_mode(gen_mode);
      int window = 0;
      switch (mode) {
        case DecodeMode::kNtp:
          if (gen_window || gen_min_window) {
            throw ConfigError("--mode ntp decodes one token per step; drop --window/--min-window");
          }
          break;
        case DecodeMode::kFixed:
          if (gen_min_window) throw ConfigError("--min-window applies to --mode adaptive; use --window");
          if (!gen_window) throw ConfigError("--mode fixed requires --window");
          window = *gen_window;
          break;
        case DecodeMode::kAdaptive:
          if (gen_window) throw ConfigError("--mode adaptive takes --min-window, not --window");
          if (!gen_min_window) throw ConfigError("--mode adaptive requires --min-window");
          window = *gen_min_window;
          break;
      }
      gen_sampler.validate();
      const auto backend = make_backend(gen_backend);
      GenerationOptions options;
      options.sampler = gen_sampler;
      options.prefix = parse_prefix(gen_shape.prefix, backend->vocab_size());
      const GridShape shape = make_grid_shape(gen_shape, backend->vocab_size(), options.prefix.size());
      if (mode != DecodeMode::kNtp) {
        (mode == DecodeMode::kFixed ? WindowPolicy::fixed(window) : WindowPolicy::adaptive(window))
            .validate(shape);
      }
      const GenerationResult result = generate(shape, mode, window, *backend, options, seed);
      const std::string grid_json = to_json(result.grid);
      if (gen_out.empty()) {
        out << grid_json;
      } else {
        write_file(gen_out, grid_json);
      }
      if (!gen_log.empty()) write_file(gen_log, step_log_json(result));
      err << summary_line(result) << "\n";
      return kExitOk;
    }

    if (cmp->parsed()) {
      std::vector<DecodeMode> modes;
      {
        std::stringstream ss(cmp_modes);
        std::string m;
        while (std::getline(ss, m, ',')) {
          const DecodeMode mode = parse_mode(m);
          if (mode == DecodeMode::kNtp) throw ConfigError("--modes lists parallel modes; ntp is the reference");
          modes.push_back(mode);
        }
        if (modes.empty()) throw ConfigError("--modes is empty");
      }
      cmp_sampler.validate();
      const auto backend = make_backend(cmp_backend);
      GenerationOptions options;
      options.sampler = cmp_sampler;
      options.prefix = parse_prefix(cmp_shape.prefix, backend->vocab_size());
      const GridShape shape = make_grid_shape(cmp_shape, backend->vocab_size(), options.prefix.size());
      std::vector<int> windows;
      if (cmp_windows.empty()) {
        for (int s = 1; s <= shape.cols; ++s) windows.push_back(s);
      } else {
        for (long long s : parse_int_list(cmp_windows)) {
          WindowPolicy::fixed(static_cast<int>(s)).validate(shape);
          windows.push_back(static_cast<int>(s));
        }
      }
      std::vector<std::uint64_t> seeds;
      if (cmp_seeds.empty()) {
        seeds.push_back(seed);
      } else {
        for (long long s : parse_int_list(cmp_seeds)) {
          if (s < 0) throw ConfigError("seeds must be nonnegative");
          seeds.push_back(static_cast<std::uint64_t>(s));
        }
      }
      unsigned threads = cmp_threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cmp_threads;
      if (thread_cap > 0) threads = std::min(threads, thread_cap);
      const EquivalenceReport report =
          equivalence_report(shape, *backend, modes, windows, seeds, options, threads);
      if (cmp_out.empty()) {
        out << report.to_json() << "\n" << report.to_table();
      } else {
        write_file(cmp_out, report.to_json());
        out << report.to_table();
      }
      double tv = 0.0, min_agree = 1.0;
      for (const EquivalenceRow& r : report.rows) {
        tv += r.mean_tv;
        min_agree = std::min(min_agree, r.agreement);
      }
      char buf[160];
      std::snprintf(buf, sizeof buf, "compare runs=%zu mean_tv=%.6f min_agreement=%.4f seeds=%zu",
                    report.rows.size(), report.rows.empty() ? 0.0 : tv / report.rows.size(),
                    min_agree, seeds.size());
      err << buf << "\n";
      return kExitOk;
    }

    if (att->parsed()) {
      if (!(att_retain > 0.0 && att_retain < 1.0)) throw ConfigError("--retain must lie in (0, 1)");
      att_sampler.validate();
      const auto backend = make_backend(att_backend);
      GenerationOptions options;
      options.sampler = att_sampler;
      options.prefix = parse_prefix(att_shape.prefix, backend->vocab_size());
      const GridShape shape = make_grid_shape(att_shape, backend->vocab_size(), options.prefix.size());
      const auto records = collect_attention(*backend, shape, seed, options);
      std::string csv = "# seed=" + std::to_string(seed) + "\nrow,min_window\n";
      double sum = 0.0;
      for (const AttentionRecord& rec : records) {
        const int s = min_window_for_mass(rec, shape, att_retain);
        sum += s;
        csv += std::to_string(rec.query.row) + "," + std::to_string(s) + "\n";
      }
      if (att_out.empty()) {
        out << csv;
      } else {
        write_file(att_out, csv);
      }
      char buf[128];
      std::snprintf(buf, sizeof buf, "attention records=%zu retain=%.3f mean_min_window=%.2f seed=%llu",
                    records.size(), att_retain, records.empty() ? 0.0 : sum / records.size(),
                    static_cast<unsigned long long>(seed));
      err << buf << "\n";
      return kExitOk;
    }

    if (stp->parsed()) {
      const auto grids = parse_grids(stp_grids);
      std::vector<int> windows;
      for (long long s : parse_int_list(stp_windows)) {
        if (s < 1) throw ConfigError("windows must be positive");
        windows.push_back(static_cast<int>(std::min<long long>(s, 1 << 20)));
      }
      const auto table = step_table(grids, windows, stp_eor);
      const std::string csv = "# seed=" + std::to_string(seed) + "\n" + step_table_csv(table);
      if (stp_out.empty()) {
        out << csv << "\n" << step_table_text(table);
      } else {
        write_file(stp_out, csv);
        out << step_table_text(table);
      }
      err << "steps rows=" << table.size() << " seed=" << seed << "\n";
      return kExitOk;
    }

    if (ren->parsed()) {
      const TokenGrid grid = token_grid_from_json(read_file(ren_in));
      const std::uint64_t s = ren_seed.value_or(grid.seed.value_or(default_seed));
      std::string pgm = "P5\n# seed " + std::to_string(s) + "\n" + std::to_string(grid.cols) + " " +
                        std::to_string(grid.rows) + "\n255\n";
      for (TokenId t : grid.tokens) pgm.push_back(static_cast<char>(static_cast<unsigned char>(t % 256)));
      write_file(ren_out, pgm);
      err << "render " << grid.cols << "x" << grid.rows << " seed=" << s << " -> " << ren_out << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace zipar::cli
