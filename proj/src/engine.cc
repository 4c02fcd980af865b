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

#include "zipar/engine.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "zipar/adaptive.h"
#include "zipar/errors.h"
#include "zipar/scheduler.h"

namespace zipar {

std::string_view to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kNtp:
      return "ntp";
    case DecodeMode::kFixed:
      return "fixed";
    case DecodeMode::kAdaptive:
      return "adaptive";
  }
  return "unknown";
}

DecodeMode parse_mode(std::string_view name) {
  if (name == "ntp") return DecodeMode::kNtp;
  if (name == "fixed") return DecodeMode::kFixed;
  if (name == "adaptive") return DecodeMode::kAdaptive;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected ntp, fixed or adaptive)");
}

std::string_view to_string(StepEvent event) {
  switch (event) {
    case StepEvent::kDecode:
      return "decode";
    case StepEvent::kProbe:
      return "probe";
    case StepEvent::kVerifyAccept:
      return "verify_accept";
    case StepEvent::kVerifyReject:
      return "verify_reject";
    case StepEvent::kPreInsert:
      return "pre_insert";
  }
  return "unknown";
}

double GenerationResult::reduction_vs_ntp() const {
  const auto ntp = static_cast<double>(ntp_step_count(shape));
  return 1.0 - static_cast<double>(steps) / ntp;
}

namespace {

enum class LaneKind { kDecode, kForcedEor, kProbe, kVerify };

struct Lane {
  Position pos;
  LaneKind kind;
  // Probe lanes: window the draft is drawn under.
  int window = 0;
};

class Engine {
 public:
  Engine(const GridShape& shape, DecodeMode mode, int window,
         const ModelBackend& backend, const GenerationOptions& options,
         std::uint64_t seed)
      : shape_(shape),
        mode_(mode),
        window_(window),
        backend_(backend),
        options_(options),
        seed_(seed),
        state_(shape, seed),
        cond_(Conditioning::conditional(options.prefix)),
        uncond_(Conditioning::unconditional(options.prefix.size())),
        guidance_(options.sampler.guidance_enabled()),
        cache_(backend.make_cache(shape, cond_)),
        probes_(static_cast<std::size_t>(shape.rows)),
        row_window_(static_cast<std::size_t>(shape.rows), shape.cols) {
    options_.sampler.validate();
    if (mode_ != DecodeMode::kNtp) {
      (mode_ == DecodeMode::kFixed ? WindowPolicy::fixed(window_)
                                   : WindowPolicy::adaptive(window_))
          .validate(shape_);
    }
    if (guidance_) uncond_cache_.emplace(backend.make_cache(shape, uncond_));
    log_.row_start_step.assign(static_cast<std::size_t>(shape.rows), -1);
    if (options_.record_distributions) {
      distributions_.resize(static_cast<std::size_t>(shape.image_tokens()));
    }
  }

  GenerationResult run() {
    const auto start = std::chrono::steady_clock::now();
    while (!finished()) step();
    GenerationResult result;
    result.shape = shape_;
    result.mode = mode_;
    result.window = mode_ == DecodeMode::kNtp ? 0 : window_;
    result.seed = seed_;
    result.grid = state_.to_grid();
    result.grid.seed = seed_;
    result.steps = static_cast<std::int64_t>(log_.steps.size());
    result.step_log = std::move(log_);
    result.stats = stats_;
    if (accepted_windows_ > 0) {
      result.stats.mean_window_at_accept =
          window_sum_ / static_cast<double>(accepted_windows_);
    }
    result.max_lanes = max_lanes_;
    result.distributions = std::move(distributions_);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }

 private:
  bool finished() const {
    if (!state_.all_rows_done()) return false;
    return !shape_.eor || state_.decoded({shape_.rows - 1, shape_.cols});
  }

  void pre_insert_eor(int row, StepRecord& rec) {
    const Position pos{row, shape_.cols};
    if (state_.decoded(pos)) return;
    commit(pos, *shape_.eor_token_id);
    rec.entries.push_back({pos, StepEvent::kPreInsert});
  }

  void start_row(int row) {
    log_.row_start_step[static_cast<std::size_t>(row)] =
        static_cast<std::int64_t>(log_.steps.size());
  }

  std::vector<Lane> plan_ntp() {
    for (int i = 0; i < shape_.rows; ++i) {
      if (state_.row_state(i) == RowState::kNotStarted) {
        state_.set_row_state(i, RowState::kActive);
        start_row(i);
      }
      if (state_.frontier(i) < shape_.cols) {
        return {Lane{{i, state_.frontier(i)}, LaneKind::kDecode}};
      }
      if (shape_.eor && !state_.decoded({i, shape_.cols})) {
        return {Lane{{i, shape_.cols}, LaneKind::kForcedEor}};
      }
    }
    return {};
  }

  std::vector<Lane> plan_fixed(StepRecord& rec) {
    std::vector<Lane> lanes;
    for (int i = 0; i < shape_.rows; ++i) {
      const RowState rs = state_.row_state(i);
      if (rs == RowState::kDone) continue;
      if (rs == RowState::kActive) {
        const int j = state_.frontier(i);
        if (eligible(state_, window_, i, j)) lanes.push_back({{i, j}, LaneKind::kDecode});
        continue;
      }
      // First row that has not started.
      if (eligible(state_, window_, i, 0)) {
        if (shape_.eor && i > 0) pre_insert_eor(i - 1, rec);
        state_.set_row_state(i, RowState::kActive);
        start_row(i);
        lanes.push_back({{i, 0}, LaneKind::kDecode});
      }
      break;
    }
    return lanes;
  }

  std::vector<Lane> plan_adaptive(StepRecord& rec) {
    std::vector<Lane> lanes;
    for (int i = 0; i < shape_.rows; ++i) {
      const RowState rs = state_.row_state(i);
      if (rs == RowState::kDone) continue;
      if (rs == RowState::kActive) {
        const int j = state_.frontier(i);
        if (eligible(state_, row_window_[static_cast<std::size_t>(i)], i, j)) {
          lanes.push_back({{i, j}, LaneKind::kDecode});
        }
        continue;
      }
      if (rs == RowState::kProbing) {
        const ProbeState& probe = *probes_[static_cast<std::size_t>(i)];
        if (state_.frontier(i - 1) >= probe.window + 1) {
          lanes.push_back({{i, 0}, LaneKind::kVerify});
        }
        continue;
      }
      // First row that has not started.
      if (i == 0) {
        state_.set_row_state(0, RowState::kActive);
        start_row(0);
        lanes.push_back({{0, 0}, LaneKind::kDecode});
      } else {
        const RowState above = state_.row_state(i - 1);
        const bool above_running = above == RowState::kActive || above == RowState::kDone;
        if (above_running && state_.frontier(i - 1) >= window_) {
          if (shape_.eor) pre_insert_eor(i - 1, rec);
          start_row(i);
          lanes.push_back({{i, 0}, LaneKind::kProbe, state_.frontier(i - 1)});
        }
      }
      break;
    }
    return lanes;
  }

  std::optional<TokenId> placeholder_for(Position pos) const {
    if (pos.col != 0 || pos.row == 0 || shape_.eor) return std::nullopt;
    if (state_.decoded({pos.row - 1, shape_.cols - 1})) return std::nullopt;
    return row_start_input(state_, pos.row, options_.prefix);
  }

  void commit(Position pos, TokenId token) {
    state_.commit(pos, token);
    backend_.commit(cache_, cond_, pos, token);
    if (uncond_cache_) backend_.commit(*uncond_cache_, uncond_, pos, token);
  }

  void record_distribution(Position pos, const ProbabilityVector& p) {
    if (!options_.record_distributions) return;
    distributions_[static_cast<std::size_t>(pos.row) * shape_.cols + pos.col] = p;
  }

  void finish_token(Position pos, TokenId token) {
    commit(pos, token);
    if (state_.frontier(pos.row) == shape_.cols) {
      state_.set_row_state(pos.row, RowState::kDone);
    }
  }

  void step() {
    StepRecord rec;
    std::vector<Lane> lanes;
    switch (mode_) {
      case DecodeMode::kNtp:
        lanes = plan_ntp();
        break;
      case DecodeMode::kFixed:
        lanes = plan_fixed(rec);
        break;
      case DecodeMode::kAdaptive:
        lanes = plan_adaptive(rec);
        break;
    }
    if (lanes.empty()) {
      throw InternalError("no lane can make progress at step " +
                          std::to_string(log_.steps.size()) + "\n" + state_.dump());
    }

    std::vector<Query> queries;
    queries.reserve(lanes.size());
    for (const Lane& lane : lanes) queries.push_back({lane.pos, placeholder_for(lane.pos)});

    const std::vector<LogitVector> logits =
        backend_.forward_cached(cache_, state_, queries, cond_);
    std::vector<LogitVector> uncond_logits;
    if (uncond_cache_) {
      uncond_logits = backend_.forward_cached(*uncond_cache_, state_, queries, uncond_);
    }
    if (options_.observer) {
      options_.observer(StepView{static_cast<std::int64_t>(log_.steps.size()), state_,
                                 cache_, queries, logits, cond_});
    }

    // Sample every lane first: all lanes read the pre-step state.
    struct Pending {
      Position pos;
      TokenId token;
    };
    std::vector<Pending> commits;
    for (std::size_t k = 0; k < lanes.size(); ++k) {
      const Lane& lane = lanes[k];
      const int row = lane.pos.row;
      if (lane.kind == LaneKind::kForcedEor) {
        commits.push_back({lane.pos, *shape_.eor_token_id});
        rec.entries.push_back({lane.pos, StepEvent::kPreInsert});
        continue;
      }
      const LogitVector mixed =
          uncond_cache_ ? guided_logits(logits[k], uncond_logits[k], options_.sampler.cfg_scale)
                        : logits[k];
      ProbabilityVector dist = to_distribution(mixed, options_.sampler);
      RandomStream& stream = state_.stream(row);
      switch (lane.kind) {
        case LaneKind::kDecode: {
          commits.push_back({lane.pos, sample(dist, stream)});
          rec.entries.push_back({lane.pos, StepEvent::kDecode});
          record_distribution(lane.pos, dist);
          break;
        }
        case LaneKind::kProbe: {
          ++stats_.probes;
          if (lane.window >= shape_.cols) {
            // Full previous row: the draft is exact and final.
            commits.push_back({lane.pos, sample(dist, stream)});
            state_.set_row_state(row, RowState::kActive);
            row_window_[static_cast<std::size_t>(row)] = shape_.cols;
            rec.entries.push_back({lane.pos, StepEvent::kDecode, std::nan(""), lane.window});
            record_distribution(lane.pos, dist);
          } else {
            probes_[static_cast<std::size_t>(row)] =
                begin_probe(row, lane.window, shape_.cols, std::move(dist), stream);
            state_.set_row_state(row, RowState::kProbing);
            rec.entries.push_back({lane.pos, StepEvent::kProbe, std::nan(""), lane.window});
          }
          break;
        }
        case LaneKind::kVerify: {
          ProbeState& probe = *probes_[static_cast<std::size_t>(row)];
          const VerifyOutcome outcome = verify(probe, dist, stream);
          if (outcome.accepted) {
            ++stats_.accepts;
            window_sum_ += outcome.window;
            ++accepted_windows_;
            commits.push_back({lane.pos, outcome.token});
            state_.set_row_state(row, RowState::kActive);
            row_window_[static_cast<std::size_t>(row)] = outcome.window;
            rec.entries.push_back(
                {lane.pos, StepEvent::kVerifyAccept, outcome.ratio, outcome.window});
            record_distribution(lane.pos, dist);
            probes_[static_cast<std::size_t>(row)].reset();
          } else {
            ++stats_.rejects;
            state_.set_row_state(row, RowState::kProbing);
            rec.entries.push_back(
                {lane.pos, StepEvent::kVerifyReject, outcome.ratio, outcome.window});
          }
          break;
        }
        case LaneKind::kForcedEor:
          break;
      }
    }

    for (const Pending& c : commits) {
      if (is_eor_slot(shape_, c.pos)) {
        commit(c.pos, c.token);
      } else {
        finish_token(c.pos, c.token);
      }
    }
    if (mode_ != DecodeMode::kNtp && shape_.eor &&
        state_.row_state(shape_.rows - 1) == RowState::kDone) {
      pre_insert_eor(shape_.rows - 1, rec);
    }

    rec.lanes = static_cast<int>(lanes.size());
    max_lanes_ = std::max(max_lanes_, rec.lanes);
    log_.steps.push_back(std::move(rec));
    if (options_.check_invariants) {
      state_.check_invariants();
      check_windows();
    }
  }

  // Window gap for adaptive/fixed rows; NTP is trivially sequential.
  void check_windows() const {
    if (mode_ == DecodeMode::kNtp) return;
    for (int i = 1; i < shape_.rows; ++i) {
      if (state_.row_state(i - 1) == RowState::kDone) continue;
      const int f = state_.frontier(i);
      if (f == 0) continue;
      const int w = mode_ == DecodeMode::kFixed ? window_ : row_window_[static_cast<std::size_t>(i)];
      // The last decoded token x(i, f-1) required x(i-1, f-1+w-1).
      if (state_.frontier(i - 1) < std::min(f - 1 + w, shape_.cols)) {
        throw IntegrityError("row " + std::to_string(i) +
                             " decoded beyond its window\n" + state_.dump());
      }
    }
  }

  GridShape shape_;
  DecodeMode mode_;
  int window_;
  const ModelBackend& backend_;
  GenerationOptions options_;
  std::uint64_t seed_;
  DecodeState state_;
  Conditioning cond_;
  Conditioning uncond_;
  bool guidance_;
  ContextCache cache_;
  std::optional<ContextCache> uncond_cache_;
  std::vector<std::optional<ProbeState>> probes_;
  std::vector<int> row_window_;
  StepLog log_;
  AcceptanceStats stats_;
  double window_sum_ = 0.0;
  std::int64_t accepted_windows_ = 0;
  int max_lanes_ = 0;
  std::vector<ProbabilityVector> distributions_;
};

}  // namespace

GenerationResult generate(const GridShape& shape, DecodeMode mode, int window,
                          const ModelBackend& backend,
                          const GenerationOptions& options, std::uint64_t seed) {
  shape.validate();
  Engine engine(shape, mode, window, backend, options, seed);
  return engine.run();
}

GenerationResult generate_ntp(const GridShape& shape, const ModelBackend& backend,
                              const GenerationOptions& options, std::uint64_t seed) {
  return generate(shape, DecodeMode::kNtp, 0, backend, options, seed);
}

GenerationResult generate_fixed(const GridShape& shape, int window,
                                const ModelBackend& backend,
                                const GenerationOptions& options,
                                std::uint64_t seed) {
  return generate(shape, DecodeMode::kFixed, window, backend, options, seed);
}

std::string step_log_json(const GenerationResult& result) {
  nlohmann::ordered_json doc;
  doc["seed"] = result.seed;
  doc["mode"] = std::string(to_string(result.mode));
  doc["window"] = result.window;
  doc["rows"] = result.shape.rows;
  doc["cols"] = result.shape.cols;
  doc["eor"] = result.shape.eor;
  doc["steps"] = result.steps;
  doc["ntp_steps"] = ntp_step_count(result.shape);
  auto lanes = nlohmann::ordered_json::array();
  for (const StepRecord& s : result.step_log.steps) lanes.push_back(s.lanes);
  doc["lanes"] = std::move(lanes);
  doc["max_lanes"] = result.max_lanes;
  doc["probes"] = result.stats.probes;
  doc["accepts"] = result.stats.accepts;
  doc["rejects"] = result.stats.rejects;
  doc["mean_window_at_accept"] = result.stats.mean_window_at_accept;
  doc["row_start_step"] = result.step_log.row_start_step;
  auto events = nlohmann::ordered_json::array();
  for (const StepRecord& s : result.step_log.steps) {
    auto step = nlohmann::ordered_json::array();
    for (const StepEntry& e : s.entries) {
      nlohmann::ordered_json ev;
      ev["row"] = e.pos.row;
      ev["col"] = e.pos.col;
      ev["event"] = std::string(to_string(e.event));
      if (e.window > 0) ev["window"] = e.window;
      if (std::isfinite(e.ratio)) ev["ratio"] = e.ratio;
      step.push_back(std::move(ev));
    }
    events.push_back(std::move(step));
  }
  doc["events"] = std::move(events);
  return doc.dump() + "\n";
}

std::string summary_line(const GenerationResult& result) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "mode=%s window=%d steps=%lld ntp=%lld reduction=%.1f%% "
                "accepts=%lld rejects=%lld mean_window=%.2f seed=%llu",
                std::string(to_string(result.mode)).c_str(), result.window,
                static_cast<long long>(result.steps),
                static_cast<long long>(ntp_step_count(result.shape)),
                100.0 * result.reduction_vs_ntp(),
                static_cast<long long>(result.stats.accepts),
                static_cast<long long>(result.stats.rejects),
                result.stats.mean_window_at_accept,
                static_cast<unsigned long long>(result.seed));
  return buf;
}

std::vector<ProbabilityVector> full_context_distributions(
    const GridShape& shape, const TokenGrid& grid, const ModelBackend& backend,
    const GenerationOptions& options) {
  if (grid.rows != shape.rows || grid.cols != shape.cols) {
    throw DomainError("token grid does not match the shape");
  }
  const Conditioning cond = Conditioning::conditional(options.prefix);
  const Conditioning uncond = Conditioning::unconditional(options.prefix.size());
  const bool guidance = options.sampler.guidance_enabled();
  DecodeState state(shape);
  ContextCache cache = backend.make_cache(shape, cond);
  std::optional<ContextCache> uncond_cache;
  if (guidance) uncond_cache.emplace(backend.make_cache(shape, uncond));
  for (int i = 0; i < shape.rows; ++i) {
    for (int j = 0; j < shape.row_stride(); ++j) {
      const Position p{i, j};
      const TokenId token = j < shape.cols ? grid.at(i, j) : *shape.eor_token_id;
      state.commit(p, token);
      backend.commit(cache, cond, p, token);
      if (uncond_cache) backend.commit(*uncond_cache, uncond, p, token);
    }
  }
  std::vector<Query> queries;
  for (int i = 0; i < shape.rows; ++i) {
    for (int j = 0; j < shape.cols; ++j) queries.push_back({{i, j}, std::nullopt});
  }
  const auto logits = backend.forward_cached(cache, state, queries, cond);
  std::vector<LogitVector> uncond_logits;
  if (uncond_cache) uncond_logits = backend.forward_cached(*uncond_cache, state, queries, uncond);
  std::vector<ProbabilityVector> out;
  out.reserve(queries.size());
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const LogitVector mixed =
        guidance ? guided_logits(logits[k], uncond_logits[k], options.sampler.cfg_scale)
                 : logits[k];
    out.push_back(to_distribution(mixed, options.sampler));
  }
  return out;
}

EquivalenceReport equivalence_report(const GridShape& shape,
                                     const ModelBackend& backend,
                                     std::span<const DecodeMode> modes,
                                     std::span<const int> windows,
                                     std::span<const std::uint64_t> seeds,
                                     const GenerationOptions& options,
                                     unsigned threads) {
  struct Task {
    DecodeMode mode;
    int window;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (DecodeMode m : modes) {
    if (m == DecodeMode::kNtp) continue;
    for (int w : windows) {
      for (std::uint64_t s : seeds) tasks.push_back({m, w, s});
    }
  }
  GenerationOptions run_options = options;
  run_options.record_distributions = true;
  run_options.observer = nullptr;

  std::vector<EquivalenceRow> rows(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        const Task& task = tasks[t];
        const GenerationResult ntp = generate_ntp(shape, backend, run_options, task.seed);
        const GenerationResult par =
            generate(shape, task.mode, task.window, backend, run_options, task.seed);
        const auto reference = full_context_distributions(shape, par.grid, backend, run_options);
        EquivalenceRow row;
        row.mode = task.mode;
        row.window = task.window;
        row.seed = task.seed;
        row.steps = par.steps;
        row.ntp_steps = ntp.steps;
        std::size_t same = 0;
        double tv_sum = 0.0;
        for (std::size_t k = 0; k < par.grid.tokens.size(); ++k) {
          same += par.grid.tokens[k] == ntp.grid.tokens[k] ? 1 : 0;
          const double tv = total_variation(par.distributions[k], reference[k]);
          tv_sum += tv;
          row.max_tv = std::max(row.max_tv, tv);
        }
        const auto n = static_cast<double>(par.grid.tokens.size());
        row.agreement = static_cast<double>(same) / n;
        row.mean_tv = tv_sum / n;
        row.accepts = par.stats.accepts;
        row.rejects = par.stats.rejects;
        rows[t] = row;
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  unsigned n_threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EquivalenceReport report;
  report.shape = shape;
  report.backend = backend.name();
  report.rows = std::move(rows);
  return report;
}

std::string EquivalenceReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["backend"] = backend;
  doc["rows"] = shape.rows;
  doc["cols"] = shape.cols;
  doc["eor"] = shape.eor;
  auto runs = nlohmann::ordered_json::array();
  for (const EquivalenceRow& r : rows) {
    nlohmann::ordered_json j;
    j["mode"] = std::string(zipar::to_string(r.mode));
    j["window"] = r.window;
    j["seed"] = r.seed;
    j["steps"] = r.steps;
    j["ntp_steps"] = r.ntp_steps;
    j["agreement"] = r.agreement;
    j["mean_tv"] = r.mean_tv;
    j["max_tv"] = r.max_tv;
    j["accepts"] = r.accepts;
    j["rejects"] = r.rejects;
    runs.push_back(std::move(j));
  }
  doc["runs"] = std::move(runs);
  return doc.dump(2) + "\n";
}

std::string EquivalenceReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(9) << "mode" << std::right << std::setw(7) << "window"
     << std::setw(8) << "seed" << std::setw(8) << "steps" << std::setw(8) << "ntp"
     << std::setw(11) << "agreement" << std::setw(11) << "mean_tv" << std::setw(11)
     << "max_tv" << std::setw(9) << "accepts" << std::setw(9) << "rejects" << '\n';
  for (const EquivalenceRow& r : rows) {
    os << std::left << std::setw(9) << zipar::to_string(r.mode) << std::right
       << std::setw(7) << r.window << std::setw(8) << r.seed << std::setw(8) << r.steps
       << std::setw(8) << r.ntp_steps << std::fixed << std::setprecision(4)
       << std::setw(11) << r.agreement << std::setw(11) << r.mean_tv << std::setw(11)
       << r.max_tv << std::setw(9) << r.accepts << std::setw(9) << r.rejects << '\n';
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

}  // namespace zipar
