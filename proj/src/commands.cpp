// SPDX-License-Identifier: Apache-2.0
#include "dmoa/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "dmoa/config.hpp"
#include "dmoa/error.hpp"
#include "dmoa/gradcheck.hpp"
#include "dmoa/orchestrator.hpp"
#include "dmoa/router.hpp"
#include "dmoa/trace.hpp"

namespace dmoa {

namespace {

RunConfig load(const CommandOptions& o) {
  if (o.config_path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(o.config_path);
  if (o.seed) cfg.router.seed = *o.seed;
  return cfg;
}

// Creates the parent directory of an output path if needed.
const std::string& output_path(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory for " + path + ": " + ec.message());
  return path;
}

RouterParams initial_params(const RunConfig& cfg, std::ostream& err) {
  if (!cfg.paths.params_in.empty()) {
    ParamsSnapshot snap = read_params(cfg.paths.params_in);
    check_shapes(snap.params, cfg.router.embed_dim, cfg.router.pool_size);
    return std::move(snap.params);
  }
  err << "note: no params_in configured; using a freshly initialized router\n";
  return RouterParams::initialize(cfg.router.embed_dim, cfg.router.pool_size, cfg.router.seed);
}

std::vector<std::string> query_list(const CommandOptions& o, const std::string& fallback_file) {
  if (!o.query.empty() && !o.queries_file.empty()) throw ConfigError("give either --query or --queries, not both");
  if (!o.query.empty()) return {o.query};
  const std::string& file = o.queries_file.empty() ? fallback_file : o.queries_file;
  if (file.empty()) throw ConfigError("no queries: pass --query or --queries");
  auto qs = read_queries(file);
  if (qs.empty()) throw ConfigError("query file is empty: " + file);
  return qs;
}

void write_metrics(const std::string& path, const TrainReport& report) {
  if (path.empty()) return;
  std::ofstream out(output_path(path), std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open metrics file for writing: " + path);
  out << "epoch,batch,loss\n";
  for (const auto& row : report.batches)
    out << row.epoch << ',' << row.batch << ',' << format_double(row.loss) << '\n';
  out.flush();
  if (!out) throw IoError("failed writing metrics file: " + path);
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

std::vector<std::string> read_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open query file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
  }
  return out;
}

int cmd_train(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(o);
    if (cfg.paths.params_out.empty()) throw ConfigError("[paths] params_out is required for train");
    const auto queries = query_list(o, cfg.paths.train_queries);
    auto bundle = make_runtime(cfg);
    // Training always starts from the seeded initialization.
    RouterParams params = RouterParams::initialize(cfg.router.embed_dim, cfg.router.pool_size, cfg.router.seed);
    OptimizerState state = OptimizerState::for_params(params, cfg.training.hyper);
    TrainReport report = train(bundle->runtime, queries, params, state, cfg.router, cfg.training);
    write_params(output_path(cfg.paths.params_out), params, cfg.router.seed);
    write_metrics(cfg.paths.metrics_out, report);
    out << "trained on " << queries.size() << " queries, " << report.epoch_mean_loss.size() << " epochs, "
        << report.optimizer_steps << " optimizer steps\n";
    for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e)
      out << "epoch " << e + 1 << " mean loss " << format_double(report.epoch_mean_loss[e]) << '\n';
    out << "routing agreement (last epoch) " << format_double(report.routing_agreement) << '\n';
    out << "params written to " << cfg.paths.params_out << '\n';
    return 0;
  });
}

int cmd_infer(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(o);
    const auto queries = query_list(o, "");
    auto bundle = make_runtime(cfg);
    const RouterParams params = initial_params(cfg, err);
    std::vector<Trajectory> trajectories;
    std::size_t calls = 0, dense_calls = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      Trajectory t = infer(bundle->runtime, queries[q], params, cfg.router);
      const std::size_t dense = cfg.router.pool_size * t.steps.size();
      out << "[" << q + 1 << "] " << (t.final_answer ? *t.final_answer : std::string("(no answer)")) << '\n';
      out << "    steps=" << t.steps.size() << " sum_k=" << t.total_agent_calls << " dense=" << dense
          << " tokens=" << t.total_tokens << " terminated_by=" << to_string(t.terminated_by) << '\n';
      calls += t.total_agent_calls;
      dense_calls += dense;
      trajectories.push_back(std::move(t));
    }
    if (!cfg.paths.trace_out.empty()) write_trace(output_path(cfg.paths.trace_out), trajectories);
    char ratio[64];
    std::snprintf(ratio, sizeof ratio, "%.4f", dense_calls ? double(calls) / double(dense_calls) : 0.0);
    out << "total agent calls " << calls << " of " << dense_calls << " dense (ratio " << ratio << ")\n";
    return 0;
  });
}

int cmd_ttt(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(o);
    if (!o.t_dense) throw ConfigError("--t-dense is required for ttt");
    const auto queries = query_list(o, "");
    auto bundle = make_runtime(cfg);
    RouterParams params = initial_params(cfg, err);
    TttResult r = test_time_train(bundle->runtime, queries, params, cfg.router, cfg.training, *o.t_dense);
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    if (!cfg.paths.params_out.empty()) write_params(output_path(cfg.paths.params_out), params, cfg.router.seed);
    if (!cfg.paths.trace_out.empty()) write_trace(output_path(cfg.paths.trace_out), r.trajectories);
    write_metrics(cfg.paths.metrics_out, r.report);
    out << "adapted on " << std::min(*o.t_dense, queries.size()) << " dense queries with "
        << r.report.optimizer_steps << " optimizer steps; " << r.trajectories.size() << " trajectories\n";
    if (!r.report.epoch_mean_loss.empty())
      out << "adaptation mean loss " << format_double(r.report.epoch_mean_loss.back()) << '\n';
    return 0;
  });
}

int cmd_gradcheck(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    GradcheckOptions g;
    if (!o.config_path.empty()) g.seed = load(o).router.seed;
    if (o.seed) g.seed = *o.seed;
    g.corrupt = o.corrupt_gradient;
    const GradcheckResult r = gradient_check(g);
    out << "checked " << r.checked << " parameters (N=" << g.pool_size << ", d=" << g.dim << ", " << g.steps
        << " steps, seed " << g.seed << ")\n";
    out << "max relative error " << format_double(r.max_rel_error) << " at " << r.worst_tensor << "["
        << r.worst_index << "]\n";
    out << "max absolute error " << format_double(r.max_abs_error) << '\n';
    if (r.selection_flips) out << "selection changed under " << r.selection_flips << " perturbations\n";
    if (!(r.max_rel_error <= 1e-4)) {
      err << "error: gradient check failed (max relative error " << format_double(r.max_rel_error)
          << " > 1e-4)\n";
      return 1;
    }
    return 0;
  });
}

int cmd_simulate(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(o);
    if (o.topology.empty()) throw ConfigError("--topology is required for simulate");
    const Topology topo = topology_from_string(o.topology);
    const std::string query = o.query.empty() ? std::string("#default relay a message around the pool") : o.query;
    auto bundle = make_runtime(cfg);
    const RouterParams params = initial_params(cfg, err);
    Trajectory t = simulate(bundle->runtime, query, params, cfg.router, topo);
    const auto problems = verify_topology(t, topo, cfg.router.pool_size, *bundle->embedder);
    if (!cfg.paths.trace_out.empty()) write_trace(output_path(cfg.paths.trace_out), {t});
    for (const auto& s : t.steps) {
      out << "step " << s.step_index << ": {";
      for (std::size_t i = 0; i < s.selected_ids.size(); ++i) out << (i ? "," : "") << s.selected_ids[i];
      out << "}\n";
    }
    for (const auto& p : problems) err << "error: " << p << '\n';
    if (!problems.empty()) return 1;
    out << to_string(topo) << " pattern verified over " << t.steps.size() << " steps\n";
    return 0;
  });
}

}  // namespace dmoa
