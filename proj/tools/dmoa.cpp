// SPDX-License-Identifier: Apache-2.0
// dmoa: train, run and inspect a recurrent agent router.

#include <iostream>

#include <CLI11.hpp>

#include "dmoa/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Entropy-supervised recurrent routing over an agent pool"};
  app.require_subcommand(1);

  dmoa::CommandOptions o;
  std::size_t t_dense = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured seed");
  };

  auto* train = app.add_subcommand("train", "Dense training on a query file");
  add_common(train);
  train->add_option("--queries", o.queries_file, "Training queries, one per line (default: [paths] train_queries)");

  auto* infer = app.add_subcommand("infer", "Sparse inference");
  add_common(infer);
  infer->add_option("--query", o.query, "A single query");
  infer->add_option("--queries", o.queries_file, "Query file, one per line");

  auto* ttt = app.add_subcommand("ttt", "Test-time training on a query stream");
  add_common(ttt);
  ttt->add_option("--queries", o.queries_file, "Query stream, one per line")->required();
  ttt->add_option("--t-dense", t_dense, "Number of dense adaptation queries")->required();

  auto* grad = app.add_subcommand("gradcheck", "Compare BPTT gradients with finite differences");
  add_common(grad);
  grad->add_flag("--corrupt-gradient", o.corrupt_gradient)->group("");

  auto* sim = app.add_subcommand("simulate", "Run a scripted communication topology");
  add_common(sim);
  sim->add_option("--topology", o.topology, "chain, star, complete or moa")->required();
  sim->add_option("--query", o.query, "Query text");

  CLI11_PARSE(app, argc, argv);

  auto* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) o.seed = seed;
  if (chosen->get_option_no_throw("--t-dense") && chosen->count("--t-dense")) o.t_dense = t_dense;

  if (chosen == train) return dmoa::cmd_train(o, std::cout, std::cerr);
  if (chosen == infer) return dmoa::cmd_infer(o, std::cout, std::cerr);
  if (chosen == ttt) return dmoa::cmd_ttt(o, std::cout, std::cerr);
  if (chosen == grad) return dmoa::cmd_gradcheck(o, std::cout, std::cerr);
  return dmoa::cmd_simulate(o, std::cout, std::cerr);
}
