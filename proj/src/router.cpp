// SPDX-License-Identifier: Apache-2.0
#include "dmoa/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dmoa/error.hpp"
#include "dmoa/kernels.hpp"
#include "dmoa/numeric.hpp"
#include "dmoa/seed.hpp"

namespace dmoa {

RouterParams RouterParams::zeros(std::size_t dim, std::size_t pool_size) {
  RouterParams p;
  p.dim = dim;
  p.pool_size = pool_size;
  for (Matrix* m : {&p.w_r, &p.w_u, &p.w_n, &p.u_r, &p.u_u, &p.u_n}) *m = Matrix(dim, dim);
  for (auto* b : {&p.b_r, &p.b_u, &p.b_in, &p.b_hn}) b->assign(dim, 0.0);
  p.w_o = Matrix(pool_size, dim);
  p.b_o.assign(pool_size, 0.0);
  return p;
}

RouterParams RouterParams::initialize(std::size_t dim, std::size_t pool_size, std::uint64_t seed) {
  RouterParams p = zeros(dim, pool_size);
  Rng rng(derive_seed(seed, "router-init"));
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  p.for_each_tensor([&](std::string_view, std::span<double> values) {
    for (double& v : values) v = rng.uniform(-bound, bound);
  });
  return p;
}

std::size_t RouterParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](std::string_view, std::span<const double> v) { n += v.size(); });
  return n;
}

void check_shapes(const RouterParams& p, std::size_t dim, std::size_t pool_size) {
  auto fail = [&](const char* what) {
    throw ShapeError(std::string("router parameter ") + what + " does not match d=" + std::to_string(dim) +
                     ", N=" + std::to_string(pool_size));
  };
  if (p.dim != dim || p.pool_size != pool_size) fail("header");
  for (const Matrix* m : {&p.w_r, &p.w_u, &p.w_n, &p.u_r, &p.u_u, &p.u_n})
    if (m->rows != dim || m->cols != dim || m->data.size() != dim * dim) fail("GRU weight");
  for (const auto* b : {&p.b_r, &p.b_u, &p.b_in, &p.b_hn})
    if (b->size() != dim) fail("GRU bias");
  if (p.w_o.rows != pool_size || p.w_o.cols != dim || p.w_o.data.size() != pool_size * dim) fail("W_o");
  if (p.b_o.size() != pool_size) fail("b_o");
}

namespace {

void require_finite(std::span<const double> v, const char* gate) {
  if (!all_finite(v)) throw NumericError(std::string("GRU gate '") + gate + "' produced a non-finite value");
}

}  // namespace

GruOutput gru_step(const EmbeddingVector& x, const RouterState& h, const RouterParams& params) {
  GruCache scratch;
  return gru_step(x, h, params, scratch);
}

GruOutput gru_step(const EmbeddingVector& x, const RouterState& h, const RouterParams& params,
                   GruCache& cache) {
  const std::size_t d = params.dim;
  if (x.size() != d || h.hidden.size() != d)
    throw ShapeError("GRU input/hidden length does not match d=" + std::to_string(d));

  std::vector<double> wx(d), uh(d);
  cache.x = x.values;
  cache.h_prev = h.hidden;

  cache.reset.assign(d, 0.0);
  kernels::matvec(params.w_r.data, d, d, x.values, wx);
  kernels::matvec(params.u_r.data, d, d, h.hidden, uh);
  for (std::size_t i = 0; i < d; ++i) cache.reset[i] = sigmoid(wx[i] + uh[i] + params.b_r[i]);
  require_finite(cache.reset, "reset");

  cache.update.assign(d, 0.0);
  kernels::matvec(params.w_u.data, d, d, x.values, wx);
  kernels::matvec(params.u_u.data, d, d, h.hidden, uh);
  for (std::size_t i = 0; i < d; ++i) cache.update[i] = sigmoid(wx[i] + uh[i] + params.b_u[i]);
  require_finite(cache.update, "update");

  cache.recurrent_candidate.assign(d, 0.0);
  cache.candidate.assign(d, 0.0);
  kernels::matvec(params.w_n.data, d, d, x.values, wx);
  kernels::matvec(params.u_n.data, d, d, h.hidden, cache.recurrent_candidate);
  for (std::size_t i = 0; i < d; ++i) {
    cache.recurrent_candidate[i] += params.b_hn[i];
    cache.candidate[i] = std::tanh(wx[i] + params.b_in[i] + cache.reset[i] * cache.recurrent_candidate[i]);
  }
  require_finite(cache.candidate, "candidate");

  cache.h_next.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    cache.h_next[i] = (1.0 - cache.update[i]) * cache.candidate[i] + cache.update[i] * h.hidden[i];
  require_finite(cache.h_next, "hidden");

  GruOutput out;
  out.next.hidden = cache.h_next;
  out.output = cache.h_next;
  return out;
}

std::vector<double> head(std::span<const double> output, const RouterParams& params) {
  if (output.size() != params.dim) throw ShapeError("head input length does not match d");
  std::vector<double> z(params.pool_size);
  kernels::matvec(params.w_o.data, params.pool_size, params.dim, output, z);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += params.b_o[i];
  return z;
}

int adaptive_k(std::span<const double> logits, double tau, std::size_t max_route, std::size_t pool_size) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (max_route < 1) throw ConfigError("max route must be at least 1");
  if (logits.size() != pool_size) throw ShapeError("logit vector length does not match N");
  if (!all_finite(logits)) throw NumericError("non-finite logits");
  const auto probs = softmax(logits, tau);
  const double threshold = 1.0 / static_cast<double>(pool_size);
  const auto count = std::count_if(probs.begin(), probs.end(), [&](double p) { return p >= threshold; });
  // The largest softmax entry is always >= 1/N.
  const auto k = std::min<std::size_t>(max_route, static_cast<std::size_t>(std::max<std::ptrdiff_t>(count, 1)));
  return static_cast<int>(k);
}

std::vector<int> keep_top_k(std::span<const double> logits, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > logits.size())
    throw Error("k=" + std::to_string(k) + " outside [1, " + std::to_string(logits.size()) + "]");
  std::vector<int> idx(logits.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Aggregation aggregate_context(std::span<const double> kept_logits, std::span<const EmbeddingVector> embeddings) {
  return aggregate_context(kept_logits, embeddings, std::vector<bool>(kept_logits.size(), true));
}

Aggregation aggregate_context(std::span<const double> kept_logits, std::span<const EmbeddingVector> embeddings,
                              const std::vector<bool>& survived) {
  const std::size_t k = kept_logits.size();
  if (k < 1) throw ShapeError("aggregation needs at least one response");
  if (embeddings.size() != k || survived.size() != k)
    throw ShapeError("aggregation: " + std::to_string(k) + " logits but " + std::to_string(embeddings.size()) +
                     " embeddings");
  const std::size_t d = embeddings[0].size();
  for (const auto& e : embeddings)
    if (e.size() != d) throw ShapeError("aggregation: response embeddings differ in length");

  std::vector<double> live;
  for (std::size_t j = 0; j < k; ++j)
    if (survived[j]) live.push_back(kept_logits[j]);
  if (live.empty()) throw Error("aggregation: every selected agent failed");
  const auto live_alpha = softmax(live);

  Aggregation out;
  out.alpha.assign(k, 0.0);
  out.context = EmbeddingVector(d);
  for (std::size_t j = 0, s = 0; j < k; ++j) {
    if (!survived[j]) continue;
    out.alpha[j] = live_alpha[s++];
    for (std::size_t c = 0; c < d; ++c) out.context[c] += out.alpha[j] * embeddings[j][c];
  }
  return out;
}

RouterTape::RouterTape(const RouterParams& params, const RouterConfig& config, EmbeddingVector query_embedding)
    : params_(&params), config_(validate_config(config)), state_(RouterState::zeros(params.dim)),
      context_(std::move(query_embedding)) {
  check_shapes(params, config.embed_dim, config.pool_size);
  if (context_.size() != params.dim)
    throw ShapeError("query embedding has length " + std::to_string(context_.size()) + ", expected " +
                     std::to_string(params.dim));
}

const RoutingDecision& RouterTape::route(const std::optional<ScriptedRoute>& script) {
  if (!steps_.empty() && !steps_.back().aggregated)
    throw Error("route() called before the previous step was aggregated");
  Step step;
  step.input = context_;
  const auto gru = gru_step(context_, state_, *params_, step.gru);
  state_ = gru.next;

  RoutingDecision& dec = step.decision;
  if (script) {
    if (script->logits.size() != config_.pool_size) throw ShapeError("scripted logits length does not match N");
    dec.logits_z = script->logits;
    dec.k = script->k;
    step.scripted = true;
  } else {
    dec.logits_z = head(gru.output, *params_);
    if (!all_finite(dec.logits_z)) throw NumericError("router head produced non-finite logits");
    dec.k = adaptive_k(dec.logits_z, config_.temperature, config_.max_route, config_.pool_size);
  }
  dec.count_probs = softmax(dec.logits_z, config_.temperature);
  dec.selected_ids = keep_top_k(dec.logits_z, dec.k);
  steps_.push_back(std::move(step));
  return steps_.back().decision;
}

const EmbeddingVector& RouterTape::aggregate(std::span<const EmbeddingVector> responses,
                                             const std::vector<bool>& survived) {
  if (steps_.empty() || steps_.back().aggregated) throw Error("aggregate() called without a pending route()");
  Step& step = steps_.back();
  const auto k = static_cast<std::size_t>(step.decision.k);
  std::vector<double> kept(k);
  for (std::size_t j = 0; j < k; ++j) kept[j] = step.decision.logits_z[static_cast<std::size_t>(step.decision.selected_ids[j])];
  std::vector<bool> mask = survived.empty() ? std::vector<bool>(k, true) : survived;
  if (mask.size() != k) throw ShapeError("survivor mask length does not match k");
  auto agg = aggregate_context(kept, responses, mask);
  if (agg.context.size() != params_->dim) throw ShapeError("response embeddings do not match d");
  step.decision.alpha = agg.alpha;
  step.responses.assign(responses.begin(), responses.end());
  step.survived = std::move(mask);
  step.aggregated = true;
  context_ = std::move(agg.context);
  return context_;
}

RouterTape forward_trajectory(const EmbeddingVector& query_embedding, const ResponseProvider& responses,
                              const RouterParams& params, const RouterConfig& config, std::size_t steps) {
  RouterTape tape(params, config, query_embedding);
  for (std::size_t i = 0; i < steps; ++i) {
    try {
      const auto& dec = tape.route();
      if (i + 1 < steps) {
        const auto emb = responses(i, dec.selected_ids);
        tape.aggregate(emb);
      }
    } catch (const Error& e) {
      throw Error("step " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return tape;
}

RouterTape forward_trajectory(const EmbeddingVector& query_embedding,
                              const std::vector<std::vector<EmbeddingVector>>& table,
                              const RouterParams& params, const RouterConfig& config) {
  auto provider = [&](std::size_t step, std::span<const int> selected) {
    std::vector<EmbeddingVector> out;
    out.reserve(selected.size());
    for (int id : selected) out.push_back(table.at(step).at(static_cast<std::size_t>(id)));
    return out;
  };
  return forward_trajectory(query_embedding, provider, params, config, table.size());
}

RouterParams backward_trajectory(const RouterTape& tape, std::span<const std::vector<double>> logit_gradients) {
  const RouterParams& p = *tape.params_;
  const std::size_t d = p.dim;
  const std::size_t n = p.pool_size;
  const std::size_t steps = tape.steps_.size();
  if (logit_gradients.size() != steps)
    throw Error("backward: " + std::to_string(logit_gradients.size()) + " gradient vectors for " +
                std::to_string(steps) + " cached steps");

  RouterParams g = RouterParams::zeros(d, n);
  std::vector<double> dh_next(d, 0.0);      // dL/dh_i arriving from step i+1
  std::vector<double> dx_next;              // dL/dX_{i+1} from step i+1's GRU input
  bool have_dx_next = false;

  for (std::size_t ii = steps; ii-- > 0;) {
    const auto& step = tape.steps_[ii];
    const auto& c = step.gru;
    if (logit_gradients[ii].size() != n)
      throw ShapeError("backward: logit gradient at step " + std::to_string(ii + 1) + " has wrong length");
    std::vector<double> dz = logit_gradients[ii];

    // Aggregation path: X_{i+1} = sum_j alpha_j R_j, alpha = softmax(kept z).
    if (have_dx_next && step.aggregated && !step.scripted) {
      const std::size_t k = step.responses.size();
      std::vector<double> dalpha(k, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        if (!step.survived[j]) continue;
        double s = 0.0;
        for (std::size_t q = 0; q < d; ++q) s += dx_next[q] * step.responses[j][q];
        dalpha[j] = s;
      }
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += step.decision.alpha[j] * dalpha[j];
      for (std::size_t j = 0; j < k; ++j) {
        if (!step.survived[j]) continue;
        dz[static_cast<std::size_t>(step.decision.selected_ids[j])] += step.decision.alpha[j] * (dalpha[j] - dot);
      }
    }

    if (step.scripted) {
      // Scripted logits do not depend on the head.
      std::fill(dz.begin(), dz.end(), 0.0);
    }

    // Head: z = W_o h + b_o.
    std::vector<double> dh = dh_next;
    kernels::outer_acc(g.w_o.data, n, d, dz, c.h_next);
    for (std::size_t a = 0; a < n; ++a) g.b_o[a] += dz[a];
    kernels::matvec_t_acc(p.w_o.data, n, d, dz, dh);

    // GRU cell.
    std::vector<double> d_an(d), d_au(d), d_ar(d), d_hn(d), dh_prev(d);
    for (std::size_t q = 0; q < d; ++q) {
      const double u = c.update[q], nn = c.candidate[q], r = c.reset[q];
      const double dn = dh[q] * (1.0 - u);
      const double du = dh[q] * (c.h_prev[q] - nn);
      dh_prev[q] = dh[q] * u;
      d_an[q] = dn * (1.0 - nn * nn);
      d_hn[q] = d_an[q] * r;
      const double dr = d_an[q] * c.recurrent_candidate[q];
      d_au[q] = du * u * (1.0 - u);
      d_ar[q] = dr * r * (1.0 - r);
    }
    kernels::outer_acc(g.w_n.data, d, d, d_an, c.x);
    kernels::outer_acc(g.w_u.data, d, d, d_au, c.x);
    kernels::outer_acc(g.w_r.data, d, d, d_ar, c.x);
    kernels::outer_acc(g.u_n.data, d, d, d_hn, c.h_prev);
    kernels::outer_acc(g.u_u.data, d, d, d_au, c.h_prev);
    kernels::outer_acc(g.u_r.data, d, d, d_ar, c.h_prev);
    for (std::size_t q = 0; q < d; ++q) {
      g.b_in[q] += d_an[q];
      g.b_hn[q] += d_hn[q];
      g.b_u[q] += d_au[q];
      g.b_r[q] += d_ar[q];
    }
    kernels::matvec_t_acc(p.u_n.data, d, d, d_hn, dh_prev);
    kernels::matvec_t_acc(p.u_u.data, d, d, d_au, dh_prev);
    kernels::matvec_t_acc(p.u_r.data, d, d, d_ar, dh_prev);

    // Input gradient feeds the previous step's aggregation weights.
    dx_next.assign(d, 0.0);
    kernels::matvec_t_acc(p.w_n.data, d, d, d_an, dx_next);
    kernels::matvec_t_acc(p.w_u.data, d, d, d_au, dx_next);
    kernels::matvec_t_acc(p.w_r.data, d, d, d_ar, dx_next);
    have_dx_next = true;
    dh_next = std::move(dh_prev);
  }

  g.for_each_tensor([](std::string_view name, std::span<const double> v) {
    if (!all_finite(v)) throw NumericError("non-finite gradient in tensor " + std::string(name));
  });
  return g;
}

}  // namespace dmoa
