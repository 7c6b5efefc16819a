// SPDX-License-Identifier: Apache-2.0
#include "dmoa/trace.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dmoa/error.hpp"

namespace dmoa {

namespace {

using nlohmann::json;

void put_string(std::string& out, const std::string& s) { out += json(s).dump(); }

void put_vector(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
}

void put_ints(std::string& out, const std::vector<int>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  out += ']';
}

void put_step(std::string& out, const StepRecord& s) {
  out += "{\"step_index\":" + std::to_string(s.step_index);
  out += ",\"logits_z\":";
  put_vector(out, s.logits_z);
  out += ",\"count_probs\":";
  put_vector(out, s.count_probs);
  out += ",\"k\":" + std::to_string(s.k);
  out += ",\"selected_ids\":";
  put_ints(out, s.selected_ids);
  out += ",\"alpha\":";
  put_vector(out, s.alpha);
  out += ",\"context_X\":";
  put_vector(out, s.context_X.values);
  out += ",\"entropy_E\":";
  if (s.entropy_E)
    put_vector(out, *s.entropy_E);
  else
    out += "null";
  out += '}';
}

void put_response(std::string& out, const AgentResponse& r) {
  out += "{\"agent_id\":" + std::to_string(r.agent_id);
  out += ",\"step_index\":" + std::to_string(r.step_index);
  out += ",\"text\":";
  put_string(out, r.text);
  out += ",\"token_entropies\":";
  put_vector(out, r.token_entropies);
  out += ",\"token_count\":" + std::to_string(r.token_count);
  out += ",\"predictive_entropy\":";
  out += r.predictive_entropy ? format_double(*r.predictive_entropy) : std::string("null");
  out += '}';
}

std::vector<double> doubles(const json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string to_json_line(const Trajectory& t) {
  std::string out = "{\"query\":";
  put_string(out, t.query);
  out += ",\"steps\":[";
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (i) out += ',';
    put_step(out, t.steps[i]);
  }
  out += "],\"responses\":[";
  bool first = true;
  for (const auto& [key, r] : t.responses) {
    if (!first) out += ',';
    first = false;
    put_response(out, r);
  }
  out += "],\"final_answer\":";
  if (t.final_answer)
    put_string(out, *t.final_answer);
  else
    out += "null";
  out += ",\"terminated_by\":\"";
  out += to_string(t.terminated_by);
  out += "\",\"total_agent_calls\":" + std::to_string(t.total_agent_calls);
  out += ",\"total_tokens\":" + std::to_string(t.total_tokens);
  out += '}';
  return out;
}

Trajectory trajectory_from_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed trace line: ") + e.what());
  }
  try {
    Trajectory t;
    t.query = j.at("query").get<std::string>();
    for (const auto& s : j.at("steps")) {
      StepRecord r;
      r.step_index = s.at("step_index").get<int>();
      r.logits_z = doubles(s.at("logits_z"));
      r.count_probs = doubles(s.at("count_probs"));
      r.k = s.at("k").get<int>();
      r.selected_ids = s.at("selected_ids").get<std::vector<int>>();
      r.alpha = doubles(s.at("alpha"));
      r.context_X = EmbeddingVector(doubles(s.at("context_X")));
      if (!s.at("entropy_E").is_null()) r.entropy_E = doubles(s.at("entropy_E"));
      t.steps.push_back(std::move(r));
    }
    for (const auto& s : j.at("responses")) {
      AgentResponse r;
      r.agent_id = s.at("agent_id").get<int>();
      r.step_index = s.at("step_index").get<int>();
      r.text = s.at("text").get<std::string>();
      r.token_entropies = doubles(s.at("token_entropies"));
      r.token_count = s.at("token_count").get<int>();
      if (!s.at("predictive_entropy").is_null())
        r.predictive_entropy = s.at("predictive_entropy").get<double>();
      t.responses.emplace(std::make_pair(r.step_index, r.agent_id), std::move(r));
    }
    if (!j.at("final_answer").is_null()) t.final_answer = j.at("final_answer").get<std::string>();
    t.terminated_by = termination_from_string(j.at("terminated_by").get<std::string>());
    t.total_agent_calls = j.at("total_agent_calls").get<std::size_t>();
    t.total_tokens = j.at("total_tokens").get<std::size_t>();
    return t;
  } catch (const json::exception& e) {
    throw Error(std::string("trace line has wrong shape: ") + e.what());
  }
}

void write_trace(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open trace file for writing: " + path.string());
  for (const auto& t : trajectories) out << to_json_line(t) << '\n';
  if (!out) throw IoError("failed writing trace file: " + path.string());
}

std::vector<Trajectory> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(trajectory_from_json(line));
  }
  return out;
}

}  // namespace dmoa
