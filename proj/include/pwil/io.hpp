#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pwil/metric.hpp"
#include "pwil/types.hpp"

namespace pwil {

// Trajectory JSONL: one line per timestep,
//   {"episode": int, "t": int, "obs": [...], "act": [...] or null}
// Lines are grouped into trajectories by episode id, ordered by t.

namespace detail {

inline nlohmann::json parse_line(const std::string& line, int lineno) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": malformed JSON");
  }
  return j;
}

}  // namespace detail

inline std::vector<Trajectory> read_trajectories(std::istream& in,
                                                 int nominal_horizon = 0) {
  std::map<int, Trajectory> by_episode;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, lineno);
    try {
      Point p;
      p.episode = j.at("episode").get<int>();
      p.t = j.at("t").get<int>();
      p.state = j.at("obs").get<std::vector<double>>();
      if (j.contains("act") && !j.at("act").is_null()) {
        p.action = j.at("act").get<std::vector<double>>();
      }
      if (!all_finite(p.state) || (p.action && !all_finite(*p.action))) {
        throw std::runtime_error("non-finite entry");
      }
      auto& traj = by_episode[p.episode];
      traj.episode_id = p.episode;
      if (!traj.points.empty() && p.t <= traj.points.back().t) {
        throw std::runtime_error("timesteps not increasing");
      }
      traj.points.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<Trajectory> out;
  out.reserve(by_episode.size());
  for (auto& [id, traj] : by_episode) {
    traj.nominal_horizon = nominal_horizon > 0 ? nominal_horizon : traj.length();
    if (traj.length() > traj.nominal_horizon) {
      throw std::runtime_error("episode " + std::to_string(id) +
                               " longer than nominal horizon");
    }
    out.push_back(std::move(traj));
  }
  return out;
}

inline std::vector<Trajectory> read_trajectories_file(const std::string& path,
                                                      int nominal_horizon = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  return read_trajectories(in, nominal_horizon);
}

// nlohmann serializes doubles with shortest round-trip precision, which
// keeps demo files byte-reproducible under fixed seeds.
inline nlohmann::json point_to_json(const Point& p) {
  nlohmann::json j;
  j["episode"] = p.episode;
  j["t"] = p.t;
  j["obs"] = p.state;
  if (p.action) {
    j["act"] = *p.action;
  } else {
    j["act"] = nullptr;
  }
  return j;
}

inline void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs) {
  for (const auto& traj : trajs) {
    for (const auto& p : traj.points) {
      out << point_to_json(p).dump() << '\n';
    }
  }
}

inline void write_trajectories_file(const std::string& path,
                                    const std::vector<Trajectory>& trajs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  write_trajectories(out, trajs);
}

// Embedding sidecar JSONL: {"episode": int, "t": int, "emb": [...]}
inline std::shared_ptr<EmbeddingTable> read_embeddings(std::istream& in) {
  auto table = std::make_shared<EmbeddingTable>();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(line, lineno);
    try {
      table->insert(j.at("episode").get<int>(), j.at("t").get<int>(),
                    j.at("emb").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

inline std::shared_ptr<EmbeddingTable> read_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  return read_embeddings(in);
}

// Coupling CSV: header then one `i,j,mass` row per nonzero entry.
inline void write_coupling_csv(std::ostream& out, const Coupling& c) {
  out << "i,j,mass\n";
  std::ostringstream row;
  row.precision(17);
  for (int i = 0; i < c.rows(); ++i) {
    for (int j = 0; j < c.cols(); ++j) {
      if (c.at(i, j) == 0.0) continue;
      row.str("");
      row << i << ',' << j << ',' << c.at(i, j) << '\n';
      out << row.str();
    }
  }
}

}  // namespace pwil
