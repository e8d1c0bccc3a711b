#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "seps/binary_io.hpp"
#include "seps/envs/environment.hpp"

namespace seps::envs {

/// One (env, t, agent) step of a recorded trajectory.
struct TrajectoryRecord {
  std::uint32_t env = 0;
  std::uint64_t episode = 0;
  std::uint32_t t = 0;
  std::uint32_t agent_id = 0;
  Observation obs;
  std::int32_t action = 0;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;

  bool operator==(const TrajectoryRecord&) const = default;
};

// Binary layout: per record a u32 payload length, then the payload
// (env u32, episode u64, t u32, agent u32, obs_len u32, obs f64[], action i32,
// reward f64, next_len u32, next f64[], done u8), all little-endian.
inline void write_record(std::ostream& out, const TrajectoryRecord& r) {
  std::ostringstream body;
  io::write_le<std::uint32_t>(body, r.env);
  io::write_le<std::uint64_t>(body, r.episode);
  io::write_le<std::uint32_t>(body, r.t);
  io::write_le<std::uint32_t>(body, r.agent_id);
  io::write_le<std::uint32_t>(body, static_cast<std::uint32_t>(r.obs.size()));
  for (double v : r.obs) io::write_le<double>(body, v);
  io::write_le<std::int32_t>(body, r.action);
  io::write_le<double>(body, r.reward);
  io::write_le<std::uint32_t>(body, static_cast<std::uint32_t>(r.next_obs.size()));
  for (double v : r.next_obs) io::write_le<double>(body, v);
  io::write_le<std::uint8_t>(body, r.done ? 1 : 0);
  const std::string payload = body.str();
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(payload.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

inline std::vector<TrajectoryRecord> read_records(std::istream& in) {
  std::vector<TrajectoryRecord> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    const auto len = io::read_le<std::uint32_t>(in);
    std::string payload(len, '\0');
    if (!in.read(payload.data(), len)) throw ParseError("trajectory: truncated record");
    std::istringstream body(payload);
    TrajectoryRecord r;
    r.env = io::read_le<std::uint32_t>(body);
    r.episode = io::read_le<std::uint64_t>(body);
    r.t = io::read_le<std::uint32_t>(body);
    r.agent_id = io::read_le<std::uint32_t>(body);
    r.obs.resize(io::read_le<std::uint32_t>(body));
    for (double& v : r.obs) v = io::read_le<double>(body);
    r.action = io::read_le<std::int32_t>(body);
    r.reward = io::read_le<double>(body);
    r.next_obs.resize(io::read_le<std::uint32_t>(body));
    for (double& v : r.next_obs) v = io::read_le<double>(body);
    r.done = io::read_le<std::uint8_t>(body) != 0;
    records.push_back(std::move(r));
  }
  return records;
}

/// CSV export; vector fields are space-separated inside one column.
inline void write_records_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  auto join = [](const Observation& o) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t k = 0; k < o.size(); ++k) s << (k ? " " : "") << o[k];
    return s.str();
  };
  out << "env,episode,t,agent_id,obs,action,reward,next_obs,done\n";
  out.precision(17);
  for (const auto& r : records)
    out << r.env << ',' << r.episode << ',' << r.t << ',' << r.agent_id << ',' << join(r.obs) << ',' << r.action << ','
        << r.reward << ',' << join(r.next_obs) << ',' << (r.done ? 1 : 0) << '\n';
}

}  // namespace seps::envs
