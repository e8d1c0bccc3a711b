#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "seps/envs/environment.hpp"
#include "seps/errors.hpp"

namespace seps::trainer {

enum class Scheme { NoPS, FuPS, FuPSId, FuPSIdScaled, SePS };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::NoPS: return "nops";
    case Scheme::FuPS: return "fups";
    case Scheme::FuPSId: return "fupsid";
    case Scheme::FuPSIdScaled: return "fupsid-scaled";
    case Scheme::SePS: return "seps";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  for (Scheme v : {Scheme::NoPS, Scheme::FuPS, Scheme::FuPSId, Scheme::FuPSIdScaled, Scheme::SePS})
    if (to_string(v) == s) return v;
  throw ContractViolation("unknown scheme '" + s + "' (expected nops, fups, fupsid, fupsid-scaled or seps)");
}

/// Hidden width of the scaled-up id-conditioned baseline for c colours: the
/// parameter count grows roughly linearly with c from a 128-unit base.
inline std::size_t scaled_width(std::size_t colours) {
  static constexpr std::array<std::size_t, 8> widths = {128, 189, 236, 277, 313, 345, 375, 401};
  if (colours < 1 || colours > widths.size())
    throw ContractViolation("scaled_width: defined for 1..8 colours, got " + std::to_string(colours));
  return widths[colours - 1];
}

/// How agents map onto networks.
struct SharingScheme {
  Scheme variant = Scheme::NoPS;
  std::vector<std::size_t> assignment;  // SePS: agent -> cluster
  std::size_t colours = 0;              // FuPSIdScaled: 0 means "use the task's type count"

  static SharingScheme nops() { return {Scheme::NoPS, {}, 0}; }
  static SharingScheme fups() { return {Scheme::FuPS, {}, 0}; }
  static SharingScheme fups_id() { return {Scheme::FuPSId, {}, 0}; }
  static SharingScheme fups_id_scaled(std::size_t colours = 0) { return {Scheme::FuPSIdScaled, {}, colours}; }
  static SharingScheme seps(std::vector<std::size_t> assignment) { return {Scheme::SePS, std::move(assignment), 0}; }

  bool id_conditioned() const noexcept { return variant == Scheme::FuPSId || variant == Scheme::FuPSIdScaled; }

  /// mu: agent index -> network index.
  std::vector<std::size_t> policy_map(std::size_t n_agents) const {
    switch (variant) {
      case Scheme::NoPS: {
        std::vector<std::size_t> mu(n_agents);
        for (std::size_t i = 0; i < n_agents; ++i) mu[i] = i;
        return mu;
      }
      case Scheme::FuPS:
      case Scheme::FuPSId:
      case Scheme::FuPSIdScaled: return std::vector<std::size_t>(n_agents, 0);
      case Scheme::SePS: {
        if (assignment.size() != n_agents)
          throw ContractViolation("SePS: partition covers " + std::to_string(assignment.size()) + " agents, task has " +
                                  std::to_string(n_agents));
        const std::size_t k = policy_count(n_agents);
        std::vector<bool> used(k, false);
        for (std::size_t c : assignment) used[c] = true;
        for (bool u : used)
          if (!u) throw ContractViolation("SePS: partition leaves a cluster without agents");
        return assignment;
      }
    }
    return {};
  }

  std::size_t policy_count(std::size_t n_agents) const {
    switch (variant) {
      case Scheme::NoPS: return n_agents;
      case Scheme::SePS: return assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
      default: return 1;
    }
  }

  std::size_t hidden_width(std::size_t default_width, const envs::MarkovGameSpec& spec) const {
    if (variant != Scheme::FuPSIdScaled) return default_width;
    return scaled_width(colours ? colours : spec.type_count());
  }
};

/// Network input for one agent: the observation zero-padded to `padded_width`,
/// followed by a one-hot agent id for id-conditioned schemes.
inline void id_condition(std::span<const double> obs, std::size_t agent_id, std::size_t n_agents,
                         std::size_t padded_width, bool with_id, std::span<double> out) {
  if (obs.size() > padded_width) throw DimensionError("id_condition: observation wider than padded width");
  if (out.size() != padded_width + (with_id ? n_agents : 0)) throw DimensionError("id_condition: output width");
  std::fill(out.begin(), out.end(), 0.0);
  std::copy(obs.begin(), obs.end(), out.begin());
  if (with_id) out[padded_width + agent_id] = 1.0;
}

inline std::vector<double> id_condition(std::span<const double> obs, std::size_t agent_id, std::size_t n_agents,
                                        std::size_t padded_width, const SharingScheme& scheme) {
  std::vector<double> out(padded_width + (scheme.id_conditioned() ? n_agents : 0));
  id_condition(obs, agent_id, n_agents, padded_width, scheme.id_conditioned(), out);
  return out;
}

}  // namespace seps::trainer
