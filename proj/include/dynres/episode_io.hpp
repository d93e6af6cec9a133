#pragma once

// Episode files: newline-delimited JSON records with a fixed field order.
//
//   {"type":"header","n_pieces":N,"piece_radius":r,"workspace":[x0,y0,x1,y1],
//    "seed":S,"config_hash":"...","master_seed":M,"material":[...]}
//   {"type":"step","step":t,"action":[sx,sy,angle,length,width]|null,
//    "positions":[x0,y0,x1,y1,...]}
//
// Record t holds the piece positions at step t and the action applied at that
// step (null on the last record). Reals are written with 9 significant digits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dynres/sim_granular.hpp"

namespace dynres {

struct Provenance {
  std::string config_hash;
  std::uint64_t master_seed = 0;
};

struct EpisodeRecord {
  int step = 0;
  std::optional<Action> action;
  std::vector<Vec2> positions;
};

struct Episode {
  double piece_radius = 0.005;
  Rect workspace{{0.0, 0.0}, {0.5, 0.5}};
  std::uint64_t seed = 0;
  Provenance provenance;
  std::vector<int> material;
  std::vector<EpisodeRecord> records;

  std::size_t n_pieces() const { return material.size(); }
  /// Reconstructs the simulator state at record `t`.
  PileState state_at(std::size_t t) const;
};

std::string episode_header_line(const Episode &ep);
std::string episode_record_line(const EpisodeRecord &rec);
std::string serialize_episode(const Episode &ep);
Episode parse_episode(const std::string &text);

void write_episode(const std::filesystem::path &path, const Episode &ep);
Episode read_episode(const std::filesystem::path &path);

std::string action_json(const Action &a);

void write_text_file(const std::filesystem::path &path, const std::string &text);
std::string read_text_file(const std::filesystem::path &path);

}  // namespace dynres
