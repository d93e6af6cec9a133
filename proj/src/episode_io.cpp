#include "dynres/episode_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dynres {

namespace {

void append_reals(std::string &out, const std::vector<Vec2> &pts) {
  out += '[';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ',';
    out += fmt9(pts[i].x);
    out += ',';
    out += fmt9(pts[i].y);
  }
  out += ']';
}

std::vector<Vec2> read_pairs(const nlohmann::json &arr) {
  if (!arr.is_array() || arr.size() % 2 != 0)
    throw std::runtime_error("episode: malformed position array");
  std::vector<Vec2> pts(arr.size() / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = {arr[2 * i].get<double>(), arr[2 * i + 1].get<double>()};
  return pts;
}

}  // namespace

std::string action_json(const Action &a) {
  return "[" + fmt9(a.start.x) + "," + fmt9(a.start.y) + "," + fmt9(a.angle) + "," +
         fmt9(a.length) + "," + fmt9(a.pusher_width) + "]";
}

PileState Episode::state_at(std::size_t t) const {
  PileState st;
  st.positions = records.at(t).positions;
  st.material = material;
  st.piece_radius = piece_radius;
  st.workspace = workspace;
  st.rng_seed = seed;
  st.step = records.at(t).step;
  return st;
}

std::string episode_header_line(const Episode &ep) {
  std::string s = "{\"type\":\"header\",\"n_pieces\":" + std::to_string(ep.n_pieces()) +
                  ",\"piece_radius\":" + fmt9(ep.piece_radius) + ",\"workspace\":[" +
                  fmt9(ep.workspace.lo.x) + "," + fmt9(ep.workspace.lo.y) + "," +
                  fmt9(ep.workspace.hi.x) + "," + fmt9(ep.workspace.hi.y) +
                  "],\"seed\":" + std::to_string(ep.seed) + ",\"config_hash\":\"" +
                  ep.provenance.config_hash + "\",\"master_seed\":" +
                  std::to_string(ep.provenance.master_seed) + ",\"material\":[";
  for (std::size_t i = 0; i < ep.material.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ep.material[i]);
  }
  s += "]}";
  return s;
}

std::string episode_record_line(const EpisodeRecord &rec) {
  std::string s = "{\"type\":\"step\",\"step\":" + std::to_string(rec.step) + ",\"action\":";
  s += rec.action ? action_json(*rec.action) : std::string("null");
  s += ",\"positions\":";
  append_reals(s, rec.positions);
  s += '}';
  return s;
}

std::string serialize_episode(const Episode &ep) {
  std::string out = episode_header_line(ep);
  out += '\n';
  for (const auto &r : ep.records) {
    out += episode_record_line(r);
    out += '\n';
  }
  return out;
}

Episode parse_episode(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  Episode ep;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto type = j.at("type").get<std::string>();
    if (type == "header") {
      ep.piece_radius = j.at("piece_radius").get<double>();
      const auto &w = j.at("workspace");
      ep.workspace = {{w[0].get<double>(), w[1].get<double>()},
                      {w[2].get<double>(), w[3].get<double>()}};
      ep.seed = j.at("seed").get<std::uint64_t>();
      ep.provenance.config_hash = j.value("config_hash", "");
      ep.provenance.master_seed = j.value("master_seed", std::uint64_t{0});
      ep.material = j.at("material").get<std::vector<int>>();
      if (ep.material.size() != j.at("n_pieces").get<std::size_t>())
        throw std::runtime_error("episode: material count mismatch");
      have_header = true;
    } else if (type == "step") {
      if (!have_header) throw std::runtime_error("episode: step before header");
      EpisodeRecord r;
      r.step = j.at("step").get<int>();
      const auto &a = j.at("action");
      if (!a.is_null()) {
        Action act;
        act.start = {a[0].get<double>(), a[1].get<double>()};
        act.angle = a[2].get<double>();
        act.length = a[3].get<double>();
        act.pusher_width = a[4].get<double>();
        r.action = act;
      }
      r.positions = read_pairs(j.at("positions"));
      if (r.positions.size() != ep.material.size())
        throw std::runtime_error("episode: position count mismatch");
      ep.records.push_back(std::move(r));
    } else {
      throw std::runtime_error("episode: unknown record type " + type);
    }
  }
  if (!have_header) throw std::runtime_error("episode: missing header");
  return ep;
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_episode(const std::filesystem::path &path, const Episode &ep) {
  write_text_file(path, serialize_episode(ep));
}

Episode read_episode(const std::filesystem::path &path) {
  return parse_episode(read_text_file(path));
}

}  // namespace dynres
