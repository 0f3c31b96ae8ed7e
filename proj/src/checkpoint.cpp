#include "choreo/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace choreo {

namespace {

constexpr char kMagic[4] = {'C', 'H', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindVec = 0, kKindInt = 1, kKindStr = 2;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void CheckpointWriter::put_vec(const std::string& name, const Vec& v) {
  entries_.push_back({name, {kKindVec, v, 0, {}}});
}

void CheckpointWriter::put_int(const std::string& name, std::int64_t v) {
  entries_.push_back({name, {kKindInt, {}, v, {}}});
}

void CheckpointWriter::put_str(const std::string& name, const std::string& v) {
  entries_.push_back({name, {kKindStr, {}, 0, v}});
}

void CheckpointWriter::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, e.kind);
    switch (e.kind) {
      case kKindVec:
        write_u64(out, static_cast<std::uint64_t>(e.vec.size()));
        out.write(reinterpret_cast<const char*>(e.vec.data()),
                  static_cast<std::streamsize>(e.vec.size() * sizeof(double)));
        break;
      case kKindInt:
        write_u64(out, static_cast<std::uint64_t>(e.num));
        break;
      case kKindStr:
        write_u64(out, static_cast<std::uint64_t>(e.str.size()));
        out.write(e.str.data(), static_cast<std::streamsize>(e.str.size()));
        break;
    }
  }
  if (!out) throw ConfigError("checkpoint write failed: " + path);
}

CheckpointReader::CheckpointReader(const std::string& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ConfigError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw ConfigError("unsupported checkpoint version in " + path);
  }
  const std::uint32_t count = read_u32(in);
  for (std::uint32_t i = 0; i < count && in; ++i) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    Entry e;
    e.kind = read_u32(in);
    switch (e.kind) {
      case kKindVec: {
        const std::uint64_t n = read_u64(in);
        e.vec.resize(static_cast<Eigen::Index>(n));
        in.read(reinterpret_cast<char*>(e.vec.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        break;
      }
      case kKindInt:
        e.num = static_cast<std::int64_t>(read_u64(in));
        break;
      case kKindStr: {
        const std::uint64_t n = read_u64(in);
        e.str.resize(n);
        in.read(e.str.data(), static_cast<std::streamsize>(n));
        break;
      }
      default:
        throw ConfigError("corrupt checkpoint entry in " + path);
    }
    entries_.emplace(std::move(name), std::move(e));
  }
  if (!in) throw ConfigError("truncated checkpoint: " + path);
}

bool CheckpointReader::has(const std::string& name) const {
  return entries_.count(name) > 0;
}

const CheckpointReader::Entry& CheckpointReader::entry(const std::string& name,
                                                       std::uint32_t kind) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ConfigError("checkpoint " + path_ + " has no entry '" + name + "'");
  }
  if (it->second.kind != kind) {
    throw ConfigError("checkpoint entry '" + name + "' has the wrong kind in " + path_);
  }
  return it->second;
}

Vec CheckpointReader::vec(const std::string& name) const { return entry(name, kKindVec).vec; }

std::int64_t CheckpointReader::integer(const std::string& name) const {
  return entry(name, kKindInt).num;
}

std::string CheckpointReader::str(const std::string& name) const {
  return entry(name, kKindStr).str;
}

namespace {

Vec encode_hidden(const std::vector<int>& hidden) {
  Vec v(static_cast<Eigen::Index>(hidden.size()));
  for (size_t i = 0; i < hidden.size(); ++i) v[static_cast<Eigen::Index>(i)] = hidden[i];
  return v;
}

std::vector<int> decode_hidden(const Vec& v) {
  std::vector<int> hidden;
  for (int i = 0; i < v.size(); ++i) hidden.push_back(static_cast<int>(v[i]));
  return hidden;
}

}  // namespace

void save_agent_checkpoint(const std::string& path, const DdpgAgent& agent,
                           const std::string& role, std::uint64_t seed, long env_steps) {
  const DdpgConfig& cfg = agent.config();
  CheckpointWriter w;
  w.put_str("role", role);
  w.put_int("seed", static_cast<std::int64_t>(seed));
  w.put_int("env_steps", env_steps);
  w.put_int("obs_dim", agent.obs_dim());
  w.put_vec("hidden", encode_hidden(cfg.hidden));
  Vec params(10);
  params << cfg.gamma, cfg.polyak_retain, cfg.noise_sigma, cfg.random_action_prob,
      cfg.action_penalty, cfg.adam.lr, cfg.adam.beta1, cfg.adam.beta2, cfg.adam.eps,
      cfg.norm_clip;
  w.put_vec("config", params);
  w.put_vec("obs_center", cfg.obs_center);
  w.put_vec("obs_scale", cfg.obs_scale);
  w.put_vec("goal_center", cfg.goal_center);
  w.put_vec("goal_scale", cfg.goal_scale);
  w.put_vec("actor", agent.actor().flat());
  w.put_vec("critic", agent.critic().flat());
  w.put_vec("actor_target", agent.actor_target().flat());
  w.put_vec("critic_target", agent.critic_target().flat());
  w.put_vec("actor_adam_m", agent.actor_adam().m);
  w.put_vec("actor_adam_v", agent.actor_adam().v);
  w.put_int("actor_adam_t", agent.actor_adam().t);
  w.put_vec("critic_adam_m", agent.critic_adam().m);
  w.put_vec("critic_adam_v", agent.critic_adam().v);
  w.put_int("critic_adam_t", agent.critic_adam().t);
  w.save(path);
}

AgentCheckpoint load_agent_checkpoint(const std::string& path) {
  CheckpointReader r(path);
  DdpgConfig cfg;
  cfg.hidden = decode_hidden(r.vec("hidden"));
  const Vec params = r.vec("config");
  if (params.size() != 10) throw ConfigError("bad config entry in " + path);
  cfg.gamma = params[0];
  cfg.polyak_retain = params[1];
  cfg.noise_sigma = params[2];
  cfg.random_action_prob = params[3];
  cfg.action_penalty = params[4];
  cfg.adam.lr = params[5];
  cfg.adam.beta1 = params[6];
  cfg.adam.beta2 = params[7];
  cfg.adam.eps = params[8];
  cfg.norm_clip = params[9];
  cfg.obs_center = r.vec("obs_center");
  cfg.obs_scale = r.vec("obs_scale");
  cfg.goal_center = r.vec("goal_center");
  cfg.goal_scale = r.vec("goal_scale");

  Rng scratch(0);
  AgentCheckpoint ck{DdpgAgent(static_cast<int>(r.integer("obs_dim")), cfg, scratch),
                     r.str("role"), static_cast<std::uint64_t>(r.integer("seed")),
                     static_cast<long>(r.integer("env_steps"))};
  auto load_into = [&](const char* name, Vec& dst) {
    Vec v = r.vec(name);
    if (v.size() != dst.size()) {
      throw ConfigError(std::string("checkpoint entry '") + name + "' has wrong size");
    }
    dst = v;
  };
  load_into("actor", ck.agent.actor().flat());
  load_into("critic", ck.agent.critic().flat());
  load_into("actor_target", ck.agent.actor_target().flat());
  load_into("critic_target", ck.agent.critic_target().flat());
  load_into("actor_adam_m", ck.agent.actor_adam().m);
  load_into("actor_adam_v", ck.agent.actor_adam().v);
  ck.agent.actor_adam().t = r.integer("actor_adam_t");
  load_into("critic_adam_m", ck.agent.critic_adam().m);
  load_into("critic_adam_v", ck.agent.critic_adam().v);
  ck.agent.critic_adam().t = r.integer("critic_adam_t");
  return ck;
}

SubtaskPolicy load_policy(const std::string& path) {
  return load_agent_checkpoint(path).agent.policy();
}

}  // namespace choreo
