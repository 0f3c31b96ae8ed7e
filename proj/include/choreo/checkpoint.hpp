#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "choreo/ddpg.hpp"
#include "choreo/nn.hpp"

namespace choreo {

// Binary checkpoint container. A file holds named entries; vectors are raw
// little-endian doubles so a load-save round trip is bit exact. Layout:
//   magic "CHKP" | u32 version | u32 entry count | entries
// entry: u32 name length | name | u32 kind | payload
// kinds: 0 = f64 vector (u64 count, doubles), 1 = i64 scalar, 2 = string.
class CheckpointWriter {
 public:
  void put_vec(const std::string& name, const Vec& v);
  void put_int(const std::string& name, std::int64_t v);
  void put_str(const std::string& name, const std::string& v);
  void save(const std::string& path) const;

 private:
  struct Entry {
    std::uint32_t kind;
    Vec vec;
    std::int64_t num = 0;
    std::string str;
  };
  std::vector<std::pair<std::string, Entry>> entries_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path);

  bool has(const std::string& name) const;
  Vec vec(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  std::string str(const std::string& name) const;

 private:
  struct Entry {
    std::uint32_t kind;
    Vec vec;
    std::int64_t num = 0;
    std::string str;
  };
  const Entry& entry(const std::string& name, std::uint32_t kind) const;
  std::map<std::string, Entry> entries_;
  std::string path_;
};

// Agent checkpoints carry everything needed to resume training exactly:
// network shapes, all four parameter sets, both Adam states, the root seed,
// and the env-step counter. `role` tags what the agent was trained as
// (a subtask name or "end_to_end").
void save_agent_checkpoint(const std::string& path, const DdpgAgent& agent,
                           const std::string& role, std::uint64_t seed, long env_steps);

struct AgentCheckpoint {
  DdpgAgent agent;
  std::string role;
  std::uint64_t seed = 0;
  long env_steps = 0;
};

AgentCheckpoint load_agent_checkpoint(const std::string& path);

// Actor-only view for consumers that just need the policy.
SubtaskPolicy load_policy(const std::string& path);

}  // namespace choreo
