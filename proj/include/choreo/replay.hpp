#pragma once

#include <deque>
#include <vector>

#include "choreo/rng.hpp"
#include "choreo/subtask.hpp"

namespace choreo {

// One environment step of goal-conditioned experience.
struct Transition {
  Vec obs;            // s
  Action action;      // a
  Vec3 achieved;      // ag
  Vec3 goal;          // sg under which the step was taken
  Vec obs_next;       // s'
  Vec3 achieved_next; // ag'
  bool done = false;  // last step of its episode (stored, not used in targets)
};

// A sampled minibatch, laid out column-wise for the networks. `goal` is the
// possibly relabeled goal; rewards are recomputed against it.
struct HerBatch {
  Mat obs_goal;       // (obs_dim + 3) x B
  Mat action;         // 4 x B
  Vec reward;         // B
  Mat obs_goal_next;  // (obs_dim + 3) x B
  Vec done;           // B
  Mat achieved_next;  // 3 x B, kept for reward verification
  Mat goal;           // 3 x B
};

// Ring buffer of whole episodes. Hindsight relabeling samples a transition,
// then with probability k/(k+1) swaps its goal for the achieved goal of a
// uniformly chosen later step of the same episode; either way the reward is
// recomputed from (achieved_next, goal).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity_episodes = 10000);

  void store_episode(std::vector<Transition> episode);

  int num_episodes() const { return static_cast<int>(episodes_.size()); }
  long num_transitions() const { return num_transitions_; }

  // Sampling is with replacement. Draw order per sample: episode index,
  // step index, relabel decision, future index.
  HerBatch sample_with_her(int batch_size, int k_future, Rng& rng) const;

 private:
  int capacity_;
  std::deque<std::vector<Transition>> episodes_;
  long num_transitions_ = 0;
};

}  // namespace choreo
