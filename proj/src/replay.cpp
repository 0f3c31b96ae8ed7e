#include "choreo/replay.hpp"

namespace choreo {

ReplayBuffer::ReplayBuffer(int capacity_episodes) : capacity_(capacity_episodes) {
  require(capacity_ > 0, "ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::store_episode(std::vector<Transition> episode) {
  require(!episode.empty(), "store_episode: empty episode");
  for (const auto& tr : episode) {
    require(tr.obs.allFinite() && tr.obs_next.allFinite() && tr.action.allFinite() &&
                tr.achieved.allFinite() && tr.achieved_next.allFinite() &&
                tr.goal.allFinite(),
            "store_episode: non-finite transition");
  }
  if (static_cast<int>(episodes_.size()) == capacity_) {
    num_transitions_ -= static_cast<long>(episodes_.front().size());
    episodes_.pop_front();
  }
  num_transitions_ += static_cast<long>(episode.size());
  episodes_.push_back(std::move(episode));
}

HerBatch ReplayBuffer::sample_with_her(int batch_size, int k_future, Rng& rng) const {
  require(batch_size > 0, "sample_with_her: batch size must be positive");
  require(k_future >= 0, "sample_with_her: k_future must be nonnegative");
  require(!episodes_.empty(), "sample_with_her: buffer empty");

  const int obs_dim = static_cast<int>(episodes_.front().front().obs.size());
  HerBatch batch;
  batch.obs_goal.resize(obs_dim + 3, batch_size);
  batch.action.resize(4, batch_size);
  batch.reward.resize(batch_size);
  batch.obs_goal_next.resize(obs_dim + 3, batch_size);
  batch.done.resize(batch_size);
  batch.achieved_next.resize(3, batch_size);
  batch.goal.resize(3, batch_size);

  const double relabel_prob =
      k_future == 0 ? 0.0 : static_cast<double>(k_future) / (k_future + 1);

  for (int i = 0; i < batch_size; ++i) {
    const int e = rng.uniform_int(0, num_episodes() - 1);
    const auto& episode = episodes_[e];
    const int len = static_cast<int>(episode.size());
    const int t = rng.uniform_int(0, len - 1);
    const Transition& tr = episode[t];

    Vec3 goal = tr.goal;
    if (relabel_prob > 0.0 && rng.uniform() < relabel_prob) {
      const int j = rng.uniform_int(t, len - 1);
      goal = episode[j].achieved_next;
    }

    batch.obs_goal.col(i).head(obs_dim) = tr.obs;
    batch.obs_goal.col(i).tail(3) = goal;
    batch.action.col(i) = tr.action;
    batch.reward[i] = compute_reward(tr.achieved_next, goal);
    batch.obs_goal_next.col(i).head(obs_dim) = tr.obs_next;
    batch.obs_goal_next.col(i).tail(3) = goal;
    batch.done[i] = tr.done ? 1.0 : 0.0;
    batch.achieved_next.col(i) = tr.achieved_next;
    batch.goal.col(i) = goal;
  }
  return batch;
}

}  // namespace choreo
