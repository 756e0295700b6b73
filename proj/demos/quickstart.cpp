// Smallest end-to-end tour: build the smoke world, score a few utterances,
// fit SFT, run a short GRPO, compare the two on held-out scenes.

#include <cstdio>

#include "mclp/pipeline.hpp"

using namespace mclp;

int main() {
  RunConfig c = smoke_config();
  c.grpo.iterations = 20;

  const StyleWorld world = build_world(c);
  const auto splits = curate_splits(build_corpus(world, c), world, c);
  std::printf("scenes: sft %zu, rl %zu, test %zu\n", splits.sft.size(), splits.rl.size(), splits.test.size());

  // one scene's final turn against its own audio and another scene's style
  const DialogueScene& sc = splits.test.front();
  const DialogueTurn& turn = sc.turns.back();
  Rng rng(7);
  const std::uint32_t style = sc.style_of_turn(sc.turn_count() - 1);
  const auto matched = sample_utterance(world.oracle, style, turn.transcript, rng);
  const auto mismatched = sample_utterance(world.oracle, 1 - style, turn.transcript, rng);
  std::printf("MCLP same style %.3f, other style %.3f\n",
              mclp::mclp(world.oracle, matched, turn.target, turn.transcript).value,
              mclp::mclp(world.oracle, mismatched, turn.target, turn.transcript).value);

  const RewardBreakdown r = compute_reward(c.grpo.reward, turn.target, turn.target, turn.transcript,
                                           world.oracle, world.decoder, rng);
  std::printf("reward of the ground truth: mclp %.3f cer %.3f -> %.3f\n", r.mclp, r.cer, r.reward);

  const auto sft = run_sft(splits.sft, c);
  std::printf("sft nll %.3f -> %.3f over %zu epochs\n", sft.loss_curve.front(), sft.loss_curve.back(),
              sft.loss_curve.size());
  const auto grpo = run_grpo(sft.params, rl_queries(splits.rl, c), world, c);
  std::printf("grpo mean reward %.3f -> %.3f\n", grpo.log.front().mean_reward, grpo.log.back().mean_reward);

  for (const auto& row : summarize_rows(run_eval(sft.params, grpo.params, splits.test, world, c)))
    std::printf("%-13s %-16s mclp %7.3f  cer %.3f  style %.3f\n", row.system.c_str(), to_string(row.regime),
                row.means.mclp, row.means.cer, row.means.oracle_similarity);
}
