#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "critmem/core.hpp"
#include "critmem/gateway.hpp"

namespace critmem {

// Deterministic stand-in agents. They parse the same prompt surfaces the live
// models would see, so offline runs exercise the full pipeline.

// Always the same reply, no matter the prompt.
BackendHandle fixed_backend(std::string reply, std::string model_id = "scripted-fixed");

// Answers the gold label of whichever known question appears in the last user
// message. The ideal performance agent.
BackendHandle gold_oracle_backend(const Dataset& dataset,
                                  std::string model_id = "scripted-oracle");

// Obeys the insight in the prompt: the last "Assertion:" line if present,
// else the last "The correct answer is ..." sentence, else the fallback.
BackendHandle follow_assertion_backend(std::string fallback = "Yes",
                                       std::string model_id = "scripted-follow");

// Follows the asserted insight with probability p; otherwise replies the
// fallback. The coin depends only on the question line and the seed, so both
// probe arms of one instance share it.
BackendHandle probabilistic_follower_backend(double p, std::uint64_t seed, std::string fallback,
                                             std::string model_id = "scripted-pfollow");

// Answers the correct_answer of the first critique JSON in the transcript
// (the most similar retrieved entry), else the fallback.
BackendHandle critique_following_backend(std::string fallback,
                                         std::string model_id = "scripted-crit-follow");

// Critic that accepts the asserted label and wraps it in well-formed
// critique JSON.
BackendHandle compliant_critic_backend(std::string model_id = "scripted-critic");

// Critic that always asserts some other label from the space; exercises the
// assertion override path.
BackendHandle adversarial_critic_backend(LabelSpace space,
                                         std::string model_id = "scripted-bad-critic");

// Critic that never produces JSON; exercises the parse fallback path.
BackendHandle prose_critic_backend(std::string model_id = "scripted-prose-critic");

// Pass-through wrapper counting completed calls; lets tests assert that warm
// store reruns reach the backend zero times.
BackendHandle counting_backend(BackendHandle inner, std::shared_ptr<std::atomic<std::size_t>> calls);

// Prompt-parsing helpers shared by the scripts above.
std::string extract_asserted_label(const std::string& text, const std::string& fallback);
std::string first_line(const std::string& text);

} // namespace critmem
