#pragma once

#include <string>
#include <vector>

#include "critmem/core.hpp"

namespace critmem {

// Bump whenever any template string changes; part of every artifact key so
// cached prompts and critiques from older wordings are never reused.
inline constexpr const char* kTemplateVersion = "tv1";

// "The correct answer is {label}."
std::string asserted_answer_sentence(const std::string& label);

// The correction turn sent to the critic after question and initial
// prediction. Ends with "Respond only with JSON."
std::string critique_correction_prompt(const std::string& asserted_label);

// Sent once when the critic's reply could not be parsed.
std::string critique_repair_prompt();

// "Here is your final question, make sure to learn from your past mistakes! {question}"
std::string final_question_line(const std::string& question);

// "Here is some helpful advice that will help you make your decision: {advice}"
std::string semantic_advice_tail(const std::string& advice);

// "Also, here is some additional advice to guide your response: {advice}"
std::string hybrid_advice_tail(const std::string& advice);

// Assertion / Rationale / Reflection lines.
std::string render_critique_body(const Critique& critique);

// "Question: ...\nAnswer: ...\nCritique:\n..." block used by summarization.
std::string render_training_example(const std::string& question, const std::string& answer,
                                    const Critique& critique);

std::string semantic_summary_instruction();
std::string semantic_summary_prompt(const std::vector<std::string>& example_blocks);
std::string semantic_reduce_prompt(const std::vector<std::string>& partial_summaries);

} // namespace critmem
