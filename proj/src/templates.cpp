#include "critmem/templates.hpp"

namespace critmem {

std::string asserted_answer_sentence(const std::string& label) {
    return "The correct answer is " + label + ".";
}

std::string critique_correction_prompt(const std::string& asserted_label) {
    return "The correct answer is " + asserted_label +
           ". Explain why this is the correct answer, following the following JSON format:\n"
           "{\n"
           "  correct_answer: correct_answer,\n"
           "  local_reason: Specific reasons why this answer is correct in this particular case.,\n"
           "  global_reason: General reasons why this answer is correct that can be applied to "
           "other questions.\n"
           "}.\n"
           "Respond only with JSON.";
}

std::string critique_repair_prompt() {
    return "That was not valid JSON. Respond only with JSON.";
}

std::string final_question_line(const std::string& question) {
    return "Here is your final question, make sure to learn from your past mistakes! " + question;
}

std::string semantic_advice_tail(const std::string& advice) {
    return "Here is some helpful advice that will help you make your decision: " + advice;
}

std::string hybrid_advice_tail(const std::string& advice) {
    return "Also, here is some additional advice to guide your response: " + advice;
}

std::string render_critique_body(const Critique& critique) {
    return "Assertion: " + critique.assertion + "\nRationale: " + critique.rationale +
           "\nReflection: " + critique.reflection;
}

std::string render_training_example(const std::string& question, const std::string& answer,
                                    const Critique& critique) {
    return "Question: " + question + "\nAnswer: " + answer + "\nCritique:\n" +
           render_critique_body(critique);
}

std::string semantic_summary_instruction() {
    return "Your job is to summarize a set of self-critiques made by some agent as they perform "
           "different instances of their task.  For each instance you will be shown the output of "
           "the agent, followed by the critiques made by the agent after they were told the "
           "correct answer.  Distill those critiques into a helpful summary of advice to the "
           "agent, paying particular attention to instances where the agent outputs an incorrect "
           "answer. Produce your output in a form that can be used directly as instructions to "
           "the agent. You should summarize the key points in these critiques.  Be precise and "
           "concise.  Do not repeat yourself.";
}

std::string semantic_summary_prompt(const std::vector<std::string>& example_blocks) {
    std::string prompt = semantic_summary_instruction();
    for (const auto& block : example_blocks) {
        prompt += "\n\n";
        prompt += block;
    }
    return prompt;
}

std::string semantic_reduce_prompt(const std::vector<std::string>& partial_summaries) {
    std::string prompt =
        "Your job is to combine several partial summaries of critiques into one unified summary "
        "of advice to the agent. Produce your output in a form that can be used directly as "
        "instructions to the agent. Be precise and concise. Do not repeat yourself.";
    for (std::size_t i = 0; i < partial_summaries.size(); ++i) {
        prompt += "\n\nSummary " + std::to_string(i + 1) + ":\n" + partial_summaries[i];
    }
    return prompt;
}

} // namespace critmem
