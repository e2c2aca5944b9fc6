//! Prompt templates used to present one prompt/answer pair to an auditing
//! model. Rendering is pure string substitution, byte-exact for fixed inputs.

use super::sample::AuditSample;

/// Which instruction layout to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptMode {
    /// Chain-of-thought layout with `<think>`/`<answer>` instructions and a
    /// JSON count slot.
    Grpo,
    /// Plain analyzer layout that stops right before the reasoning-length
    /// slot, for regression-style training.
    Regression,
}

/// Render the auditing prompt for `sample` in the requested layout, filling
/// in the problem, the solution and the two token-length numerals.
pub fn render_template(sample: &AuditSample, mode: PromptMode) -> String {
    match mode {
        PromptMode::Grpo => format!(
            "Given a <Problem> and its corresponding <Solution>, your task is to predict how \
             many tokens are consumed in the process of arriving at the final <Solution> to the \
             problem.\n\
             Generally speaking, the more complex the problem is, the more tokens are required.\n\
             \n\
             <Problem>\n{problem}\n</Problem>\n\
             \n\
             <Solution>\n{solution}\n</Solution>\n\
             \n\
             The Problem has {input_len} tokens, and the Solution has {output_len} tokens.\n\
             \n\
             Please provide a detailed chain-of-thought reasoning process and include your \
             thought process within <think> tags.\n\
             Your final answer should be enclosed within <answer> tags.\n\
             \n\
             Please return the predicted number of tokens in JSON format: \n\
             {{\"count\": int}}\n\
             \n\
             Example format:\n\
             <think> Step-by-step reasoning, including self-reflection and corrections if \
             necessary. [Limited by 1024 tokens] </think>\n\
             <answer> Summary of the thought process leading to the final token count and your \
             predicted token count in JSON format: \n\
             {{\"count\": int}} [Limited by 512 tokens]\n\
             </answer>\n\
             \n\
             Let me solve this step by step.\n",
            problem = sample.prompt,
            solution = sample.answer,
            input_len = sample.input_len,
            output_len = sample.output_len,
        ),
        PromptMode::Regression => format!(
            "You are an AI reasoning analyzer. Given a math problem and the model output \
             together with their token length, estimate how many tokens were used in the \
             detailed reasoning process that led to the answer: \n\
             \n\
             Problem: {problem}\n\
             \n\
             Answer: {solution}\n\
             \n\
             The approximate number of tokens in the reasoning process is: ",
            problem = sample.prompt,
            solution = sample.answer,
        ),
    }
}
