//! Case-retrieval question answering and a what-if query; prints the
//! assembled prompt so the budgeted context is visible.

use patharchive::rag::{answer_query, what_if, RagConfig, StubLlm};
use patharchive::synth::synth_engine;

fn main() -> patharchive::Result<()> {
    let (engine, _) = synth_engine(150, 9, 256)?;
    let llm = StubLlm::echo();
    let cfg = RagConfig { context_budget: 1800, ..RagConfig::default() };

    let qa = answer_query(&engine, &llm, "cases of melanoma with pagetoid spread", 5, &cfg)?;
    println!("{}", qa.prompt.render());
    println!("~{} prompt tokens of {} available", qa.prompt.token_estimate, cfg.prompt_budget());
    println!("answer: {}\n", qa.answer);

    let case = &engine.corpus().docs()[0].clean_text;
    let hypo = what_if(&engine, &llm, case, "What if the margins were positive?", 3, &cfg)?;
    println!("what-if answer: {}", hypo.answer);
    Ok(())
}
