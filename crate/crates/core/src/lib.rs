pub mod asr_sim;
pub mod corpus;
pub mod harness;
pub mod metrics;
pub mod neural;
pub mod subword;
