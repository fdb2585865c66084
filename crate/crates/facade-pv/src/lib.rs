//! Record IO, LLM layout reasoning, the batch pipeline and reports on top of
//! [`facade_pv_core`].

pub mod eval;
pub mod io;
pub mod llm;
pub mod pipeline;

pub use facade_pv_core as core;
