//! Small fully connected networks with exact reverse-mode gradients.

mod activation;
mod actor;
mod mlp;

pub use activation::{gelu, gelu_prime, Activation};
pub use actor::{actor_forward, actor_forward_into, ActionBounds};
pub use mlp::{EvalTape, LayerSpec, MlpParams, MlpShape};
