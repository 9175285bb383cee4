//! Interactivity-seeking agent for the environment-free self-prediction task.
//!
//! The agent observes only its own previous action. A linear value function
//! learns to predict the discounted sum of future behaviour with TD(0); a deep
//! policy is trained by meta-gradient to maximise *interactivity*, the gap
//! between the TD errors a frozen copy of the value function would incur on
//! the imagined future and those a copy that keeps learning along it incurs.

pub mod autodiff;
pub mod checkpoint;
pub mod experiment;
pub mod gradcheck;
pub mod interactivity;
pub mod models;
pub mod tensor;

pub use tensor::Tensor;
