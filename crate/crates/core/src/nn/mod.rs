//! Neural-network primitives: tensors, layers, losses, and the optimizer.

pub mod adam;
pub mod batchnorm;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod ops;
pub mod param;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use batchnorm::BatchNorm;
pub use gradcheck::{gradient_check, DifferentiableLoss};
pub use init::glorot_uniform;
pub use loss::{binary_logistic_loss, masked_softmax_cross_entropy, softmax_cross_entropy};
pub use ops::{dropout_backward, dropout_forward, relu_backward, relu_forward, Linear};
pub use param::Parameter;
pub use tensor::Tensor;
