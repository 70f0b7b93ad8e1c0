//! Benchmark objectives: a two-dimensional toy problem, MRF image denoising
//! and inpainting mask optimization.

pub mod compression;
pub mod conv;
pub mod metrics;
pub mod mrf;
pub mod noise;
pub mod toy;

pub use compression::{compression_f_grad, compression_reconstruct, CompressionModel};
pub use conv::{dct_basis, dct_filter_bank, Filter};
pub use metrics::{mask_density, mse, DEFAULT_DENSITY_EPS};
pub use mrf::{
    filter_operator_norm, mrf_f_grad, mrf_lipschitz_bound, mrf_model, DataTerm, MrfModel, MrfPrior,
    DEFAULT_LAMBDA_L1, DEFAULT_LAMBDA_L2, DEFAULT_MRF_LIPSCHITZ,
};
pub use noise::{add_noise, salt_pepper_count, NoiseSpec};
pub use toy::{toy_f_grad, ToyProblem, ToySmooth};
