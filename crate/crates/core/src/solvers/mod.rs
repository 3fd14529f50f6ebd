//! Deconvolution algorithms: a Wiener filter bank with linear expansion of
//! thresholds, the iterative VST-plus-denoiser scheme, and feature-space HQS.

mod bank;
mod configure;
mod fio;
mod vstp;
mod wiener_let;

pub use bank::{feature_aggregate, BankSpectra, FilterBank, Stencil, AGGREGATION_EPS};
pub use configure::{
    SolveContext, SolverKind, SolverSpec, DEFAULT_FIO_ITERATIONS, DEFAULT_LET_LAMBDAS, DEFAULT_LET_THRESHOLD,
    DEFAULT_TV_ONLY_STRENGTH, DEFAULT_VSTP_ITERATIONS, DEFAULT_VSTP_STRENGTH, DEFAULT_VSTP_WIENER_LAMBDA,
    DEFAULT_WIENER_LAMBDA, DEFAULT_WIENER_TV_STRENGTH,
};
pub use fio::{solve_fio, solve_fio_traced, FeatureOrder, FioConfig, FioTrace, HqsSchedule};
pub use vstp::{default_weights, solve_vstp, VstpConfig};
pub use wiener_let::{solve_wiener_let, LetConfig, LetEstimate, WeightMode};
