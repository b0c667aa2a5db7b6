//! Non-parametric functional lagged regression of a sparsely observed yield
//! curve on a panel of macroeconomic series.
//!
//! The curve is modelled in warped maturity coordinates as
//! `Y_t(x) = a(x) + sum_j sum_h b_h^{(j)}(x) X_{t-h}^{(j)} + e_t(x)`,
//! and the filter is estimated in the frequency domain as
//! `B(w, x) = f_{YX}(w, x) F_X(w)^{-1}`.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cross_spectral;
pub mod error;
pub mod io;
pub mod lagreg;
pub mod model;
pub mod mv_spectral;
pub mod oracle;
pub mod pipeline;
pub mod simulate;
pub mod smoother;
pub mod warp;

pub use error::{Error, Result};
pub use model::{Config, EvalPoints, FrequencyGrid, LaggedRegressionFit, MacroPanel, MaturityGrid, SparseYieldPanel};
pub use pipeline::{analyze, Analysis, PipelineError, Stage};
pub use simulate::{simulate_lagged_regression, simulate_var1, GroundTruth, SyntheticSpec};
pub use warp::{build_warp, warp_apply, warp_inverse, Warp};
