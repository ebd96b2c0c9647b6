//! Hidden-price estimation: Kalman filter, RTS smoother, EM and its robust
//! variant, and the online adaptive filter that ties them together.
//!
//! All filters model a random walk observed in noise:
//!
//! ```text
//! x_t = x_{t-1} + N(0, sigma^2)      y_t = x_t + N(0, eta^2 / w_t)
//! ```
//!
//! Lognormal dynamics are handled by running the same code on log prices.

pub mod em;
pub mod kalman;
pub mod online;
pub mod robust;
pub mod smoother;

pub use em::{em_e_step, em_m_step, run_em, truncate_window, EmConfig, EmEstimate};
pub use kalman::{kf_block_mse, kf_step, run_filter, FilterRun, KalmanState, Prior};
pub use online::{AdaptiveConfig, AdaptiveKalman, Estimation, Window};
pub use robust::{robust_weight, run_robust_em, RobustConfig};
pub use smoother::{rts_smooth, SmoothedPath};
