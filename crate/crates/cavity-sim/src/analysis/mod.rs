//! Trace analysis: step detection and atom counting, run averaging,
//! histogramming, and nonlinear least-squares fitting.

mod average;
mod changepoint;
mod fit;
mod peaks;

pub use average::{average_runs, AveragedTrace};
pub use changepoint::{detect_steps, detect_steps_in, estimate_snr, StepFit};
pub use fit::{
    fit_least_squares, fit_least_squares_with, moment_guess, FitModel, FitPoint, FitResult,
    FitSettings,
};
pub use peaks::{count_peaks, histogram, moving_average, resolved_histogram_peaks, Histogram};
