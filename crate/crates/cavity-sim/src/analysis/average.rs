//! Pointwise averaging of repeated runs.

use crate::error::Error;
use crate::montecarlo::CountTrace;
use crate::stats;
use crate::Result;

/// Bin-by-bin mean of several aligned traces, with per-bin standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedTrace {
    pub bin_width: f64,
    pub t0: f64,
    pub mean: Vec<f64>,
    /// Standard error of the mean per bin; `None` for a single trace, where
    /// a standard error is undefined.
    pub stderr: Option<Vec<f64>>,
    /// Number of traces averaged.
    pub n_runs: usize,
}

impl AveragedTrace {
    /// Start time of bin `i`.
    pub fn bin_start(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.bin_width
    }
}

/// Average traces aligned by time: bin i with bin i.
///
/// All traces must share bin width, start time, and length.
pub fn average_runs(traces: &[CountTrace]) -> Result<AveragedTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Input("cannot average zero traces".into()))?;
    for (i, t) in traces.iter().enumerate() {
        if t.bin_width != first.bin_width
            || t.t0 != first.t0
            || t.counts.len() != first.counts.len()
        {
            return Err(Error::Input(format!(
                "trace {i} does not match trace 0 (bin width {} vs {}, t0 {} vs {}, {} vs {} bins)",
                t.bin_width,
                first.bin_width,
                t.t0,
                first.t0,
                t.counts.len(),
                first.counts.len()
            )));
        }
    }

    let n_bins = first.counts.len();
    let mut mean = Vec::with_capacity(n_bins);
    let mut stderr = Vec::with_capacity(n_bins);
    let mut column = Vec::with_capacity(traces.len());
    for bin in 0..n_bins {
        column.clear();
        column.extend(traces.iter().map(|t| t.counts[bin] as f64));
        mean.push(stats::mean(&column));
        if traces.len() > 1 {
            stderr.push(stats::standard_error(&column).unwrap_or(0.0));
        }
    }

    Ok(AveragedTrace {
        bin_width: first.bin_width,
        t0: first.t0,
        mean,
        stderr: if traces.len() > 1 { Some(stderr) } else { None },
        n_runs: traces.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{sample_poisson_counts, RngStream};
    use approx::assert_relative_eq;

    fn constant_trace(rate: f64, stream: u64) -> CountTrace {
        sample_poisson_counts(|_| rate, 10.0, 0.01, RngStream::new(55, stream)).unwrap()
    }

    #[test]
    fn single_trace_averages_to_itself_without_stderr() {
        let t = constant_trace(300.0, 0);
        let avg = average_runs(std::slice::from_ref(&t)).unwrap();
        assert_eq!(avg.mean, t.values());
        assert!(avg.stderr.is_none());
        assert_eq!(avg.n_runs, 1);
    }

    #[test]
    fn two_identical_traces_average_to_either() {
        let t = constant_trace(300.0, 1);
        let avg = average_runs(&[t.clone(), t.clone()]).unwrap();
        assert_eq!(avg.mean, t.values());
        assert!(avg.stderr.unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let a = constant_trace(300.0, 2);
        let mut b = constant_trace(300.0, 3);
        b.counts.pop();
        assert!(average_runs(&[a, b]).is_err());
        assert!(average_runs(&[]).is_err());
    }

    // Oracle: sample-variance scaling — the variance of a 17-run mean is the
    // single-run variance over 17.
    #[test]
    fn seventeen_run_average_shrinks_the_variance() {
        let traces: Vec<CountTrace> = (0..17).map(|s| constant_trace(400.0, 10 + s)).collect();
        let avg = average_runs(&traces).unwrap();
        let single_var = crate::stats::variance(&traces[0].values());
        let mean_var = crate::stats::variance(&avg.mean);
        assert_relative_eq!(mean_var * 17.0, single_var, max_relative = 0.2);
    }
}
