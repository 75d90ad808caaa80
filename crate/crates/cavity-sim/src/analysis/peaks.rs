//! Peak counting and histogramming for sweep traces and level histograms.

/// Count peaks in a (noisy) series by hysteresis threshold crossing.
///
/// The series is first smoothed with a centred moving average of
/// `smooth_window` bins. Thresholds sit between the robust floor (lower
/// quartile) and the robust top (99.8th percentile): a peak starts when the
/// smoothed signal rises above floor + `hi_frac`·span and ends when it falls
/// back below floor + `lo_frac`·span.
pub fn count_peaks(values: &[f64], smooth_window: usize, hi_frac: f64, lo_frac: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let smoothed = moving_average(values, smooth_window.max(1));
    let floor = percentile(&smoothed, 0.25);
    let top = percentile(&smoothed, 0.998);
    let span = top - floor;
    if span <= 0.0 {
        return 0;
    }
    let hi = floor + hi_frac * span;
    let lo = floor + lo_frac * span;

    let mut peaks = 0;
    let mut inside = false;
    for &v in &smoothed {
        if !inside && v > hi {
            inside = true;
            peaks += 1;
        } else if inside && v < lo {
            inside = false;
        }
    }
    peaks
}

/// Centred moving average with shrinking windows at the edges.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(values.len());
            values[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// A fixed-width histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Lower edge of the first bin.
    pub origin: f64,
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Centre of bin `i`.
    pub fn bin_center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.bin_width
    }
}

/// Histogram `values` with the given bin width.
pub fn histogram(values: &[f64], bin_width: f64) -> Histogram {
    assert!(bin_width > 0.0, "histogram bin width must be positive");
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || !lo.is_finite() {
        return Histogram { origin: 0.0, bin_width, counts: Vec::new() };
    }
    let n_bins = (((hi - lo) / bin_width).floor() as usize + 1).max(1);
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let idx = (((v - lo) / bin_width).floor() as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Histogram { origin: lo, bin_width, counts }
}

/// Number of resolved peaks in a histogram: hysteresis counting on the
/// lightly smoothed bin counts.
pub fn resolved_histogram_peaks(hist: &Histogram) -> usize {
    let values: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    count_peaks(&values, 3, 0.08, 0.04)
}
