//! Stochastic generation: seeded RNG streams, inhomogeneous Poisson photon
//! counting, atom survival, and MOT birth-death fluorescence traces.
//!
//! Every generator draws from an explicit [`RngStream`]; there is no global
//! RNG state anywhere. Identical (seed, stream) reproduce identical output
//! regardless of how many other streams run concurrently, which is what makes
//! scenario runs replayable bit for bit.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::beams::stark_shift_at;
use crate::conveyor::Trajectory;
use crate::cqed::{self, ProbeParams};
use crate::error::Error;
use crate::params::ExperimentParams;
use crate::Result;

/// Number of midpoint sub-steps used to integrate a rate function over one
/// bin. The conveyor sampling rule (≥ 4 samples across the fastest crossing)
/// keeps this adequate.
pub const RATE_SUBSTEPS: usize = 8;

/// Descriptor of an independent, reproducible random stream.
///
/// Identical (seed, stream_id) always produce the identical sequence; one
/// stream per simulated run keeps repetitions independent of execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// A time-binned detector count trace with its provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTrace {
    /// Bin width in seconds.
    pub bin_width: f64,
    /// Time of the first bin edge, seconds.
    pub t0: f64,
    /// Counts per bin.
    pub counts: Vec<u64>,
    /// Seed of the stream that generated the trace.
    pub seed: u64,
    /// Stream id within the seed.
    pub stream_id: u64,
    /// Scenario identifier carried into serialized output.
    pub scenario_id: String,
}

impl CountTrace {
    /// Start time of bin `i`.
    pub fn bin_start(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.bin_width
    }

    /// Counts as f64 values, for analysis routines.
    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Total number of counts in the trace.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Mean count rate over the whole trace, counts/s.
    pub fn mean_rate(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        self.total() as f64 / (self.counts.len() as f64 * self.bin_width)
    }

    /// Serialize as CSV: `#`-prefixed metadata comments, a header row, then
    /// one `t_start_s,counts` row per bin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# bin_width_s = {}", self.bin_width)?;
        writeln!(w, "# t0_s = {}", self.t0)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# stream = {}", self.stream_id)?;
        writeln!(w, "# scenario = {}", self.scenario_id)?;
        writeln!(w, "t_start_s,counts")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{}", self.bin_start(i), c)?;
        }
        Ok(())
    }
}

/// Phenomenological atom-loss model: exponential lifetimes selected by the
/// cavity-detuning sign and the number of trapped atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    /// Lifetime under cavity-assisted cooling (Δ_C > 0), seconds.
    pub cooling_lifetime: f64,
    /// Lifetime when the cavity is tuned to heat (Δ_C < 0), seconds.
    pub heating_lifetime: f64,
    /// Overrides by atom count: an entry (n, τ) applies to counts ≥ n; the
    /// largest applicable entry wins. Empty map means the cooling lifetime
    /// applies to every count.
    pub multiatom_lifetimes: BTreeMap<u32, f64>,
}

impl LossModel {
    /// No losses at all (infinite lifetimes).
    pub fn disabled() -> Self {
        LossModel {
            cooling_lifetime: f64::INFINITY,
            heating_lifetime: f64::INFINITY,
            multiatom_lifetimes: BTreeMap::new(),
        }
    }

    /// Lifetime for `n_atoms` trapped atoms at the given detuning sign.
    pub fn lifetime_for(&self, cooling: bool, n_atoms: u32) -> f64 {
        if !cooling {
            return self.heating_lifetime;
        }
        self.multiatom_lifetimes
            .range(..=n_atoms)
            .next_back()
            .map(|(_, &tau)| tau)
            .unwrap_or(self.cooling_lifetime)
    }
}

impl Default for LossModel {
    fn default() -> Self {
        let mut multiatom = BTreeMap::new();
        multiatom.insert(4u32, 0.8);
        LossModel {
            cooling_lifetime: 15.0,
            heating_lifetime: 0.05,
            multiatom_lifetimes: multiatom,
        }
    }
}

/// MOT fluorescence model: birth-death atom dynamics plus the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct MotModel {
    /// Atom loading rate, atoms/s.
    pub loading_rate: f64,
    /// Per-atom loss rate, 1/s (mean dwell = its inverse).
    pub per_atom_loss_rate: f64,
    /// Collected fluorescence per atom, counts/s.
    pub fluorescence_per_atom: f64,
    /// Background light level, counts/s.
    pub background_rate: f64,
    /// Camera read noise, counts (Gaussian sigma per bin).
    pub read_noise_sigma: f64,
}

impl Default for MotModel {
    // Loading and background are not measured quantities; these values are
    // chosen so a default trace statistically matches the reference
    // fluorescence record (equal step heights, 0-5 atoms, single-atom SNR
    // above 10 at 500 ms bins) and are flagged as uncalibrated in reports.
    fn default() -> Self {
        MotModel {
            loading_rate: 0.025,
            per_atom_loss_rate: 0.01,
            fluorescence_per_atom: 300.0,
            background_rate: 200.0,
            read_noise_sigma: 5.0,
        }
    }
}

/// Ground-truth atom-number timeline of a birth-death simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomTimeline {
    /// (event time, atom count after the event); starts with (0, initial).
    pub events: Vec<(f64, u32)>,
}

impl AtomTimeline {
    /// Atom count at time `t`.
    pub fn count_at(&self, t: f64) -> u32 {
        match self
            .events
            .binary_search_by(|e| e.0.partial_cmp(&t).unwrap())
        {
            Ok(i) => self.events[i].1,
            Err(0) => 0,
            Err(i) => self.events[i - 1].1,
        }
    }

    /// Time integral of the atom count over [a, b].
    pub fn integrated_count(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        let mut t = a;
        let mut n = self.count_at(a);
        for &(te, ne) in &self.events {
            if te <= a {
                continue;
            }
            if te >= b {
                break;
            }
            total += n as f64 * (te - t);
            t = te;
            n = ne;
        }
        total + n as f64 * (b - t)
    }

    /// The atom number occupying the majority of each bin; the reference
    /// against which step detection is scored.
    pub fn majority_per_bin(&self, n_bins: usize, bin_width: f64) -> Vec<u32> {
        (0..n_bins)
            .map(|i| {
                let (a, b) = (i as f64 * bin_width, (i + 1) as f64 * bin_width);
                let mut occupancy: BTreeMap<u32, f64> = BTreeMap::new();
                let mut t = a;
                let mut n = self.count_at(a);
                for &(te, ne) in &self.events {
                    if te <= a {
                        continue;
                    }
                    if te >= b {
                        break;
                    }
                    *occupancy.entry(n).or_insert(0.0) += te - t;
                    t = te;
                    n = ne;
                }
                *occupancy.entry(n).or_insert(0.0) += b - t;
                occupancy
                    .into_iter()
                    .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                    .map(|(n, _)| n)
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// Expected (mean) counts per bin for a rate function, integrated with the
/// fixed-step midpoint rule. This is the deterministic path: the sampler
/// draws Poisson variates around exactly these means.
pub fn expected_counts<F>(
    rate_fn: F,
    duration: f64,
    bin_width: f64,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    if bin_width <= 0.0 || !bin_width.is_finite() {
        return Err(Error::Input(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let n_bins = ((duration / bin_width) + 1e-9).floor().max(1.0) as usize;
    let sub = bin_width / RATE_SUBSTEPS as f64;
    let mut means = Vec::with_capacity(n_bins);
    for i in 0..n_bins {
        let start = i as f64 * bin_width;
        let mut acc = 0.0;
        for k in 0..RATE_SUBSTEPS {
            let t = start + (k as f64 + 0.5) * sub;
            let rate = rate_fn(t);
            if rate < 0.0 {
                return Err(Error::NegativeRate { rate, time_s: t });
            }
            acc += rate;
        }
        means.push(acc * sub);
    }
    Ok(means)
}

/// Draw one Poisson variate; a zero mean yields zero counts.
fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let sample: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    sample as u64
}

/// Sample a count trace from an arbitrary non-negative rate function.
///
/// Per-bin counts are Poisson with mean ∫_bin rate dt (midpoint rule,
/// [`RATE_SUBSTEPS`] sub-steps). A negative rate anywhere is a model error
/// reported with the offending time.
pub fn sample_poisson_counts<F>(
    rate_fn: F,
    duration: f64,
    bin_width: f64,
    stream: RngStream,
) -> Result<CountTrace>
where
    F: Fn(f64) -> f64,
{
    let means = expected_counts(rate_fn, duration, bin_width)?;
    let mut rng = stream.rng();
    let counts = means.iter().map(|&m| poisson_draw(m, &mut rng)).collect();
    Ok(CountTrace {
        bin_width,
        t0: 0.0,
        counts,
        seed: stream.seed,
        stream_id: stream.stream_id,
        scenario_id: String::new(),
    })
}

/// Detected signal rate of a single atom at a conveyor coordinate `x`
/// (metres from the cavity centre along the conveyor axis), excluding dark
/// counts. Combines the transverse coupling profile, the local Stark shift
/// of the conveyor lattice, the detection chain, and the phenomenological
/// signal reduction.
pub fn per_atom_signal_rate(params: &ExperimentParams, x: f64) -> f64 {
    let axial_g =
        cqed::effective_axial_coupling(&params.cavity, &params.atom, params.axial_model);
    let g = cqed::coupling_at_offset(&params.cavity, axial_g, x.abs());
    let stark = stark_shift_at(&params.conveyor_trap, x);
    let probe = ProbeParams {
        rabi_frequency: params.effective_rabi(),
        ..params.probe.clone()
    };
    let r = cqed::scattering_rate(&params.cavity, &params.atom, &probe, g, stark);
    params.chain.total_efficiency() * params.signal_reduction * r
}

/// Everything a cavity run produces besides the trace itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityRun {
    pub trace: CountTrace,
    /// Times at which an atom was lost, ascending; may be empty.
    pub loss_times: Vec<f64>,
    /// Atoms present at the end of the run.
    pub atoms_remaining: u32,
}

/// Simulate cavity emission for `n_atoms` delivered atoms following a
/// trajectory, with exponential losses and Poisson detection.
///
/// The probe (and with it both the signal and the loss clock) turns on at
/// `probe_on_time`; before that only dark counts arrive. `n_atoms` = 0 is a
/// valid dark-count-only run.
pub fn simulate_cavity_run(
    params: &ExperimentParams,
    trajectory: &Trajectory,
    loss: &LossModel,
    n_atoms: u32,
    bin_width: f64,
    probe_on_time: f64,
    stream: RngStream,
) -> Result<CavityRun> {
    let duration = trajectory.duration();
    let cooling = params.probe.cavity_probe_detuning >= 0.0;
    let mut rng = stream.rng();

    // Loss schedule first, in a fixed draw order.
    let mut loss_times = Vec::new();
    let mut remaining = n_atoms;
    let mut t = probe_on_time;
    while remaining > 0 {
        let tau = loss.lifetime_for(cooling, remaining);
        if !tau.is_finite() {
            break;
        }
        let dt: f64 = Exp::new(1.0 / tau).expect("positive lifetime").sample(&mut rng);
        t += dt;
        if t >= duration {
            break;
        }
        loss_times.push(t);
        remaining -= 1;
    }

    let rate_fn = |t: f64| {
        let dark = params.chain.dark_count_rate;
        if t < probe_on_time {
            return dark;
        }
        let alive = n_atoms - loss_times.iter().filter(|&&lt| lt <= t).count() as u32;
        dark + alive as f64 * per_atom_signal_rate(params, trajectory.position_at(t))
    };
    let means = expected_counts(rate_fn, duration, bin_width)?;
    let counts = means.iter().map(|&m| poisson_draw(m, &mut rng)).collect();

    Ok(CavityRun {
        trace: CountTrace {
            bin_width,
            t0: 0.0,
            counts,
            seed: stream.seed,
            stream_id: stream.stream_id,
            scenario_id: String::new(),
        },
        loss_times,
        atoms_remaining: remaining,
    })
}

/// Expected per-bin counts of a cavity run with all stochastic layers off:
/// no losses, no sampling, just the closed-form rate integrated per bin.
pub fn expected_cavity_counts(
    params: &ExperimentParams,
    trajectory: &Trajectory,
    n_atoms: u32,
    bin_width: f64,
    probe_on_time: f64,
) -> Result<Vec<f64>> {
    let rate_fn = |t: f64| {
        let dark = params.chain.dark_count_rate;
        if t < probe_on_time {
            return dark;
        }
        dark + n_atoms as f64 * per_atom_signal_rate(params, trajectory.position_at(t))
    };
    expected_counts(rate_fn, trajectory.duration(), bin_width)
}

/// Result of a MOT fluorescence simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct MotRun {
    pub trace: CountTrace,
    pub timeline: AtomTimeline,
}

/// Exact birth-death sampling of the MOT atom number: Poisson loading at the
/// loading rate, independent exponential loss per atom.
pub fn sample_atom_timeline(
    mot: &MotModel,
    duration: f64,
    rng: &mut ChaCha8Rng,
) -> AtomTimeline {
    let mut events = vec![(0.0, 0u32)];
    let mut t = 0.0;
    let mut n = 0u32;
    loop {
        let total = mot.loading_rate + n as f64 * mot.per_atom_loss_rate;
        if total <= 0.0 {
            break;
        }
        let dt: f64 = Exp::new(total).expect("positive total rate").sample(rng);
        t += dt;
        if t >= duration {
            break;
        }
        let p_birth = mot.loading_rate / total;
        if rng.gen::<f64>() < p_birth {
            n += 1;
        } else {
            n -= 1;
        }
        events.push((t, n));
    }
    AtomTimeline { events }
}

/// Expected camera signal per bin (before shot and read noise) for a given
/// atom-number timeline.
pub fn mot_bin_means(
    mot: &MotModel,
    timeline: &AtomTimeline,
    n_bins: usize,
    bin_width: f64,
) -> Vec<f64> {
    (0..n_bins)
        .map(|i| {
            let (a, b) = (i as f64 * bin_width, (i + 1) as f64 * bin_width);
            timeline.integrated_count(a, b) * mot.fluorescence_per_atom
                + mot.background_rate * bin_width
        })
        .collect()
}

/// Simulate a MOT fluorescence trace: birth-death atom dynamics, per-bin
/// Poisson shot noise on (n·fluorescence + background), additive Gaussian
/// read noise, rounded to the nearest non-negative integer. The ground-truth
/// timeline is returned alongside for detector validation.
pub fn simulate_mot_trace(
    mot: &MotModel,
    duration: f64,
    bin_width: f64,
    stream: RngStream,
) -> Result<MotRun> {
    if bin_width <= 0.0 || !bin_width.is_finite() {
        return Err(Error::Input(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let mut rng = stream.rng();
    let timeline = sample_atom_timeline(mot, duration, &mut rng);
    let n_bins = ((duration / bin_width) + 1e-9).floor().max(1.0) as usize;
    let means = mot_bin_means(mot, &timeline, n_bins, bin_width);

    let read_noise = if mot.read_noise_sigma > 0.0 {
        Some(Normal::new(0.0, mot.read_noise_sigma).expect("positive sigma"))
    } else {
        None
    };
    let counts = means
        .iter()
        .map(|&m| {
            let shot = poisson_draw(m, &mut rng) as f64;
            let noise = read_noise.map_or(0.0, |d| d.sample(&mut rng));
            (shot + noise).round().max(0.0) as u64
        })
        .collect();

    Ok(MotRun {
        trace: CountTrace {
            bin_width,
            t0: 0.0,
            counts,
            seed: stream.seed,
            stream_id: stream.stream_id,
            scenario_id: String::new(),
        },
        timeline,
    })
}

/// Draw a survival outcome for `n_atoms` under the given detuning sign:
/// `Some(loss time)` if the first loss happens within `duration`, `None` if
/// the atoms outlive the observation window.
pub fn sample_survival(
    loss: &LossModel,
    cooling: bool,
    n_atoms: u32,
    duration: f64,
    stream: RngStream,
) -> Option<f64> {
    let tau = loss.lifetime_for(cooling, n_atoms);
    if !tau.is_finite() {
        return None;
    }
    let mut rng = stream.rng();
    let t: f64 = Exp::new(1.0 / tau).expect("positive lifetime").sample(&mut rng);
    if t < duration {
        Some(t)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conveyor::{integrate_plan_with_tail, TransportPlan};
    use crate::stats;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn zero_rate_gives_an_all_zero_trace() {
        let trace = sample_poisson_counts(|_| 0.0, 1.0, 0.01, RngStream::new(1, 0)).unwrap();
        assert_eq!(trace.counts.len(), 100);
        assert!(trace.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn negative_rate_is_reported_with_its_time() {
        let err = sample_poisson_counts(
            |t| if t > 0.5 { -1.0 } else { 1.0 },
            1.0,
            0.1,
            RngStream::new(1, 0),
        )
        .unwrap_err();
        match err {
            Error::NegativeRate { time_s, .. } => assert!(time_s > 0.5),
            other => panic!("expected NegativeRate, got {other:?}"),
        }
    }

    // Oracle: for constant rate λ the total count over T is Poisson(λT) with
    // variance λT; the mean over R reps lies within 3·sqrt(λT/R).
    #[test]
    fn constant_rate_total_matches_the_poisson_mean() {
        let (lambda, duration) = (100.0, 1.0);
        let reps = 10_000;
        let mut total = 0.0;
        for rep in 0..reps {
            let trace =
                sample_poisson_counts(|_| lambda, duration, 0.1, RngStream::new(7, rep)).unwrap();
            total += trace.total() as f64;
        }
        let mean = total / reps as f64;
        let sigma = (lambda * duration / reps as f64).sqrt();
        assert!((mean - lambda * duration).abs() < 3.0 * sigma, "mean = {mean}");
    }

    // Oracle: a Gaussian rate pulse A·exp(−(t−t0)²/2s²) integrates to
    // A·s·√(2π) when the window spans many sigma.
    #[test]
    fn gaussian_pulse_total_matches_the_analytic_integral() {
        let (a, t0, s) = (2000.0, 0.5, 0.05);
        let rate = move |t: f64| a * (-(t - t0) * (t - t0) / (2.0 * s * s)).exp();
        let expected = a * s * (2.0 * std::f64::consts::PI).sqrt();
        let reps = 2_000;
        let mut total = 0.0;
        for rep in 0..reps {
            let trace = sample_poisson_counts(rate, 1.0, 0.01, RngStream::new(11, rep)).unwrap();
            total += trace.total() as f64;
        }
        let mean = total / reps as f64;
        let sigma = (expected / reps as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * sigma, "mean = {mean}, expected {expected}");
    }

    #[test]
    fn streams_are_deterministic_and_independent() {
        let a = sample_poisson_counts(|_| 500.0, 1.0, 0.01, RngStream::new(3, 5)).unwrap();
        let b = sample_poisson_counts(|_| 500.0, 1.0, 0.01, RngStream::new(3, 5)).unwrap();
        let c = sample_poisson_counts(|_| 500.0, 1.0, 0.01, RngStream::new(3, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lifetime_lookup_follows_the_atom_count_and_sign() {
        let loss = LossModel::default();
        assert_relative_eq!(loss.lifetime_for(true, 1), 15.0);
        assert_relative_eq!(loss.lifetime_for(true, 3), 15.0);
        // Four or more atoms fall on the short-lived branch (< 1 s).
        assert!(loss.lifetime_for(true, 4) < 1.0);
        assert!(loss.lifetime_for(true, 7) < 1.0);
        assert_relative_eq!(loss.lifetime_for(false, 1), 0.05);
    }

    #[test]
    fn disabled_losses_always_survive() {
        let loss = LossModel::disabled();
        for rep in 0..100 {
            assert!(sample_survival(&loss, true, 1, 1e6, RngStream::new(2, rep)).is_none());
        }
    }

    // Oracle: exponential CDF; survival beyond one lifetime is e^{-1}.
    #[test]
    fn survival_fraction_matches_the_exponential_cdf() {
        let loss = LossModel {
            cooling_lifetime: 15.0,
            heating_lifetime: 0.05,
            multiatom_lifetimes: BTreeMap::new(),
        };
        let reps = 10_000u64;
        let survived = (0..reps)
            .filter(|&rep| sample_survival(&loss, true, 1, 15.0, RngStream::new(17, rep)).is_none())
            .count() as f64;
        let p = survived / reps as f64;
        let expected = (-1.0f64).exp();
        let sigma = (expected * (1.0 - expected) / reps as f64).sqrt();
        assert!((p - expected).abs() < 3.0 * sigma, "survival fraction {p}");
    }

    fn held_trajectory(duration: f64) -> Trajectory {
        let plan = TransportPlan::stationary(0.0, 1064e-9);
        integrate_plan_with_tail(&plan, 1e-3, duration).unwrap()
    }

    #[test]
    fn no_atoms_means_dark_counts_only() {
        let params = ExperimentParams::default();
        let traj = held_trajectory(2.0);
        let run = simulate_cavity_run(
            &params,
            &traj,
            &LossModel::disabled(),
            0,
            1e-3,
            0.0,
            RngStream::new(5, 0),
        )
        .unwrap();
        let dark = params.chain.dark_count_rate;
        let mean = run.trace.mean_rate();
        let sigma = (dark / traj.duration()).sqrt();
        assert!((mean - dark).abs() < 4.0 * sigma, "mean rate {mean}");
        assert!(run.loss_times.is_empty());
    }

    #[test]
    fn expected_counts_are_additive_in_atom_number() {
        let params = ExperimentParams::default();
        let traj = held_trajectory(1.0);
        let one = expected_cavity_counts(&params, &traj, 1, 1e-3, 0.0).unwrap();
        let two = expected_cavity_counts(&params, &traj, 2, 1e-3, 0.0).unwrap();
        let dark_per_bin = params.chain.dark_count_rate * 1e-3;
        for (a, b) in one.iter().zip(&two) {
            assert_relative_eq!(b - dark_per_bin, 2.0 * (a - dark_per_bin), max_relative = 1e-12);
        }
    }

    #[test]
    fn sampled_two_atom_rate_doubles_the_single_atom_rate() {
        let mut params = ExperimentParams::default();
        params.chain.dark_count_rate = 0.0;
        let traj = held_trajectory(5.0);
        let loss = LossModel::disabled();
        let one = simulate_cavity_run(&params, &traj, &loss, 1, 1e-3, 0.0, RngStream::new(23, 0))
            .unwrap();
        let two = simulate_cavity_run(&params, &traj, &loss, 2, 1e-3, 0.0, RngStream::new(23, 1))
            .unwrap();
        let (r1, r2) = (one.trace.mean_rate(), two.trace.mean_rate());
        let sigma = (2.0 * r1 / traj.duration()).sqrt() * 2.0;
        assert!((r2 - 2.0 * r1).abs() < 4.0 * sigma, "r1 = {r1}, r2 = {r2}");
    }

    // With the reduction factor calibrated so a centred atom yields
    // 10 counts/ms, 1 ms bins average 10 counts.
    #[test]
    fn reduction_factor_sets_the_per_atom_count_rate() {
        let mut params = ExperimentParams::default();
        params.chain.dark_count_rate = 0.0;
        params.signal_reduction = 1.0;
        let bare = per_atom_signal_rate(&params, 0.0);
        params.signal_reduction = 10_000.0 / bare;
        assert_relative_eq!(per_atom_signal_rate(&params, 0.0), 1e4, max_relative = 1e-12);

        let traj = held_trajectory(10.0);
        let run = simulate_cavity_run(
            &params,
            &traj,
            &LossModel::disabled(),
            1,
            1e-3,
            0.0,
            RngStream::new(31, 0),
        )
        .unwrap();
        let per_bin = stats::mean(&run.trace.values());
        assert!((per_bin - 10.0).abs() < 0.2, "mean counts/bin = {per_bin}");
    }

    #[test]
    fn empty_mot_is_a_flat_background_trace() {
        let mot = MotModel {
            loading_rate: 0.0,
            ..MotModel::default()
        };
        let run = simulate_mot_trace(&mot, 50.0, 0.5, RngStream::new(9, 0)).unwrap();
        assert_eq!(run.timeline.events.len(), 1);
        let expected = mot.background_rate * 0.5;
        let mean = stats::mean(&run.trace.values());
        assert!((mean - expected).abs() < 5.0 * (expected / 100.0f64).sqrt());
    }

    // Birth-death stationarity: mean atom number approaches loading/loss.
    #[test]
    fn mot_stationary_occupancy_matches_birth_death_theory() {
        let mot = MotModel::default();
        let mut rng = RngStream::new(41, 0).rng();
        let duration = 200_000.0;
        let timeline = sample_atom_timeline(&mot, duration, &mut rng);
        // Skip the initial transient (a few dwell times).
        let occupancy = timeline.integrated_count(500.0, duration) / (duration - 500.0);
        let expected = mot.loading_rate / mot.per_atom_loss_rate;
        assert!((occupancy - expected).abs() < 0.1 * expected, "occupancy {occupancy}");
    }

    #[test]
    fn majority_per_bin_tracks_the_timeline() {
        let timeline = AtomTimeline {
            events: vec![(0.0, 0), (0.74, 1), (1.5, 2), (2.26, 1)],
        };
        assert_eq!(timeline.majority_per_bin(6, 0.5), vec![0, 0, 1, 2, 2, 1]);
        assert_eq!(timeline.count_at(0.8), 1);
        assert_relative_eq!(timeline.integrated_count(0.5, 1.0), 0.26, max_relative = 1e-12);
    }

    #[test]
    fn csv_serialization_is_stable() {
        let trace = CountTrace {
            bin_width: 0.5,
            t0: 0.0,
            counts: vec![3, 1, 4],
            seed: 42,
            stream_id: 7,
            scenario_id: "mot_counting".into(),
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# bin_width_s = 0.5\n# t0_s = 0\n# seed = 42\n# stream = 7\n# scenario = mot_counting\nt_start_s,counts\n0,3\n0.5,1\n1,4\n"
        );
    }

    // Poisson law: index of dispersion near 1 for constant-rate bins.
    #[test]
    fn dispersion_index_is_poissonian() {
        let trace =
            sample_poisson_counts(|_| 800.0, 1000.0, 0.01, RngStream::new(13, 0)).unwrap();
        assert_eq!(trace.counts.len(), 100_000);
        let d = stats::dispersion_index(&trace.values()).unwrap();
        assert!((0.9..=1.1).contains(&d), "dispersion index {d}");
    }
}
