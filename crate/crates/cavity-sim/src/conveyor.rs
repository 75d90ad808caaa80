//! Optical conveyor transport: frequency-ramp programs and atom trajectories.
//!
//! A frequency difference Δf between the two counter-propagating lattice
//! beams moves the standing wave (and the atom riding it) at v = Δf·λ/2.
//! Plans are piecewise-linear ramps of Δf, so positions integrate to exact
//! piecewise quadratics; sampled trajectories are evaluated from the closed
//! form per segment, never by accumulation.
//!
//! The atom is assumed to ride the lattice rigidly; transport loss is
//! accounted for in the transfer efficiencies, not here.

use crate::error::Error;
use crate::Result;

/// One linear ramp of the beam frequency difference.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSegment {
    /// Segment duration in seconds, > 0.
    pub duration: f64,
    /// Frequency difference at the start of the segment, Hz.
    pub detuning_start: f64,
    /// Frequency difference at the end of the segment, Hz.
    pub detuning_end: f64,
}

impl RampSegment {
    /// Constant-detuning segment.
    pub fn hold(duration: f64, detuning: f64) -> Self {
        RampSegment { duration, detuning_start: detuning, detuning_end: detuning }
    }

    /// Linear ramp between two detunings.
    pub fn ramp(duration: f64, from: f64, to: f64) -> Self {
        RampSegment { duration, detuning_start: from, detuning_end: to }
    }
}

/// A transport program: ramp segments plus a constant additive drift.
///
/// The drift models a slow systematic offset between the two rf synthesizers
/// driving the lattice AOMs; it applies for the whole duration of the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub segments: Vec<RampSegment>,
    /// Atom position at t = 0, metres (cavity centre is 0).
    pub start_position: f64,
    /// Additive systematic velocity, m/s.
    pub drift_speed: f64,
    /// Lattice wavelength, metres.
    pub lattice_wavelength: f64,
}

impl TransportPlan {
    /// Plan with no commanded motion.
    pub fn stationary(start_position: f64, lattice_wavelength: f64) -> Self {
        TransportPlan {
            segments: Vec::new(),
            start_position,
            drift_speed: 0.0,
            lattice_wavelength,
        }
    }

    /// Total program duration in seconds.
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Append a segment, returning self for chaining.
    pub fn then(mut self, segment: RampSegment) -> Self {
        self.segments.push(segment);
        self
    }

    /// Largest commanded |velocity| over the plan.
    pub fn max_speed(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.detuning_start.abs(), s.detuning_end.abs()])
            .fold(0.0f64, f64::max)
            * self.lattice_wavelength
            / 2.0
            + self.drift_speed.abs()
    }

    /// Exact (position, velocity) of the closed-form trajectory at time `t`.
    ///
    /// For t beyond the last segment the lattice holds the final detuning of
    /// zero commanded motion: only drift continues.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let half_lambda = self.lattice_wavelength / 2.0;
        let mut pos = self.start_position + self.drift_speed * t;
        let mut vel = self.drift_speed;
        let mut elapsed = 0.0;
        for seg in &self.segments {
            if t <= elapsed {
                break;
            }
            let tau = (t - elapsed).min(seg.duration);
            let slope = (seg.detuning_end - seg.detuning_start) / seg.duration;
            // ∫ v dt over the partial segment; v = (λ/2)·Δf(t).
            pos += half_lambda * (seg.detuning_start * tau + 0.5 * slope * tau * tau);
            if t < elapsed + seg.duration {
                vel += half_lambda * (seg.detuning_start + slope * tau);
            }
            elapsed += seg.duration;
        }
        (pos, vel)
    }
}

/// A sampled atom trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// (t, position, velocity) samples with strictly increasing t.
    pub samples: Vec<(f64, f64, f64)>,
    /// Spacing between samples, seconds.
    pub sample_interval: f64,
}

impl Trajectory {
    /// Total covered time.
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.0)
    }

    /// Position at time `t`, linearly interpolated between samples and
    /// clamped to the ends.
    pub fn position_at(&self, t: f64) -> f64 {
        match self.samples.binary_search_by(|s| s.0.partial_cmp(&t).unwrap()) {
            Ok(i) => self.samples[i].1,
            Err(0) => self.samples.first().map_or(0.0, |s| s.1),
            Err(i) if i >= self.samples.len() => self.samples.last().unwrap().1,
            Err(i) => {
                let (t0, x0, _) = self.samples[i - 1];
                let (t1, x1, _) = self.samples[i];
                x0 + (x1 - x0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

/// Lattice velocity from the beam frequency difference: v = Δf·λ/2.
pub fn velocity_from_detuning(delta_f: f64, lattice_wavelength: f64) -> f64 {
    delta_f * lattice_wavelength / 2.0
}

/// Sample the closed-form trajectory of a plan at a fixed interval.
///
/// The final plan time is always included as the last sample. An empty plan
/// yields a single-sample zero-motion trajectory (drift only has no time to
/// act), which is not an error.
pub fn integrate_plan(plan: &TransportPlan, sample_interval: f64) -> Result<Trajectory> {
    integrate_plan_with_tail(plan, sample_interval, 0.0)
}

/// Like [`integrate_plan`] but extends sampling `tail` seconds past the end
/// of the program (commanded motion stops; drift continues). Used for
/// hold-after-transport runs.
pub fn integrate_plan_with_tail(
    plan: &TransportPlan,
    sample_interval: f64,
    tail: f64,
) -> Result<Trajectory> {
    if sample_interval <= 0.0 || !sample_interval.is_finite() {
        return Err(Error::InvalidPlan(format!(
            "sample interval must be positive, got {sample_interval}"
        )));
    }
    if !plan.drift_speed.is_finite() {
        return Err(Error::InvalidPlan("drift speed must be finite".into()));
    }
    for (i, seg) in plan.segments.iter().enumerate() {
        if seg.duration <= 0.0 || !seg.duration.is_finite() {
            return Err(Error::InvalidPlan(format!(
                "segment {i} duration must be positive, got {}",
                seg.duration
            )));
        }
    }
    let total = plan.duration() + tail;
    let n = (total / sample_interval).floor() as usize;
    let mut samples = Vec::with_capacity(n + 2);
    for i in 0..=n {
        let t = i as f64 * sample_interval;
        let (pos, vel) = plan.state_at(t);
        samples.push((t, pos, vel));
    }
    if samples.last().map_or(true, |s| s.0 < total - 1e-15 * total.max(1.0)) {
        let (pos, vel) = plan.state_at(total);
        samples.push((total, pos, vel));
    }
    Ok(Trajectory { samples, sample_interval })
}

/// Build a triangle-wave sweep: starting `amplitude` to one side of the
/// cavity centre, the atom crosses the centre `passes` times at constant
/// speed, reversing at ±amplitude.
pub fn make_sweep_plan(
    amplitude: f64,
    speed: f64,
    passes: u32,
    lattice_wavelength: f64,
) -> Result<TransportPlan> {
    if speed <= 0.0 || !speed.is_finite() {
        return Err(Error::InvalidPlan(format!(
            "sweep speed must be positive, got {speed}"
        )));
    }
    if amplitude <= 0.0 || !amplitude.is_finite() {
        return Err(Error::InvalidPlan(format!(
            "sweep amplitude must be positive, got {amplitude}"
        )));
    }
    if passes == 0 {
        return Err(Error::InvalidPlan("sweep needs at least one pass".into()));
    }
    let detuning = 2.0 * speed / lattice_wavelength;
    let leg_time = 2.0 * amplitude / speed;
    let mut plan = TransportPlan {
        segments: Vec::with_capacity(passes as usize),
        start_position: -amplitude,
        drift_speed: 0.0,
        lattice_wavelength,
    };
    for leg in 0..passes {
        let sign = if leg % 2 == 0 { 1.0 } else { -1.0 };
        plan.segments.push(RampSegment::hold(leg_time, sign * detuning));
    }
    Ok(plan)
}
