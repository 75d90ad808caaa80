//! Closed-form cavity-QED physics.
//!
//! Position-dependent atom-cavity coupling for the TEM00 mode, the rate at
//! which a driven atom scatters photons into the cavity, the cooperativity,
//! and the photon detection chain. Everything here is a pure function of its
//! value-type inputs, exact to machine precision; all stochastic layers live
//! in [`crate::montecarlo`].
//!
//! Angular-frequency fields are in rad/s throughout (see [`crate::units`]).

use std::f64::consts::TAU;

/// Atomic transition parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomParams {
    /// Transition wavelength in metres (D2 line, 780 nm).
    pub transition_wavelength: f64,
    /// Full natural linewidth γ in rad/s.
    pub gamma: f64,
    /// Free-text label of the driven hyperfine transition; documentation only.
    pub hyperfine_label: String,
}

/// Optical cavity parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityParams {
    /// Maximum atom-cavity coupling rate g0 in rad/s.
    pub g0: f64,
    /// Cavity half-linewidth κ in rad/s.
    pub kappa: f64,
    /// TEM00 mode waist in metres.
    pub mode_waist: f64,
    /// Mirror separation in metres.
    pub cavity_length: f64,
    /// Total round-trip losses in parts per million.
    pub total_losses_ppm: f64,
}

/// Probe drive parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams {
    /// Rabi frequency Ω per beam in rad/s.
    pub rabi_frequency: f64,
    /// Bare probe-atom detuning ω0 − ωp in rad/s, positive when the probe is
    /// red of the unshifted atomic transition.
    pub probe_atom_detuning_bare: f64,
    /// Cavity-probe detuning Δ_C = ωc − ωp in rad/s; Δ_C > 0 cools.
    pub cavity_probe_detuning: f64,
}

/// Ordered chain of detection-efficiency stages plus the dark-count floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionChain {
    /// Per-stage efficiencies, each in [0, 1]; total efficiency is the product.
    pub stage_efficiencies: Vec<f64>,
    /// Detector dark counts per second.
    pub dark_count_rate: f64,
}

impl DetectionChain {
    /// Product of all stage efficiencies.
    pub fn total_efficiency(&self) -> f64 {
        self.stage_efficiencies.iter().product()
    }
}

/// Atom position in the cavity's cylindrical coordinate system.
///
/// `z` runs along the cavity axis; `rho` is the transverse radial offset.
/// The conveyor axis lies in the transverse plane, so transport changes `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    /// Coordinate along the cavity axis in metres.
    pub z: f64,
    /// Transverse radial coordinate in metres, `rho >= 0`.
    pub rho: f64,
}

/// How to resolve the axial standing-wave phase of a trapped atom.
///
/// The conveyor lattice (1064 nm) is incommensurate with the cavity standing
/// wave (780 nm), so the axial phase at which an atom comes to rest is not
/// controlled. `FixedZ` pins it to a configured coordinate; `UniformAverage`
/// replaces cos(kz) by its root mean square over a period, 1/√2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxialModel {
    FixedZ { z: f64 },
    UniformAverage,
}

/// Coupling rate g(r) of the TEM00 mode at a given position:
/// g0 · cos(kz) · exp(−ρ²/w²), with k = 2π / transition wavelength.
pub fn coupling_at(cavity: &CavityParams, atom: &AtomParams, pos: &Position) -> f64 {
    let k = TAU / atom.transition_wavelength;
    let axial = (k * pos.z).cos();
    let transverse = (-(pos.rho * pos.rho) / (cavity.mode_waist * cavity.mode_waist)).exp();
    cavity.g0 * axial * transverse
}

/// Effective axial coupling under the chosen axial model, at rho = 0.
pub fn effective_axial_coupling(
    cavity: &CavityParams,
    atom: &AtomParams,
    axial_model: AxialModel,
) -> f64 {
    match axial_model {
        AxialModel::FixedZ { z } => coupling_at(cavity, atom, &Position { z, rho: 0.0 }),
        AxialModel::UniformAverage => cavity.g0 / std::f64::consts::SQRT_2,
    }
}

/// Coupling at a transverse offset `rho`, with the axial phase already
/// resolved into `axial_g` (see [`effective_axial_coupling`]).
pub fn coupling_at_offset(cavity: &CavityParams, axial_g: f64, rho: f64) -> f64 {
    axial_g * (-(rho * rho) / (cavity.mode_waist * cavity.mode_waist)).exp()
}

/// Rate at which a single driven atom scatters photons into the cavity mode:
///
/// R = 2κ · g² / (Δ_C² + κ²) · Ω² / (Δ_a² + γ²),
///
/// with Δ_a = (ω0 − ωp) + Δ_S assembled from the bare probe-atom detuning and
/// the supplied Stark shift, and γ the full natural linewidth. Exact
/// closed-form evaluation in photons per second; no approximation.
pub fn scattering_rate(
    cavity: &CavityParams,
    atom: &AtomParams,
    probe: &ProbeParams,
    g: f64,
    stark_shift: f64,
) -> f64 {
    let delta_c = probe.cavity_probe_detuning;
    let delta_a = probe.probe_atom_detuning_bare + stark_shift;
    let cavity_lorentzian = (g * g) / (delta_c * delta_c + cavity.kappa * cavity.kappa);
    let atom_lorentzian = (probe.rabi_frequency * probe.rabi_frequency)
        / (delta_a * delta_a + atom.gamma * atom.gamma);
    2.0 * cavity.kappa * cavity_lorentzian * atom_lorentzian
}

/// Detected count rate: (∏ stage efficiencies) · R + dark counts.
pub fn detected_rate(scatter_rate: f64, chain: &DetectionChain) -> f64 {
    chain.total_efficiency() * scatter_rate + chain.dark_count_rate
}

/// Single-atom cooperativity C = g0² / (κ · γ/2).
pub fn cooperativity(cavity: &CavityParams, atom: &AtomParams) -> f64 {
    (cavity.g0 * cavity.g0) / (cavity.kappa * atom.gamma / 2.0)
}
