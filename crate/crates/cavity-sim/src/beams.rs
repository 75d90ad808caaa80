//! Gaussian-beam propagation and optical dipole-trap models.
//!
//! The conveyor and loading lattices are described by their focus waist,
//! wavelength, and power. Trap depth is a calibrated input (the depth at
//! focus for the quoted power) and scales along the axis as 1/w(z)²; the
//! light shift of the probed transition is linear in the local depth with a
//! single calibration pair. No ab-initio polarizability computation.

use crate::error::Error;
use crate::Result;
use std::f64::consts::PI;

/// A focused Gaussian beam.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBeam {
    /// Wavelength in metres.
    pub wavelength: f64,
    /// 1/e² intensity radius at the focus, metres.
    pub waist_at_focus: f64,
    /// Optical power in watts.
    pub power: f64,
    /// Focus coordinate along the propagation axis, metres.
    pub focus_position: f64,
}

impl GaussianBeam {
    /// Rayleigh range z_R = π·w0²/λ.
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist_at_focus * self.waist_at_focus / self.wavelength
    }
}

/// A 1-D optical lattice trap formed from a Gaussian beam.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeTrap {
    pub beam: GaussianBeam,
    /// Trap depth at the beam focus, kelvin (U/k_B).
    pub depth_at_focus: f64,
    /// Light shift per unit depth, rad/s per kelvin.
    pub stark_shift_per_depth: f64,
}

impl LatticeTrap {
    /// Build a trap from one (depth, shift) calibration pair at the focus.
    pub fn with_stark_calibration(beam: GaussianBeam, depth_at_focus: f64, shift_at_focus: f64) -> Self {
        LatticeTrap {
            beam,
            depth_at_focus,
            stark_shift_per_depth: shift_at_focus / depth_at_focus,
        }
    }
}

/// Beam radius w(z) = w0·√(1 + ((z − z_f)/z_R)²).
pub fn beam_radius_at(beam: &GaussianBeam, z: f64) -> f64 {
    let rel = (z - beam.focus_position) / beam.rayleigh_range();
    beam.waist_at_focus * (1.0 + rel * rel).sqrt()
}

/// Trap depth along the axis, U(z) = U0 · (w0/w(z))².
pub fn trap_depth_at(trap: &LatticeTrap, z: f64) -> f64 {
    let w = beam_radius_at(&trap.beam, z);
    let ratio = trap.beam.waist_at_focus / w;
    trap.depth_at_focus * ratio * ratio
}

/// Light shift of the probed transition at `z`, linear in the local depth.
pub fn stark_shift_at(trap: &LatticeTrap, z: f64) -> f64 {
    trap.stark_shift_per_depth * trap_depth_at(trap, z)
}

/// Atom-transfer stages with measured success probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferStage {
    /// MOT into the loading lattice.
    MotToLattice,
    /// MOT all the way into the cavity mode (overall).
    MotToCavity,
}

impl TransferStage {
    /// Parse a configuration label.
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "mot_to_lattice" => Ok(TransferStage::MotToLattice),
            "mot_to_cavity" => Ok(TransferStage::MotToCavity),
            other => Err(Error::Input(format!(
                "unknown transfer stage '{other}' (expected mot_to_lattice or mot_to_cavity)"
            ))),
        }
    }
}

/// Per-stage Bernoulli transfer probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferEfficiencies {
    pub mot_to_lattice: f64,
    pub mot_to_cavity: f64,
}

impl TransferEfficiencies {
    /// Success probability for the given stage.
    pub fn transfer_efficiency(&self, stage: TransferStage) -> f64 {
        match stage {
            TransferStage::MotToLattice => self.mot_to_lattice,
            TransferStage::MotToCavity => self.mot_to_cavity,
        }
    }
}
