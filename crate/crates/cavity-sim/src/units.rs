//! Unit conventions and quantity parsing.
//!
//! Internally everything is SI: lengths in metres, times in seconds, powers
//! in watts, temperatures in kelvin. Frequencies come in two distinct kinds
//! and mixing them up is the classic failure mode of this domain, so the
//! convention is fixed here once:
//!
//! - *angular* frequencies (coupling rates, linewidths, detunings, Rabi
//!   frequencies) are stored in rad/s; configuration and display use linear
//!   MHz and convert with a factor 2π on ingest,
//! - *linear* frequencies (AOM drive differences) stay in plain Hz.
//!
//! [`parse_quantity`] implements the strict unit table used by scenario
//! configuration files: every physical value is written as a string with an
//! explicit unit suffix ("17 MHz", "34 um") and anything outside the table is
//! rejected.

use std::f64::consts::TAU;

/// Convert a linear frequency in MHz to an angular frequency in rad/s.
pub fn angular_from_mhz(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e6
}

/// Convert an angular frequency in rad/s to a linear frequency in MHz.
pub fn mhz_from_angular(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// The kind of physical quantity a configuration field expects.
///
/// The kind decides both the accepted unit suffixes and the conversion to
/// internal units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Stored in rad/s; accepts Hz/kHz/MHz/GHz and multiplies by 2π.
    AngularFrequency,
    /// Stored in Hz; accepts Hz/kHz/MHz.
    LinearFrequency,
    /// Stored in metres; accepts nm/um/mm/cm/m.
    Length,
    /// Stored in seconds; accepts us/ms/s.
    Time,
    /// Stored in watts; accepts nW/uW/mW/W.
    Power,
    /// Stored in kelvin; accepts uK/mK/K.
    Temperature,
    /// Stored in m/s; accepts um/s, mm/s, cm/s, m/s.
    Velocity,
    /// Stored in events per second; accepts counts/s, counts/ms, /s, /ms.
    Rate,
}

impl Kind {
    fn unit_table(self) -> &'static [(&'static str, f64)] {
        match self {
            Kind::AngularFrequency => &[
                ("Hz", TAU),
                ("kHz", TAU * 1e3),
                ("MHz", TAU * 1e6),
                ("GHz", TAU * 1e9),
            ],
            Kind::LinearFrequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6)],
            Kind::Length => &[
                ("nm", 1e-9),
                ("um", 1e-6),
                ("mm", 1e-3),
                ("cm", 1e-2),
                ("m", 1.0),
            ],
            Kind::Time => &[("us", 1e-6), ("ms", 1e-3), ("s", 1.0)],
            Kind::Power => &[("nW", 1e-9), ("uW", 1e-6), ("mW", 1e-3), ("W", 1.0)],
            Kind::Temperature => &[("uK", 1e-6), ("mK", 1e-3), ("K", 1.0)],
            Kind::Velocity => &[
                ("um/s", 1e-6),
                ("mm/s", 1e-3),
                ("cm/s", 1e-2),
                ("m/s", 1.0),
            ],
            Kind::Rate => &[
                ("counts/s", 1.0),
                ("counts/ms", 1e3),
                ("/s", 1.0),
                ("/ms", 1e3),
            ],
        }
    }

    /// Human-readable list of accepted unit suffixes, for error messages.
    pub fn accepted_units(self) -> String {
        self.unit_table()
            .iter()
            .map(|(u, _)| *u)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Parse a quantity string like `"17 MHz"` or `"34 um"` into internal units.
///
/// The numeric part and the unit suffix must be separated by whitespace.
/// Unknown suffixes and malformed numbers are reported, not guessed at.
pub fn parse_quantity(text: &str, kind: Kind) -> Result<f64, String> {
    let trimmed = text.trim();
    let (num_part, unit_part) = match trimmed.split_once(char::is_whitespace) {
        Some((n, u)) => (n.trim(), u.trim()),
        None => {
            return Err(format!(
                "'{trimmed}' has no unit suffix (expected one of: {})",
                kind.accepted_units()
            ))
        }
    };
    let value: f64 = num_part
        .parse()
        .map_err(|_| format!("'{num_part}' is not a number"))?;
    if !value.is_finite() {
        return Err(format!("'{num_part}' is not finite"));
    }
    for (unit, scale) in kind.unit_table() {
        if *unit == unit_part {
            return Ok(value * scale);
        }
    }
    Err(format!(
        "unknown unit '{unit_part}' (expected one of: {})",
        kind.accepted_units()
    ))
}
