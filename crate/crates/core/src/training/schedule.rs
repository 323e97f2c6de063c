use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Weight of the classification term in the guidance loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    /// Linear annealing `1 - e / (E + 1)`.
    Adaptive,
    Constant(f64),
    /// `alpha = 0`.
    None,
}

impl fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaMode::Adaptive => f.write_str("adaptive"),
            AlphaMode::Constant(c) => write!(f, "constant:{c}"),
            AlphaMode::None => f.write_str("none"),
        }
    }
}

impl FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(AlphaMode::Adaptive),
            "none" => Ok(AlphaMode::None),
            "constant" => Ok(AlphaMode::Constant(0.7)),
            _ => {
                let c = s
                    .strip_prefix("constant:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|c| (0.0..=1.0).contains(c))
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "alpha mode {s:?}: expected adaptive, none, constant or constant:<0..1>"
                        ))
                    })?;
                Ok(AlphaMode::Constant(c))
            }
        }
    }
}

/// Whether epoch indices passed to the schedule start at 1 or 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochOrigin {
    One,
    Zero,
}

impl FromStr for EpochOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "one" => Ok(EpochOrigin::One),
            "0" | "zero" => Ok(EpochOrigin::Zero),
            _ => Err(Error::Config(format!("epoch origin {s:?}: expected 0 or 1"))),
        }
    }
}

impl fmt::Display for EpochOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpochOrigin::One => "1",
            EpochOrigin::Zero => "0",
        })
    }
}

/// Schedule value for 1-indexed epoch `e` of `total`.
pub fn alpha(e: usize, total: usize, mode: AlphaMode) -> Result<f64> {
    if total == 0 || e == 0 || e > total {
        return Err(Error::InvalidInput(format!(
            "epoch {e} outside 1..={total}"
        )));
    }
    Ok(raw(e, total, mode))
}

fn raw(e: usize, total: usize, mode: AlphaMode) -> f64 {
    match mode {
        AlphaMode::Adaptive => 1.0 - e as f64 / (total as f64 + 1.0),
        AlphaMode::Constant(c) => c,
        AlphaMode::None => 0.0,
    }
}

/// Schedule value for the `epoch`-th (1-based loop counter) epoch, reading
/// the schedule's epoch index under `origin`.
pub fn alpha_for_epoch(epoch: usize, total: usize, mode: AlphaMode, origin: EpochOrigin) -> Result<f64> {
    match origin {
        EpochOrigin::One => alpha(epoch, total, mode),
        EpochOrigin::Zero => {
            alpha(epoch, total, mode)?;
            Ok(raw(epoch - 1, total, mode))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_endpoints() {
        assert!((alpha(1, 10, AlphaMode::Adaptive).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        assert!((alpha(1, 10, AlphaMode::Adaptive).unwrap() - 0.909091).abs() < 1e-6);
        assert!((alpha(10, 10, AlphaMode::Adaptive).unwrap() - 1.0 / 11.0).abs() < 1e-15);
        assert!((alpha(10, 10, AlphaMode::Adaptive).unwrap() - 0.090909).abs() < 1e-6);
    }

    #[test]
    fn constant_and_none() {
        for e in 1..=10 {
            assert_eq!(alpha(e, 10, AlphaMode::Constant(0.7)).unwrap(), 0.7);
            assert_eq!(alpha(e, 10, AlphaMode::None).unwrap(), 0.0);
        }
        assert_eq!("constant".parse::<AlphaMode>().unwrap(), AlphaMode::Constant(0.7));
        assert_eq!("constant:0.25".parse::<AlphaMode>().unwrap(), AlphaMode::Constant(0.25));
        assert!("constant:2".parse::<AlphaMode>().is_err());
        for m in [AlphaMode::Adaptive, AlphaMode::None, AlphaMode::Constant(0.7)] {
            assert_eq!(m.to_string().parse::<AlphaMode>().unwrap(), m);
        }
    }

    #[test]
    fn out_of_range_epochs() {
        assert!(alpha(0, 10, AlphaMode::Adaptive).is_err());
        assert!(alpha(11, 10, AlphaMode::Adaptive).is_err());
        assert!(alpha(1, 0, AlphaMode::Adaptive).is_err());
    }

    #[test]
    fn zero_origin_shifts_by_one() {
        assert_eq!(alpha_for_epoch(1, 10, AlphaMode::Adaptive, EpochOrigin::Zero).unwrap(), 1.0);
        assert!(
            (alpha_for_epoch(10, 10, AlphaMode::Adaptive, EpochOrigin::Zero).unwrap() - 2.0 / 11.0).abs()
                < 1e-15
        );
    }
}
