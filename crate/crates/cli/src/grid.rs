//! Numbers and parameter grids as written on the command line.
//!
//! A grid is a single number, a comma list, `start:stop:xfactor` for a
//! geometric progression or `start:stop:+step` for an arithmetic one. Numbers
//! accept `base^exponent`, so `2^-3:2^-12:x0.5` is a ten-point wavelength
//! sweep.

use crate::CliError;

/// Points a single grid may expand to.
pub const MAX_POINTS: usize = 1 << 20;

const EDGE_TOL: f64 = 1e-9;

pub fn parse_number(text: &str) -> Result<f64, CliError> {
    let t = text.trim();
    let bad = || CliError::Usage(format!("not a number: {text:?}"));
    let v = match t.split_once('^') {
        Some((base, exp)) => {
            let b: f64 = base.trim().parse().map_err(|_| bad())?;
            let e: f64 = exp.trim().parse().map_err(|_| bad())?;
            b.powf(e)
        }
        None => t.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{text:?} is not finite")))
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(parse_number).collect(),
        [start, stop, step] => {
            let (a, b) = (parse_number(start)?, parse_number(stop)?);
            if let Some(f) = step.trim().strip_prefix('x') {
                geometric(a, b, parse_number(f)?)
            } else if let Some(s) = step.trim().strip_prefix('+') {
                arithmetic(a, b, parse_number(s)?)
            } else {
                Err(CliError::Usage(format!(
                    "grid step {step:?} must start with 'x' or '+'"
                )))
            }
        }
        _ => Err(CliError::Usage(format!("malformed grid {text:?}"))),
    }
}

fn geometric(a: f64, b: f64, f: f64) -> Result<Vec<f64>, CliError> {
    if a == 0.0 || a.signum() != b.signum() {
        return Err(CliError::Usage(format!(
            "geometric grid {a}..{b} must not cross or touch zero"
        )));
    }
    if a == b {
        return Ok(vec![a]);
    }
    let ratio = b / a;
    if f <= 0.0 || f == 1.0 || (ratio > 1.0) != (f > 1.0) {
        return Err(CliError::Usage(format!("factor {f} never reaches {b} from {a}")));
    }
    let steps = (ratio.ln() / f.ln() + EDGE_TOL).floor();
    expand(steps, |i| a * f.powi(i as i32))
}

fn arithmetic(a: f64, b: f64, s: f64) -> Result<Vec<f64>, CliError> {
    if a == b {
        return Ok(vec![a]);
    }
    if s == 0.0 || (b > a) != (s > 0.0) {
        return Err(CliError::Usage(format!("step {s} never reaches {b} from {a}")));
    }
    let steps = ((b - a) / s + EDGE_TOL).floor();
    expand(steps, |i| a + s * i as f64)
}

fn expand(steps: f64, at: impl Fn(usize) -> f64) -> Result<Vec<f64>, CliError> {
    if steps >= MAX_POINTS as f64 {
        return Err(CliError::Usage(format!("grid exceeds {MAX_POINTS} points")));
    }
    Ok((0..=steps as usize).map(at).collect())
}

/// A grid whose points must all be nonnegative integers.
pub fn parse_int_grid(text: &str) -> Result<Vec<u64>, CliError> {
    parse_grid(text)?
        .into_iter()
        .map(|v| {
            let r = v.round();
            if r >= 0.0 && (v - r).abs() <= EDGE_TOL * r.max(1.0) && r < u64::MAX as f64 {
                Ok(r as u64)
            } else {
                Err(CliError::Usage(format!("{v} is not a nonnegative integer")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("2^-3").unwrap(), 0.125);
        assert_eq!(parse_number(" 1e-2 ").unwrap(), 0.01);
        assert!(parse_number("two").is_err());
        assert!(parse_number("0^-1").is_err());
    }

    #[test]
    fn geometric_wavelengths() {
        let g = parse_grid("2^-3:2^-12:x0.5").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.125);
        assert_eq!(*g.last().unwrap(), 2f64.powi(-12));
    }

    #[test]
    fn geometric_sizes() {
        let g = parse_int_grid("1024:1048576:x4").unwrap();
        assert_eq!(g, vec![1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 18, 1 << 20]);
        // the stop point need not be on the grid
        assert_eq!(parse_int_grid("1:10:x3").unwrap(), vec![1, 3, 9]);
    }

    #[test]
    fn arithmetic_and_lists() {
        assert_eq!(parse_grid("0.05:0.95:+0.05").unwrap().len(), 19);
        assert_eq!(parse_grid("3:1:+-1").unwrap(), vec![3.0, 2.0, 1.0]);
        assert_eq!(parse_grid("1,2^2,9").unwrap(), vec![1.0, 4.0, 9.0]);
        assert_eq!(parse_grid("5:5:x2").unwrap(), vec![5.0]);
    }

    #[test]
    fn invalid_grids() {
        for bad in [
            "1:10:x0.5",
            "1:10:+-1",
            "1:10:+0",
            "0:1:x2",
            "1:2:3",
            "1:2",
            "1:2:3:4",
            "-1:1:x2",
            "1:1e9:+1e-3",
        ] {
            assert!(matches!(parse_grid(bad), Err(CliError::Usage(_))), "{bad}");
        }
        assert!(parse_int_grid("1.5").is_err());
        assert!(parse_int_grid("-2").is_err());
    }
}
