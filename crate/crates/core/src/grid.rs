//! Grid syntax for command-line value lists.
//!
//! A grid is a comma-separated list of items; each item is a single number
//! or a range `start:end[:step]` (step defaults to 1, both endpoints
//! inclusive). Range point `i` is `start + i·step`, so long ranges do not
//! accumulate rounding drift.

use thiserror::Error;

/// Refuse to expand ranges beyond this many points.
pub const MAX_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("empty grid")]
    Empty,
    #[error("cannot parse {0:?} as a number")]
    Number(String),
    #[error("malformed range {0:?} (expected start:end or start:end:step)")]
    Range(String),
    #[error("range {0:?} needs a positive step and end >= start")]
    Direction(String),
    #[error("range {0:?} expands to more than {MAX_POINTS} points")]
    TooLarge(String),
    #[error("{0:?} is not a non-negative integer")]
    Integer(String),
}

fn number(s: &str) -> Result<f64, GridError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| GridError::Number(s.to_string()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GridError::Number(s.to_string()))
    }
}

fn expand_range(item: &str, parts: &[&str]) -> Result<Vec<f64>, GridError> {
    let (start, end, step) = match parts {
        [a, b] => (number(a)?, number(b)?, 1.0),
        [a, b, c] => (number(a)?, number(b)?, number(c)?),
        _ => return Err(GridError::Range(item.to_string())),
    };
    if step <= 0.0 || end < start {
        return Err(GridError::Direction(item.to_string()));
    }
    // Small slack so that 0.01:0.99:0.01 keeps its last point.
    let span = (end - start) / step;
    if span >= MAX_POINTS as f64 {
        return Err(GridError::TooLarge(item.to_string()));
    }
    let count = (span + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Parses a floating-point grid.
pub fn parse_f64_grid(text: &str) -> Result<Vec<f64>, GridError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() == 1 {
            out.push(number(item)?);
        } else {
            out.extend(expand_range(item, &parts)?);
        }
        if out.len() > MAX_POINTS {
            return Err(GridError::TooLarge(text.to_string()));
        }
    }
    if out.is_empty() {
        return Err(GridError::Empty);
    }
    Ok(out)
}

/// Parses an integer grid such as `2:50` or `5,10,20`.
pub fn parse_u32_grid(text: &str) -> Result<Vec<u32>, GridError> {
    parse_f64_grid(text)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                Err(GridError::Integer(v.to_string()))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_u32_grid("5,10,20").unwrap(), vec![5, 10, 20]);
        assert_eq!(parse_u32_grid("2:5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_u32_grid("2:50").unwrap().len(), 49);
        assert_eq!(parse_u32_grid("1, 3:4").unwrap(), vec![1, 3, 4]);
        assert_eq!(parse_f64_grid("0.5").unwrap(), vec![0.5]);
    }

    #[test]
    fn float_range_keeps_last_point_without_drift() {
        let g = parse_f64_grid("0.01:0.99:0.01").unwrap();
        assert_eq!(g.len(), 99);
        assert_eq!(g[0], 0.01);
        assert!((g[98] - 0.99).abs() < 1e-12);
        for (i, v) in g.iter().enumerate() {
            assert_eq!(*v, 0.01 + i as f64 * 0.01);
        }
    }

    #[test]
    fn malformed_grids() {
        assert_eq!(parse_f64_grid(""), Err(GridError::Empty));
        assert_eq!(parse_f64_grid(" , "), Err(GridError::Empty));
        assert!(matches!(parse_f64_grid("abc"), Err(GridError::Number(_))));
        assert!(matches!(
            parse_f64_grid("1:2:3:4"),
            Err(GridError::Range(_))
        ));
        assert!(matches!(
            parse_f64_grid("5:1"),
            Err(GridError::Direction(_))
        ));
        assert!(matches!(
            parse_f64_grid("0:1:0"),
            Err(GridError::Direction(_))
        ));
        assert!(matches!(
            parse_f64_grid("0:1e9:1"),
            Err(GridError::TooLarge(_))
        ));
        assert!(matches!(parse_f64_grid("inf"), Err(GridError::Number(_))));
        assert!(matches!(parse_u32_grid("2.5"), Err(GridError::Integer(_))));
        assert!(matches!(parse_u32_grid("-1"), Err(GridError::Integer(_))));
    }
}
