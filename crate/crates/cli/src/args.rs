//! Shared argument parsing: beta grids and state tokens.

use relax_core::StateId;

use crate::Failure;

/// An inverse-temperature grid, either a single value or
/// `start:stop:step` with both endpoints included (within 1e-12).
#[derive(Debug, Clone)]
pub struct BetaGrid(pub Vec<f64>);

pub fn parse_beta_grid(s: &str) -> Result<BetaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |tok: &str| -> Result<f64, String> {
        let v: f64 = tok
            .trim()
            .parse()
            .map_err(|e| format!("bad beta value '{tok}': {e}"))?;
        if !v.is_finite() {
            return Err(format!("beta value '{tok}' is not finite"));
        }
        Ok(v)
    };
    match parts.as_slice() {
        [single] => {
            let v = num(single)?;
            if v <= 0.0 {
                return Err("beta must be positive".into());
            }
            Ok(BetaGrid(vec![v]))
        }
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if start <= 0.0 {
                return Err("grid start must be positive".into());
            }
            if step <= 0.0 {
                return Err("grid step must be positive".into());
            }
            if stop + 1e-12 < start {
                return Err("grid stop lies below start".into());
            }
            let mut grid = Vec::new();
            let mut k = 0u32;
            loop {
                let v = start + f64::from(k) * step;
                if v > stop + 1e-12 {
                    break;
                }
                grid.push(v);
                k += 1;
            }
            Ok(BetaGrid(grid))
        }
        _ => Err(format!("bad grid '{s}': expected START:STOP:STEP or a single value")),
    }
}

/// A state id, with or without the `s` prefix used in reports.
pub fn parse_state(tok: &str) -> Result<StateId, Failure> {
    let digits = tok.strip_prefix('s').unwrap_or(tok);
    digits
        .parse::<StateId>()
        .map_err(|_| Failure::Input(format!("bad state id '{tok}'")))
}

pub fn parse_states(tokens: &[String]) -> Result<Vec<StateId>, Failure> {
    tokens.iter().map(|t| parse_state(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_both_endpoints() {
        let g = parse_beta_grid("1.0:2.0:0.25").unwrap().0;
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        // an endpoint reached only up to rounding is still included
        let g = parse_beta_grid("0.1:0.3:0.1").unwrap().0;
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn single_value_grid() {
        assert_eq!(parse_beta_grid("2.5").unwrap().0, vec![2.5]);
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(parse_beta_grid("0:1:0.5").is_err());
        assert!(parse_beta_grid("1:2:-1").is_err());
        assert!(parse_beta_grid("2:1:0.5").is_err());
        assert!(parse_beta_grid("1:2").is_err());
        assert!(parse_beta_grid("x").is_err());
    }

    #[test]
    fn state_tokens() {
        assert_eq!(parse_state("s12").unwrap(), 12);
        assert_eq!(parse_state("7").unwrap(), 7);
        assert!(parse_state("sx").is_err());
    }
}
