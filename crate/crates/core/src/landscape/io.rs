//! Line-oriented text format for landscapes.
//!
//! ```text
//! landscape v1
//! mode metropolis|explicit
//! states N
//! s <id> <H>              # one per state, id in [0,N)
//! e <i> <j> [dij dji]     # undirected edge; costs required iff mode=explicit
//! ```
//!
//! Blank lines and `#` comments are ignored. Parse errors carry the
//! one-based line number.

use std::fmt::Write as _;

use thiserror::Error;

use super::{CostMode, CostedEdge, EnergyLandscape, LandscapeError, StateId};

/// A parse failure, attributed to an input line.
#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

/// Parses the `landscape v1` text format.
pub fn parse_landscape(text: &str) -> Result<EnergyLandscape, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("").trim();
            (i + 1, content)
        })
        .filter(|(_, content)| !content.is_empty());

    let (line, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "empty input, expected 'landscape v1'"))?;
    if header != "landscape v1" {
        return Err(ParseError::new(line, format!("expected 'landscape v1', found '{header}'")));
    }

    let (line, mode_line) = lines
        .next()
        .ok_or_else(|| ParseError::new(line, "missing 'mode' line"))?;
    let mode = match mode_line.strip_prefix("mode ").map(str::trim) {
        Some("metropolis") => CostMode::Metropolis,
        Some("explicit") => CostMode::Explicit,
        Some(other) => {
            return Err(ParseError::new(
                line,
                format!("unknown mode '{other}', expected metropolis or explicit"),
            ))
        }
        None => return Err(ParseError::new(line, "expected 'mode metropolis|explicit'")),
    };

    let (line, states_line) = lines
        .next()
        .ok_or_else(|| ParseError::new(line, "missing 'states' line"))?;
    let n: usize = states_line
        .strip_prefix("states ")
        .map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ParseError::new(line, "expected 'states N'"))?;
    if n == 0 {
        return Err(ParseError::new(line, "a landscape needs at least one state"));
    }

    let mut energy: Vec<Option<f64>> = vec![None; n];
    let mut edges: Vec<CostedEdge> = Vec::new();
    let mut last_line = line;

    for (line, content) in lines {
        last_line = line;
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.first().copied() {
            Some("s") => {
                if fields.len() != 3 {
                    return Err(ParseError::new(line, "expected 's <id> <H>'"));
                }
                let id: StateId = parse_field(line, fields[1], "state id")?;
                let h: f64 = parse_field(line, fields[2], "energy")?;
                if id >= n {
                    return Err(ParseError::new(
                        line,
                        format!("state id {id} out of range (states {n})"),
                    ));
                }
                if energy[id].is_some() {
                    return Err(ParseError::new(line, format!("state {id} defined twice")));
                }
                energy[id] = Some(h);
            }
            Some("e") => {
                let (a, b, dab, dba) = match (mode, fields.len()) {
                    (CostMode::Metropolis, 3) => (
                        parse_field(line, fields[1], "state id")?,
                        parse_field(line, fields[2], "state id")?,
                        0.0,
                        0.0,
                    ),
                    (CostMode::Explicit, 5) => (
                        parse_field(line, fields[1], "state id")?,
                        parse_field(line, fields[2], "state id")?,
                        parse_field(line, fields[3], "cost")?,
                        parse_field(line, fields[4], "cost")?,
                    ),
                    (CostMode::Metropolis, _) => {
                        return Err(ParseError::new(
                            line,
                            "expected 'e <i> <j>' (no costs under metropolis mode)",
                        ))
                    }
                    (CostMode::Explicit, _) => {
                        return Err(ParseError::new(
                            line,
                            "expected 'e <i> <j> <dij> <dji>' (explicit mode)",
                        ))
                    }
                };
                edges.push(CostedEdge { a, b, delta_ab: dab, delta_ba: dba });
            }
            Some(other) => {
                return Err(ParseError::new(
                    line,
                    format!("unknown directive '{other}', expected 's' or 'e'"),
                ))
            }
            None => unreachable!("blank lines are filtered"),
        }
    }

    let energy: Vec<f64> = energy
        .into_iter()
        .enumerate()
        .map(|(id, h)| {
            h.ok_or_else(|| ParseError::new(last_line, format!("state {id} never defined")))
        })
        .collect::<Result<_, _>>()?;

    let build = match mode {
        CostMode::Metropolis => {
            EnergyLandscape::metropolis(energy, edges.iter().map(|e| (e.a, e.b)))
        }
        CostMode::Explicit => EnergyLandscape::explicit(energy, edges),
    };
    build.map_err(|e: LandscapeError| ParseError::new(last_line, e.to_string()))
}

fn parse_field<T: std::str::FromStr>(
    line: usize,
    field: &str,
    what: &str,
) -> Result<T, ParseError> {
    field
        .parse()
        .map_err(|_| ParseError::new(line, format!("invalid {what} '{field}'")))
}

/// Serializes a landscape to the `landscape v1` text format. Floats print
/// in shortest round-trip form, so parse(write(l)) reproduces l exactly.
pub fn write_landscape(l: &EnergyLandscape) -> String {
    let mut out = String::new();
    out.push_str("landscape v1\n");
    match l.cost_mode() {
        CostMode::Metropolis => out.push_str("mode metropolis\n"),
        CostMode::Explicit => out.push_str("mode explicit\n"),
    }
    let _ = writeln!(out, "states {}", l.len());
    for (id, h) in l.energies().iter().enumerate() {
        let _ = writeln!(out, "s {id} {h}");
    }
    for e in l.costed_edges() {
        match l.cost_mode() {
            CostMode::Metropolis => {
                let _ = writeln!(out, "e {} {}", e.a, e.b);
            }
            CostMode::Explicit => {
                let _ = writeln!(out, "e {} {} {} {}", e.a, e.b, e.delta_ab, e.delta_ba);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = "\
# the five-state double well
landscape v1
mode metropolis
states 5
s 0 3
s 1 10
s 2 1
s 3 8
s 4 0

e 0 1
e 1 2
e 2 3
e 3 4
";

    #[test]
    fn parses_metropolis_chain() {
        let l = parse_landscape(CHAIN).unwrap();
        assert_eq!(l.len(), 5);
        assert_eq!(l.n_edges(), 4);
        assert_eq!(l.energy(1), 10.0);
        assert_eq!(l.delta(0, 1), Some(7.0));
        assert!(l.validate().pass);
    }

    #[test]
    fn parses_explicit_costs() {
        let text = "landscape v1\nmode explicit\nstates 2\ns 0 0.5\ns 1 1.5\ne 0 1 2.0 1.0\n";
        let l = parse_landscape(text).unwrap();
        assert_eq!(l.delta(0, 1), Some(2.0));
        assert_eq!(l.delta(1, 0), Some(1.0));
        assert!(l.validate().pass);
    }

    #[test]
    fn roundtrip_is_exact() {
        let l = parse_landscape(CHAIN).unwrap();
        let text = write_landscape(&l);
        let l2 = parse_landscape(&text).unwrap();
        assert_eq!(l.energies(), l2.energies());
        assert_eq!(
            l.costed_edges().collect::<Vec<_>>(),
            l2.costed_edges().collect::<Vec<_>>()
        );
        // explicit costs with non-representable decimals round-trip too
        let e = "landscape v1\nmode explicit\nstates 2\ns 0 0.1\ns 1 0.30000000000000004\ne 0 1 0.2 0\n";
        let le = parse_landscape(e).unwrap();
        let le2 = parse_landscape(&write_landscape(&le)).unwrap();
        assert_eq!(le.energies(), le2.energies());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "landscape v1\nmode metropolis\nstates 2\ns 0 1\ns 1 zero\ne 0 1\n";
        let err = parse_landscape(bad).unwrap_err();
        assert_eq!(err.line, 5);
        assert!(err.message.contains("invalid energy"));

        let bad = "landscape v2\n";
        assert_eq!(parse_landscape(bad).unwrap_err().line, 1);

        let bad = "landscape v1\nmode thermal\nstates 2\n";
        let err = parse_landscape(bad).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unknown mode"));

        let bad = "landscape v1\nmode metropolis\nstates 2\ns 0 1\ns 1 2\ne 0 1 0.5 0.5\n";
        let err = parse_landscape(bad).unwrap_err();
        assert_eq!(err.line, 6);
        assert!(err.message.contains("no costs under metropolis"));

        let bad = "landscape v1\nmode metropolis\nstates 2\ns 0 1\ne 0 1\n";
        let err = parse_landscape(bad).unwrap_err();
        assert!(err.message.contains("state 1 never defined"));

        let bad = "landscape v1\nmode metropolis\nstates 2\ns 0 1\ns 1 2\ns 1 3\n";
        let err = parse_landscape(bad).unwrap_err();
        assert_eq!(err.line, 6);
        assert!(err.message.contains("defined twice"));
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let text = "\n# header comment\nlandscape v1\nmode metropolis # trailing\nstates 1\ns 0 0 # the only state\n";
        let l = parse_landscape(text).unwrap();
        assert_eq!(l.len(), 1);
    }
}
