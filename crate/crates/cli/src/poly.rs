//! `poly`: quasi-square decomposition of an area and, on request, an
//! exhaustive sweep over all connected shapes of that area.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use relax_core::polyomino::{enumerate_exhaustive, minimal_shape, EnumClass, ShapeCase};
use serde_json::json;

use crate::emit::Sink;
use crate::manifest::RunManifest;
use crate::{CmdResult, Failure};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolyFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct PolyArgs {
    /// Area of the shape.
    pub n: usize,
    /// Enumerate every connected shape of this area and report the
    /// perimeter minimum over the stream.
    #[arg(long)]
    pub enumerate: bool,
    #[arg(long, value_enum, default_value_t = PolyFormat::Text)]
    pub format: PolyFormat,
    /// Directory for output files; defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: PolyArgs) -> CmdResult {
    let manifest = RunManifest::new(
        "poly",
        json!({
            "n": args.n,
            "enumerate": args.enumerate,
            "format": match args.format {
                PolyFormat::Text => "text",
                PolyFormat::Json => "json",
            },
        }),
        None,
    );

    let (shape, canonical) = minimal_shape(args.n)?;
    let label = match shape.case {
        ShapeCase::Rectangular => "i",
        ShapeCase::Square => "ii",
    };
    let art = ascii_art(canonical.cells());

    let enumeration = if args.enumerate {
        let shapes = enumerate_exhaustive(args.n, EnumClass::Connected)?;
        let stream_min = shapes
            .iter()
            .map(relax_core::polyomino::Polyomino::perimeter)
            .min()
            .expect("area is positive, so the stream is non-empty");
        let minimizers = shapes.iter().filter(|p| p.perimeter() == stream_min).count();
        if stream_min != shape.min_perimeter {
            return Err(Failure::Analysis(format!(
                "closed-form perimeter {} disagrees with the enumerated minimum {stream_min}",
                shape.min_perimeter
            )));
        }
        Some(json!({
            "count": shapes.len(),
            "min_perimeter": stream_min,
            "minimizers": minimizers,
        }))
    } else {
        None
    };

    let sink = Sink::new(args.out)?;
    match args.format {
        PolyFormat::Json => {
            let payload = json!({
                "shape": shape,
                "case_label": label,
                "cells": canonical.cells(),
                "art": art,
                "enumeration": enumeration,
            });
            sink.json("poly", &payload)?;
        }
        PolyFormat::Text => {
            let mut body = format!(
                "area {}: case {label} (s = {}, k = {}), minimal perimeter {}\n\n",
                shape.n, shape.s, shape.k, shape.min_perimeter
            );
            for line in &art {
                body.push_str(line);
                body.push('\n');
            }
            if let Some(e) = &enumeration {
                body.push_str(&format!(
                    "\nconnected shapes of area {}: {} total, perimeter minimum {} attained by {}\n",
                    shape.n, e["count"], e["min_perimeter"], e["minimizers"]
                ));
            }
            sink.text("poly", &body)?;
        }
    }
    sink.manifest("poly", &manifest)
}

/// Draw cells as `#` on a grid, top row first.
fn ascii_art(cells: &[(i32, i32)]) -> Vec<String> {
    let min_x = cells.iter().map(|c| c.0).min().unwrap_or(0);
    let max_x = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let min_y = cells.iter().map(|c| c.1).min().unwrap_or(0);
    let max_y = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let width = (max_x - min_x + 1) as usize;
    let mut rows = vec![vec![' '; width]; (max_y - min_y + 1) as usize];
    for &(x, y) in cells {
        rows[(max_y - y) as usize][(x - min_x) as usize] = '#';
    }
    rows.into_iter()
        .map(|r| r.into_iter().collect::<String>().trim_end().to_string())
        .collect()
}
