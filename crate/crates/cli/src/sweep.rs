//! Parameter sweeps: one simulated and predicted outcome per grid cell.

use crate::spec::{Fixed, SweepSpec};
use rayon::prelude::*;
use serde::Serialize;
use shared_effort::{predict, run_isfp, Game, IsfpError, Profile, Verdict};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const CSV_FILE: &str = "sweep.csv";
pub const SIMULATION_SVG: &str = "simulation.svg";
pub const THEORY_SVG: &str = "theory.svg";

const CSV_HEADER: [&str; 12] = [
    "axis1",
    "axis2",
    "theta",
    "n",
    "m",
    "ne_found",
    "efficiency",
    "iterations",
    "theory_verdict",
    "theory_pos",
    "theory_poa",
    "seed",
];

const CELL_PX: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub col: usize,
    pub row: usize,
    pub axis1: f64,
    pub axis2: f64,
    pub params: Fixed,
    pub ne_found: bool,
    pub efficiency: Option<f64>,
    pub iterations: Option<usize>,
    pub theory_verdict: Verdict,
    pub theory_pos: Option<f64>,
    pub theory_poa: Option<f64>,
    pub poa_lower_bound: Option<f64>,
    pub seed: u64,
    /// The equilibrium found by simulation.
    pub profile: Option<Profile>,
}

/// Values between `lo` and `hi` on equal distances, `count` of them,
/// starting at `lo` and stopping short of `hi`.
fn spread(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| lo + (hi - lo) * j as f64 / count as f64)
        .collect()
}

/// Builds the cell's game: the largest coefficient and budget are 1, the
/// second largest are the ratios, and the remaining ones are spread between
/// the floor and the ratio.
pub fn build_game(p: &Fixed) -> Result<Game, shared_effort::GameError> {
    let tail = |count: usize, ratio: f64, floor: f64| -> Vec<f64> {
        let mut v = spread(floor.min(ratio), ratio, count.saturating_sub(2));
        if count >= 2 {
            v.push(ratio);
        }
        v.push(1.0);
        v
    };
    Game::new(
        p.theta,
        tail(p.n, p.budget_ratio, p.budget_floor),
        tail(p.m, p.alpha_ratio, p.alpha_floor),
    )
}

/// Seed of a cell, derived from the sweep seed and the cell index.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Spec(#[from] crate::spec::SpecError),
    #[error("cell ({col}, {row}): {source}")]
    Game {
        col: usize,
        row: usize,
        source: shared_effort::GameError,
    },
    #[error("cell ({col}, {row}): {source}")]
    Isfp {
        col: usize,
        row: usize,
        source: IsfpError,
    },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

pub fn run_cell(spec: &SweepSpec, col: usize, row: usize) -> Result<SweepCell, SweepError> {
    let axis1 = spec.axis1.value(col);
    let axis2 = spec.axis2.value(row);
    let params = spec
        .fixed
        .with(spec.axis1.param, axis1)
        .with(spec.axis2.param, axis2);
    let game = build_game(&params).map_err(|source| SweepError::Game { col, row, source })?;
    let seed = cell_seed(spec.seed, row * spec.axis1.steps + col);
    let sim = run_isfp(&game, &spec.isfp_config(seed))
        .map_err(|source| SweepError::Isfp { col, row, source })?;
    let theory = predict(&game);
    Ok(SweepCell {
        col,
        row,
        axis1,
        axis2,
        params,
        ne_found: sim.converged,
        efficiency: sim.efficiency,
        iterations: sim.iterations,
        theory_verdict: theory.verdict,
        theory_pos: theory.pos,
        theory_poa: theory.poa,
        poa_lower_bound: theory.poa_lower_bound,
        seed,
        profile: sim.profile,
    })
}

/// Runs every cell in parallel; cells come back in row-major order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>, SweepError> {
    spec.validate()?;
    let (cols, rows) = (spec.axis1.steps, spec.axis2.steps);
    (0..cols * rows)
        .into_par_iter()
        .map(|idx| run_cell(spec, idx % cols, idx / cols))
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(cells: &[SweepCell]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for c in cells {
        w.write_record([
            c.axis1.to_string(),
            c.axis2.to_string(),
            c.params.theta.to_string(),
            c.params.n.to_string(),
            c.params.m.to_string(),
            c.ne_found.to_string(),
            opt(c.efficiency),
            c.iterations.map(|i| i.to_string()).unwrap_or_default(),
            c.theory_verdict.to_string(),
            opt(c.theory_pos),
            opt(c.theory_poa),
            c.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Gray level of a simulated cell: black without an equilibrium, otherwise
/// from dark gray (efficiency 0) to white (efficiency 1).
pub fn simulation_shade(ne_found: bool, efficiency: Option<f64>) -> u8 {
    match (ne_found, efficiency) {
        (true, Some(e)) => (64.0 + 191.0 * e.clamp(0.0, 1.0)).round() as u8,
        _ => 0,
    }
}

pub fn theory_shade(verdict: Verdict) -> u8 {
    if verdict.has_ne() {
        255
    } else {
        0
    }
}

/// Rect-grid SVG with the first axis left to right and the second bottom
/// to top.
pub fn heatmap_svg(cols: usize, rows: usize, cells: &[SweepCell], shade: impl Fn(&SweepCell) -> u8) -> String {
    let (w, h) = (cols * CELL_PX, rows * CELL_PX);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#
    )
    .unwrap();
    for c in cells {
        let g = shade(c);
        let x = c.col * CELL_PX;
        let y = (rows - 1 - c.row) * CELL_PX;
        writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="{CELL_PX}" height="{CELL_PX}" fill="rgb({g},{g},{g})"/>"#
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the CSV and both heatmaps. Every file is staged under a temporary
/// name first, so a failure leaves no partial output behind.
pub fn write_outputs(spec: &SweepSpec, cells: &[SweepCell], out: &Path) -> Result<(), SweepError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SweepError::Io { path, source }
    };
    let csv = to_csv(cells).map_err(|e| SweepError::Io {
        path: out.join(CSV_FILE),
        source: io::Error::other(e),
    })?;
    let (cols, rows) = (spec.axis1.steps, spec.axis2.steps);
    let sim = heatmap_svg(cols, rows, cells, |c| simulation_shade(c.ne_found, c.efficiency));
    let theory = heatmap_svg(cols, rows, cells, |c| theory_shade(c.theory_verdict));

    fs::create_dir_all(out).map_err(io_err(out))?;
    let files = [(CSV_FILE, csv), (SIMULATION_SVG, sim), (THEORY_SVG, theory)];
    let mut staged = Vec::new();
    for (name, body) in &files {
        let tmp = out.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, body) {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io_err(&tmp)(e));
        }
        staged.push(tmp);
    }
    for ((name, _), tmp) in files.iter().zip(&staged) {
        let dest = out.join(name);
        fs::rename(tmp, &dest).map_err(io_err(&dest))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn game_construction() {
        let p = Fixed {
            n: 4,
            m: 3,
            alpha_ratio: 0.6,
            budget_ratio: 0.5,
            ..Fixed::default()
        };
        let g = build_game(&p).unwrap();
        assert_eq!(g.alphas(), &[0.1, 0.6, 1.0]);
        let b = g.budgets();
        assert_eq!(b.len(), 4);
        assert_eq!(&b[2..], &[0.5, 1.0]);
        assert!((b[0] - 0.1).abs() < 1e-15 && (b[1] - 0.3).abs() < 1e-15);

        let g = build_game(&Fixed {
            n: 1,
            m: 1,
            ..Fixed::default()
        })
        .unwrap();
        assert_eq!((g.budgets(), g.alphas()), (&[1.0][..], &[1.0][..]));
    }

    #[test]
    fn shades() {
        assert_eq!(simulation_shade(false, None), 0);
        assert_eq!(simulation_shade(true, Some(1.0)), 255);
        assert_eq!(simulation_shade(true, Some(0.0)), 64);
        assert_eq!(theory_shade(Verdict::Exists), 255);
        assert_eq!(theory_shade(Verdict::Unknown), 0);
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(7, 0), cell_seed(7, 1));
        assert_eq!(cell_seed(7, 3), cell_seed(7, 3));
    }
}
