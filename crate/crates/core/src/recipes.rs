//! Frozen experiment presets and the qualitative verdicts they assert.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{builtin, OperatorMode, FORSAKEN_PUBLISHED_Z_STAR, MODIFIED_FORSAKEN_PUBLISHED_Z_STAR};
use crate::solver::{detect_cycling, run, SolverConfig, TrajectoryLog};

pub const Z0_GRID: [[f64; 2]; 5] = [[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [0.5, -0.5]];
pub const RECIPE_ITERATIONS: usize = 5000;
pub const CYCLING_WINDOW: usize = 1500;
pub const CYCLING_THRESHOLD: f64 = 1e-3;
pub const ENDPOINT_TOL: f64 = 1e-2;
pub const MIN_Y_SPREAD: f64 = 0.1;
pub const COMPETITIVE_ALPHA: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeName {
    Mforsaken,
    ForsakenF,
    ForsakenFalpha,
    X2yF,
    X2yFalpha,
}

impl RecipeName {
    pub const ALL: [RecipeName; 5] = [
        RecipeName::Mforsaken,
        RecipeName::ForsakenF,
        RecipeName::ForsakenFalpha,
        RecipeName::X2yF,
        RecipeName::X2yFalpha,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecipeName::Mforsaken => "mforsaken",
            RecipeName::ForsakenF => "forsaken_F",
            RecipeName::ForsakenFalpha => "forsaken_Falpha",
            RecipeName::X2yF => "x2y_F",
            RecipeName::X2yFalpha => "x2y_Falpha",
        }
    }
}

impl fmt::Display for RecipeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecipeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RecipeName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown recipe `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    ConvergesTo { point: [f64; 2], tol: f64 },
    Cycles { window: usize, threshold: f64 },
    YAxisSpread { x_tol: f64, min_spread: f64 },
}

impl Claim {
    pub fn statement(&self) -> String {
        match *self {
            Claim::ConvergesTo { point, tol } => {
                format!("converged to ({:.4}, {:.4}) ± {tol:e}", point[0], point[1])
            }
            Claim::Cycles { .. } => "cycles: true".to_string(),
            Claim::YAxisSpread { x_tol, min_spread } => format!(
                "endpoints on the y-axis (|x_out| ≤ {x_tol:e}), endpoints differ across initializations by > {min_spread}"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Panel {
    pub p: u32,
    pub lipschitz: f64,
    pub mode: OperatorMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRecipe {
    pub name: RecipeName,
    pub problem: &'static str,
    pub panels: Vec<Panel>,
    pub z0_grid: Vec<[f64; 2]>,
    pub iterations: usize,
    pub claim: Claim,
}

impl FigureRecipe {
    pub fn get(name: RecipeName) -> Self {
        let standard = OperatorMode::Standard;
        let competitive = OperatorMode::Competitive {
            alpha: COMPETITIVE_ALPHA,
        };
        let panel = |p, lipschitz, mode| Panel { p, lipschitz, mode };
        let cycles = Claim::Cycles {
            window: CYCLING_WINDOW,
            threshold: CYCLING_THRESHOLD,
        };
        let (problem, panels, claim) = match name {
            RecipeName::Mforsaken => (
                "modified_forsaken",
                vec![panel(1, 20.0, standard), panel(2, 50_000.0, standard)],
                Claim::ConvergesTo {
                    point: MODIFIED_FORSAKEN_PUBLISHED_Z_STAR,
                    tol: ENDPOINT_TOL,
                },
            ),
            RecipeName::ForsakenF => (
                "forsaken",
                vec![panel(1, 20.0, standard), panel(2, 500.0, standard)],
                cycles,
            ),
            RecipeName::ForsakenFalpha => (
                "forsaken",
                vec![panel(1, 5.0, competitive), panel(2, 500.0, competitive)],
                Claim::ConvergesTo {
                    point: FORSAKEN_PUBLISHED_Z_STAR,
                    tol: ENDPOINT_TOL,
                },
            ),
            RecipeName::X2yF => (
                "x2y",
                vec![panel(1, 20.0, standard), panel(2, 500.0, standard)],
                Claim::YAxisSpread {
                    x_tol: ENDPOINT_TOL,
                    min_spread: MIN_Y_SPREAD,
                },
            ),
            RecipeName::X2yFalpha => (
                "x2y",
                vec![panel(1, 20.0, competitive), panel(2, 500.0, competitive)],
                Claim::ConvergesTo {
                    point: [0.0, 0.0],
                    tol: ENDPOINT_TOL,
                },
            ),
        };
        Self {
            name,
            problem,
            panels,
            z0_grid: Z0_GRID.to_vec(),
            iterations: RECIPE_ITERATIONS,
            claim,
        }
    }

    pub fn config(&self, panel: &Panel, z0: [f64; 2]) -> SolverConfig {
        SolverConfig::new(panel.p, panel.lipschitz, self.iterations, z0.to_vec()).with_mode(panel.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub passed: bool,
    /// One line per run.
    pub details: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PanelResult {
    pub panel: Panel,
    pub z0s: Vec<[f64; 2]>,
    pub logs: Vec<TrajectoryLog>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct RecipeResult {
    pub recipe: FigureRecipe,
    pub panels: Vec<PanelResult>,
}

impl RecipeResult {
    pub fn passed(&self) -> bool {
        self.panels.iter().all(|p| p.verdict.passed)
    }
}

pub fn run_recipe(recipe: &FigureRecipe) -> Result<RecipeResult> {
    let problem = builtin(recipe.problem)?;
    let panels = recipe
        .panels
        .iter()
        .map(|panel| {
            let logs = recipe
                .z0_grid
                .par_iter()
                .map(|&z0| run(&problem, &recipe.config(panel, z0)))
                .collect::<Result<Vec<_>>>()?;
            let verdict = judge(&recipe.claim, &recipe.z0_grid, &logs);
            Ok(PanelResult {
                panel: *panel,
                z0s: recipe.z0_grid.clone(),
                logs,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecipeResult {
        recipe: recipe.clone(),
        panels,
    })
}

/// Evaluates `claim` on logs started from `z0s`.
pub fn judge(claim: &Claim, z0s: &[[f64; 2]], logs: &[TrajectoryLog]) -> Verdict {
    let mut details = Vec::with_capacity(logs.len());
    let passed = match *claim {
        Claim::ConvergesTo { point, tol } => {
            let target = DVector::from_column_slice(&point);
            let mut all = true;
            for (z0, log) in z0s.iter().zip(logs) {
                let dist = (&log.z_out - &target).norm();
                let ok = dist <= tol;
                all &= ok;
                details.push(format!(
                    "z0 = ({}, {}): z_out = ({:.6}, {:.6}), distance {dist:.3e} [{}]",
                    z0[0],
                    z0[1],
                    log.z_out[0],
                    log.z_out[1],
                    pass_word(ok)
                ));
            }
            all
        }
        Claim::Cycles { window, threshold } => {
            let mut all = true;
            for (z0, log) in z0s.iter().zip(logs) {
                let ok = detect_cycling(log, window, threshold);
                all &= ok;
                details.push(format!("z0 = ({}, {}): cycles: {ok} [{}]", z0[0], z0[1], pass_word(ok)));
            }
            all
        }
        Claim::YAxisSpread { x_tol, min_spread } => {
            let mut on_axis = true;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (z0, log) in z0s.iter().zip(logs) {
                let (x, y) = (log.z_out[0], log.z_out[1]);
                let ok = x.abs() <= x_tol;
                on_axis &= ok;
                lo = lo.min(y);
                hi = hi.max(y);
                details.push(format!(
                    "z0 = ({}, {}): z_out = ({x:.6}, {y:.6}) [{}]",
                    z0[0],
                    z0[1],
                    pass_word(ok)
                ));
            }
            let spread = hi - lo;
            let spread_ok = spread > min_spread;
            details.push(format!("y-endpoint spread {spread:.4} [{}]", pass_word(spread_ok)));
            on_axis && spread_ok
        }
    };
    Verdict {
        claim: claim.statement(),
        passed,
        details,
    }
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for r in RecipeName::ALL {
            assert_eq!(r.as_str().parse::<RecipeName>().unwrap(), r);
        }
        assert!("forsaken".parse::<RecipeName>().is_err());
    }

    #[test]
    fn recipes_are_frozen() {
        for r in RecipeName::ALL {
            let recipe = FigureRecipe::get(r);
            assert_eq!(recipe.z0_grid.len(), 5);
            assert_eq!(recipe.iterations, 5000);
            assert_eq!(recipe.panels.iter().map(|p| p.p).collect::<Vec<_>>(), vec![1, 2]);
            assert!(builtin(recipe.problem).is_ok());
        }
        assert_eq!(FigureRecipe::get(RecipeName::ForsakenF).claim.statement(), "cycles: true");
        assert_eq!(
            FigureRecipe::get(RecipeName::ForsakenFalpha).claim.statement(),
            "converged to (0.0780, 0.4119) ± 1e-2"
        );
    }
}
