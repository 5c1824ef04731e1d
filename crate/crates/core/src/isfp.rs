//! Fictitious play over the continuous strategy simplex.
//!
//! Every player best responds to the others' averaged strategies, and the
//! averages are updated with weight `α`:
//! `X(t+1) = (α·t·X(t) + br) / (α·t + 1)`. With `α = 1` this is the classic
//! running average, with `α = 0` it is plain best-response dynamics.

use crate::bestresponse::{
    best_response_2p, best_response_grid, tie_tol, BrError, Maximizer, Responder,
};
use crate::equilibrium::{efficiency, verify_ne_eps, EqError, VerifyMode, NE_EPS};
use crate::game::{Game, Profile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsfpError {
    #[error("player {player} has no best response (supremum not attained)")]
    NoBestResponse { player: usize },
    #[error(transparent)]
    BestResponse(#[from] BrError),
    #[error(transparent)]
    Verify(#[from] EqError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("writing trace: {0}")]
    Trace(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefState {
    pub avg: Profile,
    /// Number of actions averaged so far, at least 1.
    pub t: u64,
    pub alpha_weight: f64,
}

impl BeliefState {
    pub fn new(avg: Profile, alpha_weight: f64) -> Self {
        BeliefState {
            avg,
            t: 1,
            alpha_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsfpConfig {
    pub max_iterations: usize,
    pub restarts: usize,
    /// Averaging weights, used by restarts in turn.
    pub alpha_weights: Vec<f64>,
    pub seed: u64,
    pub ne_eps: f64,
    /// Grid resolution for games with other than two projects.
    pub grid_resolution: u64,
}

impl Default for IsfpConfig {
    fn default() -> Self {
        IsfpConfig {
            max_iterations: 50,
            restarts: 45,
            alpha_weights: vec![1.0, 0.0],
            seed: 0,
            ne_eps: NE_EPS,
            grid_resolution: 100,
        }
    }
}

impl IsfpConfig {
    pub fn validate(&self) -> Result<(), IsfpError> {
        if self.alpha_weights.is_empty() {
            return Err(IsfpError::Config("alpha_weights must be non-empty".into()));
        }
        if let Some(a) = self
            .alpha_weights
            .iter()
            .find(|a| !(a.is_finite() && **a >= 0.0))
        {
            return Err(IsfpError::Config(format!(
                "alpha weights must be finite and non-negative, got {a}"
            )));
        }
        if !(self.ne_eps.is_finite() && self.ne_eps >= 0.0) {
            return Err(IsfpError::Config(format!(
                "ne_eps must be finite and non-negative, got {}",
                self.ne_eps
            )));
        }
        if self.grid_resolution == 0 {
            return Err(IsfpError::Config("grid_resolution must be at least 1".into()));
        }
        Ok(())
    }

    /// Best-response and verification mode used for `game`.
    pub fn mode_for(&self, game: &Game) -> VerifyMode {
        if game.num_projects() == 2 {
            VerifyMode::Exact
        } else {
            VerifyMode::Grid(self.grid_resolution)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RestartOutcome {
    Converged { iterations: usize },
    NoBestResponse { iteration: usize, player: usize },
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartLog {
    pub restart: usize,
    pub alpha_weight: f64,
    pub outcome: RestartOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsfpResult {
    pub converged: bool,
    /// The certified profile of the first successful restart.
    pub profile: Option<Profile>,
    /// Steps taken by the successful restart.
    pub iterations: Option<usize>,
    pub efficiency: Option<f64>,
    pub restart: Option<usize>,
    pub log: Vec<RestartLog>,
}

/// Point of a maximizer closest to `target` in the max norm.
fn closest_on(max: &Maximizer, target: &[f64], resp: &Responder, sup: f64) -> Vec<f64> {
    let (from, to, from_closed, to_closed) = match max {
        Maximizer::Point(p) => return p.clone(),
        Maximizer::Segment {
            from,
            to,
            from_closed,
            to_closed,
        } => (from, to, *from_closed, *to_closed),
    };
    let at = |s: f64| -> Vec<f64> {
        from.iter()
            .zip(to)
            .map(|(a, b)| a + s * (b - a))
            .collect()
    };
    let dist = |s: f64| -> f64 {
        at(s)
            .iter()
            .zip(target)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    // each |c_ω + s·d_ω| is linear on either side of its zero; the max is
    // minimized at a zero, a crossing of two terms, or an end
    let c: Vec<f64> = from.iter().zip(target).map(|(f, a)| f - a).collect();
    let d: Vec<f64> = from.iter().zip(to).map(|(f, t)| t - f).collect();
    let mut cand = vec![0.0, 1.0];
    for w in 0..c.len() {
        if d[w] != 0.0 {
            cand.push(-c[w] / d[w]);
        }
        for v in w + 1..c.len() {
            for sign in [1.0, -1.0] {
                let den = d[w] - sign * d[v];
                if den != 0.0 {
                    cand.push((sign * c[v] - c[w]) / den);
                }
            }
        }
    }
    let mut best = (f64::INFINITY, 0.5);
    for s in cand {
        let s = s.clamp(0.0, 1.0);
        let dd = dist(s);
        if dd < best.0 {
            best = (dd, s);
        }
    }
    let mut s = best.1;
    const NUDGE: f64 = 1e-6;
    if s <= NUDGE && !from_closed {
        s = NUDGE;
    }
    if s >= 1.0 - NUDGE && !to_closed {
        s = 1.0 - NUDGE;
    }
    let point = at(s);
    if resp.utility(&point) >= sup - tie_tol(sup) {
        point
    } else {
        max.representative()
    }
}

/// Best response of `player` to the averaged profile, tie-broken toward the
/// player's own averaged strategy.
fn chosen_response(
    game: &Game,
    avg: &Profile,
    player: usize,
    mode: VerifyMode,
) -> Result<Vec<f64>, IsfpError> {
    let br = match mode {
        VerifyMode::Exact => best_response_2p(game, avg, player)?,
        VerifyMode::Grid(r) => best_response_grid(game, avg, player, r)?,
    };
    if !br.attained {
        return Err(IsfpError::NoBestResponse { player });
    }
    let resp = Responder::new(game, avg, player)?;
    let own = avg.row(player);
    br.maximizers
        .iter()
        .map(|m| closest_on(m, own, &resp, br.sup_value))
        .map(|p| {
            let d = p
                .iter()
                .zip(own)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (d, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .ok_or(IsfpError::NoBestResponse { player })
}

/// One simultaneous update of every player's average.
pub fn isfp_step(
    game: &Game,
    belief: &BeliefState,
    mode: VerifyMode,
) -> Result<BeliefState, IsfpError> {
    let responses = (0..game.num_players())
        .map(|i| chosen_response(game, &belief.avg, i, mode))
        .collect::<Result<Vec<_>, _>>()?;
    let w = belief.alpha_weight * belief.t as f64;
    let rows = belief
        .avg
        .rows()
        .iter()
        .zip(&responses)
        .map(|(x, br)| {
            x.iter()
                .zip(br)
                .map(|(a, b)| (w * a + b) / (w + 1.0))
                .collect()
        })
        .collect();
    Ok(BeliefState {
        avg: Profile::from_rows_unchecked(rows),
        t: belief.t + 1,
        alpha_weight: belief.alpha_weight,
    })
}

/// Whether the averaged profile is an equilibrium within `eps`.
pub fn detect_ne(game: &Game, belief: &BeliefState, eps: f64) -> bool {
    let mode = IsfpConfig::default().mode_for(game);
    detect_ne_mode(game, &belief.avg, mode, eps)
}

pub fn detect_ne_mode(game: &Game, profile: &Profile, mode: VerifyMode, eps: f64) -> bool {
    verify_ne_eps(game, profile, mode, eps).is_ok_and(|v| v.is_ne())
}

/// Full-budget strategies drawn uniformly from each player's simplex face.
pub fn random_belief(game: &Game, rng: &mut ChaCha8Rng) -> Profile {
    let rows = game
        .budgets()
        .iter()
        .map(|&b| {
            let e: Vec<f64> = (0..game.num_projects())
                .map(|_| Exp1.sample(&mut *rng))
                .collect();
            let sum: f64 = e.iter().sum();
            e.iter().map(|v| b * v / sum).collect()
        })
        .collect();
    Profile::from_rows_unchecked(rows)
}

pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

pub fn run_isfp(game: &Game, config: &IsfpConfig) -> Result<IsfpResult, IsfpError> {
    run_isfp_traced(game, config, None)
}

fn write_trace(
    out: &mut dyn Write,
    restart: usize,
    iteration: usize,
    avg: &Profile,
) -> std::io::Result<()> {
    for (i, row) in avg.rows().iter().enumerate() {
        for (w, v) in row.iter().enumerate() {
            writeln!(out, "{restart},{iteration},{i},{w},{v}")?;
        }
    }
    Ok(())
}

/// Runs restarts in order until one reaches a certified equilibrium.
///
/// With a trace writer, the averaged profile after every step is written as
/// CSV rows `restart,iteration,player,project,value` (header included).
pub fn run_isfp_traced(
    game: &Game,
    config: &IsfpConfig,
    mut trace: Option<&mut dyn Write>,
) -> Result<IsfpResult, IsfpError> {
    config.validate()?;
    let mode = config.mode_for(game);
    if let Some(out) = trace.as_deref_mut() {
        writeln!(out, "restart,iteration,player,project,value")?;
    }
    let mut log = Vec::with_capacity(config.restarts);
    for restart in 0..config.restarts {
        let alpha_weight = config.alpha_weights[restart % config.alpha_weights.len()];
        let mut rng = restart_rng(config.seed, restart);
        let mut belief = BeliefState::new(random_belief(game, &mut rng), alpha_weight);
        if let Some(out) = trace.as_deref_mut() {
            write_trace(out, restart, 0, &belief.avg)?;
        }
        let mut outcome = RestartOutcome::Exhausted;
        for iteration in 1..=config.max_iterations {
            belief = match isfp_step(game, &belief, mode) {
                Ok(b) => b,
                Err(IsfpError::NoBestResponse { player }) => {
                    outcome = RestartOutcome::NoBestResponse { iteration, player };
                    break;
                }
                Err(e) => return Err(e),
            };
            if let Some(out) = trace.as_deref_mut() {
                write_trace(out, restart, iteration, &belief.avg)?;
            }
            if detect_ne_mode(game, &belief.avg, mode, config.ne_eps) {
                outcome = RestartOutcome::Converged {
                    iterations: iteration,
                };
                break;
            }
        }
        log.push(RestartLog {
            restart,
            alpha_weight,
            outcome,
        });
        if let RestartOutcome::Converged { iterations } = outcome {
            return Ok(IsfpResult {
                converged: true,
                efficiency: Some(efficiency(game, &belief.avg)),
                profile: Some(belief.avg),
                iterations: Some(iterations),
                restart: Some(restart),
                log,
            });
        }
    }
    Ok(IsfpResult {
        converged: false,
        profile: None,
        iterations: None,
        efficiency: None,
        restart: None,
        log,
    })
}
