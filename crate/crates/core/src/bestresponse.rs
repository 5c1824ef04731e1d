//! Best responses of a single player against fixed opponents.
//!
//! With two projects a player's full-budget strategy is a single number `t`,
//! the contribution to project 0, and utility is piecewise linear in `t`
//! between a finite list of breakpoints. The exact responder evaluates every
//! breakpoint, one interior point per interval, and the one-sided limits at
//! the interval ends. For any number of projects a grid oracle is provided.

use crate::game::{Game, Profile};
use serde::Serialize;
use thiserror::Error;

/// Relative tolerance used to decide ties with the supremum.
pub const TIE_TOL: f64 = 1e-9;

/// Points closer than this are merged when building breakpoint lists.
pub const DEDUP_EPS: f64 = 1e-12;

/// Offset of the breakpoint-adjacent grid candidates, relative to max(B_i, 1).
pub const ADJACENT_STEP: f64 = 1e-6;

/// Upper bound on grid work (candidates or DP cells).
pub const GRID_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrError {
    #[error("exact best response needs exactly 2 projects, game has {0}")]
    NotTwoProjects(usize),
    #[error("player {player} out of range for {n} players")]
    PlayerOutOfRange { player: usize, n: usize },
    #[error("project {project} out of range for {m} projects")]
    ProjectOutOfRange { project: usize, m: usize },
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
    #[error("grid of resolution {resolution} needs {work} evaluations, limit is {limit}")]
    GridTooLarge {
        resolution: u64,
        work: u64,
        limit: u64,
    },
    #[error("subset-sum items and cap must be positive and finite")]
    BadSubsetSum,
}

pub(crate) fn tie_tol(sup: f64) -> f64 {
    TIE_TOL * sup.abs().max(1.0)
}

/// Opponent contributions on one project as seen by a fixed player.
#[derive(Debug, Clone)]
struct ProjectSide {
    alpha: f64,
    theta: f64,
    eps: f64,
    n: usize,
    /// Positive opponent contributions, ascending.
    sorted: Vec<f64>,
    total: f64,
    max: f64,
}

impl ProjectSide {
    fn new(game: &Game, profile: &Profile, player: usize, project: usize) -> Self {
        let mut sorted: Vec<f64> = (0..profile.num_players())
            .filter(|&j| j != player)
            .map(|j| profile.get(j, project))
            .filter(|&v| v > 0.0)
            .collect();
        sorted.sort_by(f64::total_cmp);
        ProjectSide {
            alpha: game.alpha(project),
            theta: game.theta(),
            eps: game.membership_eps(),
            n: game.num_players(),
            total: sorted.iter().sum(),
            max: sorted.last().copied().unwrap_or(0.0),
            sorted,
        }
    }

    /// Size of the share set when the player contributes `y`, if the player is in it.
    fn sharers_with(&self, y: f64) -> Option<usize> {
        let max = self.max.max(y);
        if max <= 0.0 {
            return None;
        }
        if self.theta == 0.0 {
            return Some(self.n);
        }
        let threshold = self.theta * max - self.eps;
        if !(y > 0.0 && y >= threshold) {
            return None;
        }
        let below = self.sorted.partition_point(|&v| v < threshold);
        Some(1 + self.sorted.len() - below)
    }

    fn value(&self, y: f64) -> f64 {
        match self.sharers_with(y) {
            Some(c) => self.alpha * (y + self.total) / c as f64,
            None => 0.0,
        }
    }

    /// Affine form `a + b·y` of the value around `y`.
    fn linear_at(&self, y: f64) -> (f64, f64) {
        match self.sharers_with(y) {
            Some(c) => {
                let c = c as f64;
                (self.alpha * self.total / c, self.alpha / c)
            }
            None => (0.0, 0.0),
        }
    }

    /// Own-threshold and suppression points, in terms of own contribution.
    fn jumps(&self) -> Vec<f64> {
        let mut pts = vec![self.theta * self.max];
        if self.theta > 0.0 {
            pts.extend(self.sorted.iter().map(|o| o / self.theta));
        }
        pts
    }
}

/// A player's view of a game with everyone else's contributions fixed.
#[derive(Debug, Clone)]
pub struct Responder {
    player: usize,
    budget: f64,
    sides: Vec<ProjectSide>,
}

impl Responder {
    pub fn new(game: &Game, profile: &Profile, player: usize) -> Result<Self, BrError> {
        if player >= game.num_players() {
            return Err(BrError::PlayerOutOfRange {
                player,
                n: game.num_players(),
            });
        }
        Ok(Responder {
            player,
            budget: game.budget(player),
            sides: (0..game.num_projects())
                .map(|w| ProjectSide::new(game, profile, player, w))
                .collect(),
        })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Utility of playing `row` against the fixed opponents.
    pub fn utility(&self, row: &[f64]) -> f64 {
        self.sides.iter().zip(row).map(|(s, &y)| s.value(y)).sum()
    }

    /// Two-project utility with `t` on project 0 and the rest on project 1.
    fn utility_t(&self, t: f64) -> f64 {
        self.sides[0].value(t) + self.sides[1].value(self.budget - t)
    }

    fn action_t(&self, t: f64) -> Vec<f64> {
        vec![t, self.budget - t]
    }
}

/// Candidate discontinuities along a two-project budget split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakpoints {
    /// Contributions to the chosen project, ascending, from 0 to the budget.
    pub l: Vec<f64>,
    /// `l` with the midpoint of each consecutive pair inserted.
    pub m: Vec<f64>,
}

fn breakpoints_of(resp: &Responder, psi: usize) -> Breakpoints {
    let b = resp.budget;
    let mut pts = vec![0.0, b];
    pts.extend(resp.sides[psi].jumps());
    pts.extend(resp.sides[1 - psi].jumps().into_iter().map(|w| b - w));
    let mut l: Vec<f64> = pts.into_iter().map(|p| p.clamp(0.0, b)).collect();
    l.sort_by(f64::total_cmp);
    l.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_EPS);
    // keep the exact endpoints after merging
    *l.first_mut().unwrap() = 0.0;
    if l.len() == 1 {
        l.push(b);
    }
    *l.last_mut().unwrap() = b;
    let mut m = Vec::with_capacity(2 * l.len() - 1);
    for w in l.windows(2) {
        m.push(w[0]);
        m.push(0.5 * (w[0] + w[1]));
    }
    m.push(b);
    Breakpoints { l, m }
}

/// Breakpoints of player `player`'s utility, parametrized by its
/// contribution to project `psi` in a two-project game.
pub fn breakpoints(
    game: &Game,
    profile: &Profile,
    player: usize,
    psi: usize,
) -> Result<Breakpoints, BrError> {
    if game.num_projects() != 2 {
        return Err(BrError::NotTwoProjects(game.num_projects()));
    }
    if psi >= 2 {
        return Err(BrError::ProjectOutOfRange { project: psi, m: 2 });
    }
    let resp = Responder::new(game, profile, player)?;
    Ok(breakpoints_of(&resp, psi))
}

/// One element of a maximizer set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Maximizer {
    Point(Vec<f64>),
    /// Every action on the segment between `from` and `to` attains the
    /// supremum, except possibly the endpoints flagged as open.
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
        from_closed: bool,
        to_closed: bool,
    },
}

impl Maximizer {
    /// A single attaining action.
    pub fn representative(&self) -> Vec<f64> {
        match self {
            Maximizer::Point(p) => p.clone(),
            Maximizer::Segment { from, to, .. } => {
                from.iter().zip(to).map(|(a, b)| 0.5 * (a + b)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Approached from smaller values of the parameter.
    Left,
    /// Approached from larger values of the parameter.
    Right,
}

/// Where an unattained supremum is approached, in terms of the
/// contribution `t` to project 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitWitness {
    pub t: f64,
    pub side: Side,
    pub budget: f64,
}

impl LimitWitness {
    /// Full-budget action at distance `delta` from the limit point on its side.
    pub fn action_near(&self, delta: f64) -> Vec<f64> {
        let t = match self.side {
            Side::Left => self.t - delta,
            Side::Right => self.t + delta,
        }
        .clamp(0.0, self.budget);
        vec![t, self.budget - t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub sup_value: f64,
    pub attained: bool,
    pub maximizers: Vec<Maximizer>,
    pub limit_witness: Option<LimitWitness>,
    /// False for grid results, whose value only bounds the supremum from below.
    pub exact: bool,
}

impl BestResponse {
    /// First attaining action, if any.
    pub fn action(&self) -> Option<Vec<f64>> {
        self.maximizers.first().map(Maximizer::representative)
    }
}

/// Exact best response in a two-project game.
///
/// Runs in `O(n log n)`: the opponents on each project are sorted once and
/// every evaluation is a binary search.
pub fn best_response_2p(
    game: &Game,
    profile: &Profile,
    player: usize,
) -> Result<BestResponse, BrError> {
    if game.num_projects() != 2 {
        return Err(BrError::NotTwoProjects(game.num_projects()));
    }
    let resp = Responder::new(game, profile, player)?;
    Ok(exact_2p(&resp))
}

fn exact_2p(resp: &Responder) -> BestResponse {
    let b = resp.budget;
    let bp = breakpoints_of(resp, 0);
    let l = &bp.l;
    let point_vals: Vec<f64> = l.iter().map(|&t| resp.utility_t(t)).collect();

    struct Piece {
        lo: f64,
        hi: f64,
        mid_val: f64,
        lim_lo: f64,
        lim_hi: f64,
        slope: f64,
    }
    let pieces: Vec<Piece> = l
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let (a0, b0) = resp.sides[0].linear_at(mid);
            let (a1, b1) = resp.sides[1].linear_at(b - mid);
            // u(t) = a0 + b0·t + a1 + b1·(B − t)
            let c = a0 + a1 + b1 * b;
            let slope = b0 - b1;
            Piece {
                lo,
                hi,
                mid_val: resp.utility_t(mid),
                lim_lo: c + slope * lo,
                lim_hi: c + slope * hi,
                slope,
            }
        })
        .collect();

    let attained_max = point_vals
        .iter()
        .chain(pieces.iter().map(|p| &p.mid_val))
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let limit_max = pieces
        .iter()
        .flat_map(|p| [p.lim_lo, p.lim_hi])
        .fold(f64::NEG_INFINITY, f64::max);
    let sup = attained_max.max(limit_max);
    let tol = tie_tol(sup);

    if attained_max < sup - tol {
        let witness = pieces
            .iter()
            .find_map(|p| {
                if p.lim_lo >= sup - tol {
                    Some((p.lo, Side::Right))
                } else if p.lim_hi >= sup - tol {
                    Some((p.hi, Side::Left))
                } else {
                    None
                }
            })
            .map(|(t, side)| LimitWitness { t, side, budget: b });
        return BestResponse {
            sup_value: sup,
            attained: false,
            maximizers: Vec::new(),
            limit_witness: witness,
            exact: true,
        };
    }

    let mut maximizers = Vec::new();
    let mut covered_points = vec![false; l.len()];
    for (idx, p) in pieces.iter().enumerate() {
        let flat = p.slope.abs() * (p.hi - p.lo) <= tol;
        if flat && p.mid_val >= sup - tol {
            let from_closed = point_vals[idx] >= sup - tol;
            let to_closed = point_vals[idx + 1] >= sup - tol;
            covered_points[idx] |= from_closed;
            covered_points[idx + 1] |= to_closed;
            maximizers.push(Maximizer::Segment {
                from: resp.action_t(p.lo),
                to: resp.action_t(p.hi),
                from_closed,
                to_closed,
            });
        } else if p.mid_val >= sup - tol {
            // numerically flat but not caught above; keep the sampled point
            maximizers.push(Maximizer::Point(resp.action_t(0.5 * (p.lo + p.hi))));
        }
    }
    for (idx, &t) in l.iter().enumerate() {
        if !covered_points[idx] && point_vals[idx] >= sup - tol {
            maximizers.push(Maximizer::Point(resp.action_t(t)));
        }
    }
    BestResponse {
        sup_value: sup,
        attained: true,
        maximizers,
        limit_witness: None,
        exact: true,
    }
}

/// Grid work needed for a given game size and resolution.
pub fn grid_work(num_projects: usize, resolution: u64) -> u64 {
    let r = resolution;
    match num_projects {
        0 | 1 => 1,
        2 => r + 1,
        m => (m as u64)
            .saturating_mul(r + 1)
            .saturating_mul(r + 2)
            / 2,
    }
}

/// Best full-budget response on the grid with step `B_i / resolution`.
///
/// For two projects the candidates also include every breakpoint and
/// interval midpoint. For more projects the grid maximum is found by a
/// dynamic program over budget units, which returns the same value as
/// enumerating the grid. The value is a lower bound on the supremum.
pub fn best_response_grid(
    game: &Game,
    profile: &Profile,
    player: usize,
    resolution: u64,
) -> Result<BestResponse, BrError> {
    if resolution == 0 {
        return Err(BrError::ZeroResolution);
    }
    let work = grid_work(game.num_projects(), resolution);
    if work > GRID_LIMIT {
        return Err(BrError::GridTooLarge {
            resolution,
            work,
            limit: GRID_LIMIT,
        });
    }
    let resp = Responder::new(game, profile, player)?;
    Ok(match game.num_projects() {
        1 => {
            let row = vec![resp.budget];
            BestResponse {
                sup_value: resp.utility(&row),
                attained: true,
                maximizers: vec![Maximizer::Point(row)],
                limit_witness: None,
                exact: false,
            }
        }
        2 => grid_2p(&resp, resolution),
        _ => grid_dp(&resp, resolution),
    })
}

fn grid_2p(resp: &Responder, resolution: u64) -> BestResponse {
    let b = resp.budget;
    let mut ts: Vec<f64> = (0..=resolution)
        .map(|k| b * k as f64 / resolution as f64)
        .collect();
    let bp = breakpoints_of(resp, 0);
    // points just beside each breakpoint catch one-sided jumps
    let delta = ADJACENT_STEP * b.max(1.0);
    for &l in &bp.l {
        ts.extend([l - delta, l + delta].into_iter().filter(|t| (0.0..=b).contains(t)));
    }
    ts.extend(bp.m);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let vals: Vec<f64> = ts.iter().map(|&t| resp.utility_t(t)).collect();
    let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tol(best);
    let maximizers = ts
        .iter()
        .zip(&vals)
        .filter(|(_, &v)| v >= best - tol)
        .map(|(&t, _)| Maximizer::Point(resp.action_t(t)))
        .collect();
    BestResponse {
        sup_value: best,
        attained: true,
        maximizers,
        limit_witness: None,
        exact: false,
    }
}

fn grid_dp(resp: &Responder, resolution: u64) -> BestResponse {
    let r = resolution as usize;
    let h = resp.budget / resolution as f64;
    let m = resp.sides.len();
    let table: Vec<Vec<f64>> = resp
        .sides
        .iter()
        .map(|s| (0..=r).map(|u| s.value(u as f64 * h)).collect())
        .collect();
    // best[s]: best value of the projects so far using exactly s units
    let mut best = table[0].clone();
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(m);
    choice.push((0..=r as u32).collect());
    for row in table.iter().take(m - 1).skip(1) {
        let mut next = vec![f64::NEG_INFINITY; r + 1];
        let mut pick = vec![0u32; r + 1];
        for s in 0..=r {
            for u in 0..=s {
                let v = best[s - u] + row[u];
                if v > next[s] {
                    next[s] = v;
                    pick[s] = u as u32;
                }
            }
        }
        best = next;
        choice.push(pick);
    }
    // the last project takes whatever is left
    let last = &table[m - 1];
    let (mut units_before, mut value) = (0usize, f64::NEG_INFINITY);
    for s in 0..=r {
        let v = best[s] + last[r - s];
        if v > value {
            value = v;
            units_before = s;
        }
    }
    let mut units = vec![0usize; m];
    units[m - 1] = r - units_before;
    let mut s = units_before;
    for w in (0..m - 1).rev() {
        let u = choice[w][s] as usize;
        units[w] = u;
        s -= u;
    }
    let row: Vec<f64> = units.iter().map(|&u| u as f64 * h).collect();
    BestResponse {
        sup_value: resp.utility(&row),
        attained: true,
        maximizers: vec![Maximizer::Point(row)],
        limit_witness: None,
        exact: false,
    }
}

/// A subset-sum instance encoded as a best-response problem for player 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSumGame {
    pub game: Game,
    /// Player 1 fixed on `s_j / θ` in project `j`; player 0's row is zero.
    pub profile: Profile,
    pub items: Vec<f64>,
    pub cap: f64,
}

impl SubsetSumGame {
    /// Common project coefficient.
    pub fn alpha(&self) -> f64 {
        self.game.alpha(0)
    }

    /// Best-response value reached when the best subset sums to `s`.
    pub fn encode_value(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            s + self.alpha() * (self.cap - s) / 2.0
        }
    }

    /// Subset sum recovered from a best-response value.
    pub fn decode_value(&self, value: f64) -> f64 {
        if value <= 0.0 {
            return 0.0;
        }
        let a = self.alpha();
        (value - a * self.cap / 2.0) / (1.0 - a / 2.0)
    }

    /// Items whose project player 0 reaches the threshold of under `row`.
    pub fn subset_from_action(&self, row: &[f64]) -> Vec<usize> {
        let x = self.profile.with_row(0, row.to_vec());
        (0..self.items.len())
            .filter(|&j| {
                let max = x.get(0, j).max(x.get(1, j));
                self.game.is_sharer(x.get(0, j), max)
            })
            .collect()
    }
}

/// Builds the two-player game whose best response for player 0 solves the
/// subset-sum instance `(items, cap)`.
///
/// Reaching the threshold on project `j` costs exactly `s_j` and pays `s_j`;
/// leftover budget adds `α/2` per unit on a reached project, so the best
/// response value is `S + α(C − S)/2` for the optimal subset sum `S > 0`.
pub fn subset_sum_game(items: &[f64], cap: f64) -> Result<SubsetSumGame, BrError> {
    if items.is_empty()
        || !(cap.is_finite() && cap > 0.0)
        || items.iter().any(|s| !(s.is_finite() && *s > 0.0))
    {
        return Err(BrError::BadSubsetSum);
    }
    let s_min = items.iter().copied().fold(f64::INFINITY, f64::min);
    let mut theta = (s_min / cap).sqrt().min(0.5);
    let mut alpha = 2.0 * theta / (1.0 + theta);
    while alpha * cap >= s_min {
        theta /= 2.0;
        alpha = 2.0 * theta / (1.0 + theta);
    }
    let opp: Vec<f64> = items.iter().map(|s| s / theta).collect();
    let game = Game::new(
        theta,
        vec![cap, opp.iter().sum()],
        vec![alpha; items.len()],
    )
    .expect("subset-sum game parameters are positive");
    let profile = Profile::from_rows_unchecked(vec![vec![0.0; items.len()], opp]);
    Ok(SubsetSumGame {
        game,
        profile,
        items: items.to_vec(),
        cap,
    })
}
