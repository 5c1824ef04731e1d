//! Closed-form existence and efficiency results, with witness profiles.
//!
//! All predictors work on sorted views of the game (budgets ascending,
//! coefficients ascending) and map witnesses back to the caller's player
//! and project order.

use crate::game::{level_structure, Game, Profile};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Relative slack on the threshold inequalities of the predictors.
pub const COMPARE_TOL: f64 = 1e-9;

fn slack(a: f64, b: f64) -> f64 {
    COMPARE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `a ≥ b` up to the comparison slack.
fn ge(a: f64, b: f64) -> bool {
    a >= b - slack(a, b)
}

/// `a < b`, the negation of `ge`.
fn lt(a: f64, b: f64) -> bool {
    !ge(a, b)
}

/// `a > b`, the negation of `ge(b, a)`.
fn gt(a: f64, b: f64) -> bool {
    lt(b, a)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("this result needs theta {expected}, game has theta = {got}")]
    WrongTheta { expected: &'static str, got: f64 },
    #[error("this result needs {expected} players, game has {got}")]
    WrongArity { expected: &'static str, got: usize },
    #[error("efficiency formulas need a prediction with an equilibrium")]
    NoNe,
    #[error("scaling factor must be positive and finite, got {0}")]
    NonpositiveFactor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Exists,
    NotExists,
    ExistsNoSuppression,
    NoUnsuppressedNe,
    Unknown,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Exists => "exists",
            Verdict::NotExists => "not_exists",
            Verdict::ExistsNoSuppression => "exists_no_suppression",
            Verdict::NoUnsuppressedNe => "no_unsuppressed_ne",
            Verdict::Unknown => "unknown",
        }
    }

    /// Whether the verdict guarantees some pure equilibrium.
    pub fn has_ne(&self) -> bool {
        matches!(self, Verdict::Exists | Verdict::ExistsNoSuppression)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseId {
    SinglePlayer,
    ThetaZero,
    ThetaOne,
    /// Two players with close budgets.
    TwoClose,
    /// Far budgets, the small player alone on a second-best project.
    TwoFarSeparate,
    /// Far budgets, the large player also contributes to the second-best project.
    TwoFarShared,
    /// Far budgets, equal coefficients, the small player suppressed.
    TwoFarSuppressed,
    TwoNone,
    ManyClose,
    ManyFarSuppressed,
    ManyNone,
}

impl CaseId {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::SinglePlayer => "single",
            CaseId::ThetaZero => "theta0",
            CaseId::ThetaOne => "theta1",
            CaseId::TwoClose => "2p-1",
            CaseId::TwoFarSeparate => "2p-2a",
            CaseId::TwoFarShared => "2p-2b",
            CaseId::TwoFarSuppressed => "2p-2c",
            CaseId::TwoNone => "2p-none",
            CaseId::ManyClose => "np-1",
            CaseId::ManyFarSuppressed => "np-2",
            CaseId::ManyNone => "np-none",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub verdict: Verdict,
    pub case_id: CaseId,
    /// An equilibrium reaching `pos` when that is known.
    pub witness: Option<Profile>,
    /// An equilibrium reaching `poa`, when it differs from `witness`.
    pub worst_witness: Option<Profile>,
    pub pos: Option<f64>,
    pub poa: Option<f64>,
    pub poa_lower_bound: Option<f64>,
}

impl Prediction {
    fn new(verdict: Verdict, case_id: CaseId) -> Self {
        Prediction {
            verdict,
            case_id,
            witness: None,
            worst_witness: None,
            pos: None,
            poa: None,
            poa_lower_bound: None,
        }
    }
}

/// Sorted view of a game: budgets and coefficients ascending, with maps back
/// to the original indices.
struct Sorted {
    n: usize,
    m: usize,
    theta: f64,
    b: Vec<f64>,
    a: Vec<f64>,
    player: Vec<usize>,
    project: Vec<usize>,
    k: usize,
}

impl Sorted {
    fn new(game: &Game) -> Self {
        let player = game.players_by_budget();
        let project = game.projects_by_alpha();
        let b: Vec<f64> = player.iter().map(|&i| game.budget(i)).collect();
        let a: Vec<f64> = project.iter().map(|&w| game.alpha(w)).collect();
        let top = a[a.len() - 1];
        let k = a.iter().filter(|&&v| v == top).count();
        Sorted {
            n: b.len(),
            m: a.len(),
            theta: game.theta(),
            b,
            a,
            player,
            project,
            k,
        }
    }

    /// `B_i` in 1-based sorted order.
    fn bud(&self, i: usize) -> f64 {
        self.b[i - 1]
    }

    /// `α_j` in 1-based sorted order, if it exists.
    fn alpha(&self, j: usize) -> Option<f64> {
        (j >= 1 && j <= self.m).then(|| self.a[j - 1])
    }

    fn alpha_m(&self) -> f64 {
        self.a[self.m - 1]
    }

    fn total(&self) -> f64 {
        self.b.iter().sum()
    }

    fn steep(&self) -> &[usize] {
        &self.project[self.m - self.k..]
    }

    fn all_alphas_equal(&self) -> bool {
        self.k == self.m
    }

    /// Empty profile in original order, filled through sorted player indices.
    fn profile(&self) -> SortedProfile<'_> {
        SortedProfile {
            s: self,
            x: vec![vec![0.0; self.m]; self.n],
        }
    }
}

struct SortedProfile<'a> {
    s: &'a Sorted,
    x: Vec<Vec<f64>>,
}

impl SortedProfile<'_> {
    /// Adds `v` for 1-based sorted player `i` on original project `w`.
    fn add(&mut self, i: usize, w: usize, v: f64) {
        self.x[self.s.player[i - 1]][w] += v;
    }

    fn spread_steep(&mut self, i: usize, amount: f64) {
        let k = self.s.k as f64;
        for &w in self.s.steep() {
            self.add(i, w, amount / k);
        }
    }

    fn done(self) -> Profile {
        Profile::from_rows_unchecked(self.x)
    }
}

fn expect_theta_open(game: &Game) -> Result<(), TheoryError> {
    let t = game.theta();
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(TheoryError::WrongTheta {
            expected: "in (0, 1)",
            got: t,
        })
    }
}

/// At `θ = 0` the game has a potential and everyone on a steep project is
/// an optimal equilibrium.
pub fn predict_theta0(game: &Game) -> Result<Prediction, TheoryError> {
    if game.theta() != 0.0 {
        return Err(TheoryError::WrongTheta {
            expected: "= 0",
            got: game.theta(),
        });
    }
    let s = Sorted::new(game);
    let target = s.project[s.m - 1];
    let mut x = s.profile();
    for i in 1..=s.n {
        x.add(i, target, s.bud(i));
    }
    let mut p = Prediction::new(Verdict::Exists, CaseId::ThetaZero);
    p.witness = Some(x.done());
    p.pos = Some(1.0);
    p.poa = Some(1.0);
    Ok(p)
}

/// The three level conditions for an equilibrium without suppression at
/// `θ = 1`.
pub fn theta1_conditions(game: &Game) -> [bool; 3] {
    let ls = level_structure(game);
    let (l, p) = (ls.l(), ls.p());
    let r = ls.r();
    let s = ls.s();
    let c1 = l >= p;
    let c2 = (0..p.saturating_sub(1)).all(|j| {
        let single = s[j] == 1
            && gt(
                ls.budget_levels[j].value,
                r.get(j).copied().unwrap_or(0) as f64 * ls.budget_levels[j + 1].value,
            );
        single || (j < l && s[j] >= r[j])
    });
    let c3 = c1
        && (0..p).all(|j| {
            (j + 1..p).all(|d| {
                let mult = 1.0 + s[d].div_ceil(r[d]) as f64;
                ge(
                    ls.project_levels[j].value,
                    mult * ls.project_levels[d].value,
                )
            })
        });
    [c1, c2, c3]
}

/// Equilibria without suppression at `θ = 1`.
pub fn predict_theta1(game: &Game) -> Result<Prediction, TheoryError> {
    if game.theta() != 1.0 {
        return Err(TheoryError::WrongTheta {
            expected: "= 1",
            got: game.theta(),
        });
    }
    if !theta1_conditions(game).iter().all(|&c| c) {
        return Ok(Prediction::new(Verdict::NoUnsuppressedNe, CaseId::ThetaOne));
    }
    let ls = level_structure(game);
    let mut x = vec![vec![0.0; game.num_projects()]; game.num_players()];
    let mut welfare = 0.0;
    for (q, players) in ls.budget_levels.iter().enumerate() {
        let projects = &ls.project_levels[q].members;
        if players.count() == 1 {
            let i = players.members[0];
            for &w in projects {
                x[i][w] = players.value / projects.len() as f64;
            }
        } else {
            for (t, &i) in players.members.iter().enumerate() {
                x[i][projects[t % projects.len()]] = players.value;
            }
        }
        welfare += ls.project_levels[q].value * players.value * players.count() as f64;
    }
    let eff = welfare / (game.max_alpha() * game.total_budget());
    let mut p = Prediction::new(Verdict::ExistsNoSuppression, CaseId::ThetaOne);
    p.witness = Some(Profile::from_rows_unchecked(x));
    p.pos = Some(eff);
    p.poa = Some(eff);
    Ok(p)
}

/// Which clauses of the two-player characterization hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TwoPlayerClauses {
    pub close: bool,
    pub far_separate: bool,
    pub far_shared: bool,
    pub far_suppressed: bool,
}

impl TwoPlayerClauses {
    pub fn any(&self) -> bool {
        self.close || self.far_separate || self.far_shared || self.far_suppressed
    }
}

fn two_player_clauses(s: &Sorted) -> TwoPlayerClauses {
    let (b1, b2, th) = (s.bud(1), s.bud(2), s.theta);
    let (m, k) = (s.m, s.k);
    let am = s.alpha_m();
    // α_{m−k} and α_{m−k−1}; absent when the index falls below 1
    let second = s.alpha(m - k);
    let third = if m > k + 1 { s.alpha(m - k - 1) } else { None };

    let close = ge(b1, th * b2)
        && second.is_none_or(|a2| ge(0.5 * am, a2))
        && ge(b1, k as f64 * th * b2);

    let far = lt(b1, th * b2);
    let (far_separate, far_shared) = match second {
        // every project is steep: no second-best project to sit on
        None => (false, false),
        Some(a2) => {
            let ratio = a2 / am;
            let sep = lt(b1, th * b2 / k as f64)
                && ge((1.0 / (1.0 + th)).min(2.0 * th / (1.0 + th)), ratio);
            let unique = m == k + 1 || s.a[m - k - 2] != a2;
            let shared = lt(b1, th * b2 / (k as f64 + th * th))
                && third.is_none_or(|a3| ge(a2, 2.0 * a3))
                && ge(ratio, 2.0 * th / (1.0 + th))
                && ge(2.0 * (1.0 - th) / (2.0 - th), ratio)
                && unique;
            (sep, shared)
        }
    };
    let far_suppressed = lt(b1, th * b2 / m as f64) && s.all_alphas_equal();
    TwoPlayerClauses {
        close,
        far_separate: far && far_separate,
        far_shared: far && far_shared,
        far_suppressed: far && far_suppressed,
    }
}

/// Clause flags for a two-player game with `0 < θ < 1`.
pub fn two_player_clause_flags(game: &Game) -> Result<TwoPlayerClauses, TheoryError> {
    expect_two(game)?;
    Ok(two_player_clauses(&Sorted::new(game)))
}

fn expect_two(game: &Game) -> Result<(), TheoryError> {
    if game.num_players() != 2 {
        return Err(TheoryError::WrongArity {
            expected: "exactly 2",
            got: game.num_players(),
        });
    }
    expect_theta_open(game)
}

fn witness_close(s: &Sorted) -> Profile {
    let mut x = s.profile();
    for i in 1..=s.n {
        x.spread_steep(i, s.bud(i));
    }
    x.done()
}

fn witness_far_separate(s: &Sorted) -> Profile {
    let second = s.project[s.m - s.k - 1];
    let mut x = s.profile();
    x.add(1, second, s.bud(1));
    x.spread_steep(2, s.bud(2));
    x.done()
}

fn witness_far_shared(s: &Sorted) -> Profile {
    let second = s.project[s.m - s.k - 1];
    let (b1, b2) = (s.bud(1), s.bud(2));
    let mut x = s.profile();
    x.add(1, second, b1);
    x.add(2, second, s.theta * b1);
    x.spread_steep(2, b2 - s.theta * b1);
    x.done()
}

/// The largest player spreads evenly over every project, the rest sit on
/// the last project (or contribute nothing when `idle`).
fn witness_far_suppressed(s: &Sorted, idle: bool) -> Profile {
    let mut x = s.profile();
    let bn = s.bud(s.n);
    for w in 0..s.m {
        x.add(s.n, w, bn / s.m as f64);
    }
    if !idle {
        let last = s.project[s.m - 1];
        for i in 1..s.n {
            x.add(i, last, s.bud(i));
        }
    }
    x.done()
}

/// Existence characterization for two players with `0 < θ < 1`.
pub fn predict_two_player(game: &Game) -> Result<Prediction, TheoryError> {
    expect_two(game)?;
    let s = Sorted::new(game);
    let c = two_player_clauses(&s);
    let p = if c.close {
        let mut p = Prediction::new(Verdict::Exists, CaseId::TwoClose);
        p.witness = Some(witness_close(&s));
        p
    } else if c.far_separate {
        let mut p = Prediction::new(Verdict::Exists, CaseId::TwoFarSeparate);
        p.witness = Some(witness_far_separate(&s));
        p
    } else if c.far_shared {
        let mut p = Prediction::new(Verdict::Exists, CaseId::TwoFarShared);
        p.witness = Some(witness_far_shared(&s));
        p
    } else if c.far_suppressed {
        let mut p = Prediction::new(Verdict::Exists, CaseId::TwoFarSuppressed);
        p.witness = Some(witness_far_suppressed(&s, false));
        p
    } else {
        Prediction::new(Verdict::NotExists, CaseId::TwoNone)
    };
    Ok(p)
}

/// Fills in the price of stability and anarchy of a two-player prediction.
pub fn efficiency_two_player(
    game: &Game,
    prediction: &Prediction,
) -> Result<Prediction, TheoryError> {
    expect_two(game)?;
    if prediction.verdict != Verdict::Exists {
        return Err(TheoryError::NoNe);
    }
    let s = Sorted::new(game);
    let c = two_player_clauses(&s);
    let (b1, b2, th, am) = (s.bud(1), s.bud(2), s.theta, s.alpha_m());
    let denom = am * (b1 + b2);
    let separate = |a2: f64| (am * b2 + a2 * b1) / denom;
    let shared = |a2: f64| (am * (b2 - th * b1) + a2 * b1 * (1.0 + th)) / denom;
    let mut p = prediction.clone();
    match prediction.case_id {
        CaseId::TwoClose => {
            p.pos = Some(1.0);
            p.poa = Some(1.0);
        }
        CaseId::TwoFarSeparate => {
            let a2 = s.alpha(s.m - s.k).expect("second-best project exists");
            p.pos = Some(separate(a2));
            if c.far_shared {
                p.poa = Some(shared(a2));
                p.worst_witness = Some(witness_far_shared(&s));
            } else {
                p.poa = p.pos;
            }
        }
        CaseId::TwoFarShared => {
            let a2 = s.alpha(s.m - s.k).expect("second-best project exists");
            p.poa = Some(shared(a2));
            if c.far_separate {
                p.pos = Some(separate(a2));
                p.worst_witness = Some(witness_far_shared(&s));
                p.witness = Some(witness_far_separate(&s));
            } else {
                p.pos = p.poa;
            }
        }
        CaseId::TwoFarSuppressed => {
            p.pos = Some(1.0);
            p.poa = Some(b2 / (b1 + b2));
            p.worst_witness = Some(witness_far_suppressed(&s, true));
        }
        _ => return Err(TheoryError::NoNe),
    }
    Ok(p)
}

/// Infimum of the two-player price of stability and of anarchy.
pub fn tight_bound(k: usize, theta: f64) -> f64 {
    k as f64 / (k as f64 + theta)
}

/// Sufficient conditions for existence with `n ≥ 2` players, `0 < θ < 1`.
pub fn predict_n_player_sufficient(game: &Game) -> Result<Prediction, TheoryError> {
    if game.num_players() < 2 {
        return Err(TheoryError::WrongArity {
            expected: "at least 2",
            got: game.num_players(),
        });
    }
    expect_theta_open(game)?;
    let s = Sorted::new(game);
    let n = s.n;
    let (th, bn, bn1) = (s.theta, s.bud(n), s.bud(n - 1));
    let total = s.total();
    if close_many(&s) {
        let mut x = s.profile();
        for i in 1..=n {
            x.spread_steep(i, s.bud(i));
        }
        let mut p = Prediction::new(Verdict::Exists, CaseId::ManyClose);
        p.witness = Some(x.done());
        p.pos = Some(1.0);
        p.poa_lower_bound = Some((1.0 + (n as f64 - 1.0) * th) * (bn1 + bn) / (n as f64 * total));
        return Ok(p);
    }
    if lt(bn1, th * bn / s.m as f64) && s.all_alphas_equal() {
        let mut p = Prediction::new(Verdict::Exists, CaseId::ManyFarSuppressed);
        p.witness = Some(witness_far_suppressed(&s, false));
        p.worst_witness = Some(witness_far_suppressed(&s, true));
        p.pos = Some(1.0);
        p.poa = Some(bn / total);
        return Ok(p);
    }
    Ok(Prediction::new(Verdict::Unknown, CaseId::ManyNone))
}

fn close_many(s: &Sorted) -> bool {
    let n = s.n;
    let (th, bn) = (s.theta, s.bud(n));
    ge(s.bud(n - 1), th * bn)
        && s.alpha(s.m - s.k)
            .is_none_or(|a2| ge(s.alpha_m() / n as f64, a2))
        && ge(s.bud(1), s.k as f64 * th * bn)
}

/// Lower bound on the efficiency of every pure equilibrium.
///
/// Maximum of the smoothness bound, its simpler closed form and, when their
/// preconditions hold, the close-budget and far-budget bounds. A single
/// player always reaches the optimum, so the bound is 1 there.
pub fn poa_lower_bound_smooth(game: &Game) -> f64 {
    let s = Sorted::new(game);
    let n = s.n;
    if n < 2 {
        return 1.0;
    }
    let th = s.theta;
    let bn = s.bud(n);
    let total = s.total();
    let l = (1..=n).find(|&i| ge(s.bud(i), th * bn)).unwrap_or(n);
    let nf = n as f64;
    let middle: f64 = (l..n).map(|i| s.bud(i)).sum();
    let main = (1.0 + (nf - 1.0) * th) / nf * middle / total
        + (1.0 + (n - l) as f64 * th) / (n - l + 1) as f64 * bn / total;
    let simple = th * (middle + bn) / total;
    let mut bound = main.max(simple);
    if th > 0.0 && th < 1.0 && close_many(&s) {
        bound = bound.max((1.0 + (nf - 1.0) * th) * (s.bud(n - 1) + bn) / (nf * total));
    }
    if lt(s.bud(n - 1), th * bn) {
        bound = bound.max(bn / total);
    }
    bound
}

pub fn scale_projects(game: &Game, p: f64) -> Result<Game, TheoryError> {
    check_factor(p)?;
    Ok(game.scaled_alphas(p))
}

pub fn scale_budgets_profile(
    game: &Game,
    profile: &Profile,
    p: f64,
) -> Result<(Game, Profile), TheoryError> {
    check_factor(p)?;
    Ok((game.scaled_budgets(p), profile.scaled(p)))
}

fn check_factor(p: f64) -> Result<(), TheoryError> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(TheoryError::NonpositiveFactor(p))
    }
}

/// The most specific applicable result for `game`.
pub fn predict(game: &Game) -> Prediction {
    let mut p = if game.num_players() == 1 {
        let s = Sorted::new(game);
        let mut x = s.profile();
        x.spread_steep(1, s.bud(1));
        let mut p = Prediction::new(Verdict::Exists, CaseId::SinglePlayer);
        p.witness = Some(x.done());
        p.pos = Some(1.0);
        p.poa = Some(1.0);
        p
    } else if game.theta() == 0.0 {
        predict_theta0(game).expect("theta checked")
    } else if game.theta() == 1.0 {
        predict_theta1(game).expect("theta checked")
    } else if game.num_players() == 2 {
        let p = predict_two_player(game).expect("arity and theta checked");
        if p.verdict == Verdict::Exists {
            efficiency_two_player(game, &p).expect("prediction has an equilibrium")
        } else {
            p
        }
    } else {
        predict_n_player_sufficient(game).expect("arity and theta checked")
    };
    let bound = poa_lower_bound_smooth(game);
    p.poa_lower_bound = Some(p.poa_lower_bound.map_or(bound, |b| b.max(bound)));
    p
}
