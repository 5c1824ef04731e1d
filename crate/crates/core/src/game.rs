//! Game description, contribution profiles and the θ-equal sharing rule.
//!
//! A game has `n` players with budgets and `m` projects with linear value
//! functions `P_ω(y) = α_ω · y`. A project's value is split equally among the
//! players whose contribution is at least a `θ` fraction of the largest
//! contribution to that project.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack allowed on the budget constraint of a profile.
pub const BUDGET_EPS: f64 = 1e-9;

/// Default absolute slack on the share-set membership test.
pub const MEMBERSHIP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("theta must lie in [0, 1], got {0}")]
    Theta(f64),
    #[error("budgets must be non-empty")]
    NoPlayers,
    #[error("alphas must be non-empty")]
    NoProjects,
    #[error("budgets[{index}] must be positive and finite, got {value}")]
    Budget { index: usize, value: f64 },
    #[error("alphas[{index}] must be positive and finite, got {value}")]
    Alpha { index: usize, value: f64 },
    #[error("membership_eps must be non-negative and finite, got {0}")]
    MembershipEps(f64),
    #[error("x has {got} rows, expected {expected} (one per player)")]
    ProfileRows { expected: usize, got: usize },
    #[error("x[{player}] has {got} entries, expected {expected} (one per project)")]
    ProfileColumns {
        player: usize,
        expected: usize,
        got: usize,
    },
    #[error("x[{player}][{project}] must be non-negative and finite, got {value}")]
    Contribution {
        player: usize,
        project: usize,
        value: f64,
    },
    #[error("x[{player}] spends {spent}, exceeding budget {budget}")]
    OverBudget {
        player: usize,
        spent: f64,
        budget: f64,
    },
}

#[derive(Deserialize)]
struct RawGame {
    theta: f64,
    budgets: Vec<f64>,
    alphas: Vec<f64>,
    #[serde(default = "default_membership_eps")]
    membership_eps: f64,
}

fn default_membership_eps() -> f64 {
    MEMBERSHIP_EPS
}

impl TryFrom<RawGame> for Game {
    type Error = GameError;

    fn try_from(raw: RawGame) -> Result<Self, Self::Error> {
        Game::new(raw.theta, raw.budgets, raw.alphas)?.with_membership_eps(raw.membership_eps)
    }
}

/// A thresholded shared effort game.
///
/// Budgets and coefficients are kept in the order given; sorted views are
/// derived on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGame")]
pub struct Game {
    theta: f64,
    budgets: Vec<f64>,
    alphas: Vec<f64>,
    membership_eps: f64,
}

impl Game {
    pub fn new(theta: f64, budgets: Vec<f64>, alphas: Vec<f64>) -> Result<Self, GameError> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(GameError::Theta(theta));
        }
        if budgets.is_empty() {
            return Err(GameError::NoPlayers);
        }
        if alphas.is_empty() {
            return Err(GameError::NoProjects);
        }
        if let Some((index, &value)) = budgets
            .iter()
            .enumerate()
            .find(|(_, b)| !(b.is_finite() && **b > 0.0))
        {
            return Err(GameError::Budget { index, value });
        }
        if let Some((index, &value)) = alphas
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.is_finite() && **a > 0.0))
        {
            return Err(GameError::Alpha { index, value });
        }
        Ok(Game {
            theta,
            budgets,
            alphas,
            membership_eps: MEMBERSHIP_EPS,
        })
    }

    pub fn with_membership_eps(mut self, eps: f64) -> Result<Self, GameError> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(GameError::MembershipEps(eps));
        }
        self.membership_eps = eps;
        Ok(self)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn budget(&self, player: usize) -> f64 {
        self.budgets[player]
    }

    pub fn alpha(&self, project: usize) -> f64 {
        self.alphas[project]
    }

    pub fn membership_eps(&self) -> f64 {
        self.membership_eps
    }

    pub fn num_players(&self) -> usize {
        self.budgets.len()
    }

    pub fn num_projects(&self) -> usize {
        self.alphas.len()
    }

    pub fn total_budget(&self) -> f64 {
        self.budgets.iter().sum()
    }

    pub fn max_alpha(&self) -> f64 {
        self.alphas.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn max_budget(&self) -> f64 {
        self.budgets.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Player indices ordered by budget, smallest first. Ties keep input order.
    pub fn players_by_budget(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.num_players()).collect();
        idx.sort_by(|&a, &b| self.budgets[a].total_cmp(&self.budgets[b]));
        idx
    }

    /// Project indices ordered by coefficient, smallest first. Ties keep input order.
    pub fn projects_by_alpha(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.num_projects()).collect();
        idx.sort_by(|&a, &b| self.alphas[a].total_cmp(&self.alphas[b]));
        idx
    }

    /// Projects whose coefficient equals the maximum (exact comparison).
    pub fn steep_projects(&self) -> Vec<usize> {
        let top = self.max_alpha();
        (0..self.num_projects())
            .filter(|&w| self.alphas[w] == top)
            .collect()
    }

    /// Membership test of the sharing rule for a single contribution, given
    /// the largest contribution to the project.
    ///
    /// At `θ = 0` every player shares a non-vacant project, contributor or
    /// not. For `θ > 0` a player must contribute a positive amount that is at
    /// least `θ · max` up to the membership slack.
    pub fn is_sharer(&self, contribution: f64, max_contribution: f64) -> bool {
        if max_contribution <= 0.0 {
            return false;
        }
        if self.theta == 0.0 {
            return true;
        }
        contribution > 0.0 && contribution >= self.theta * max_contribution - self.membership_eps
    }

    pub fn scaled_alphas(&self, factor: f64) -> Game {
        Game {
            alphas: self.alphas.iter().map(|a| a * factor).collect(),
            ..self.clone()
        }
    }

    pub fn scaled_budgets(&self, factor: f64) -> Game {
        Game {
            budgets: self.budgets.iter().map(|b| b * factor).collect(),
            ..self.clone()
        }
    }

    pub fn with_theta(&self, theta: f64) -> Result<Game, GameError> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(GameError::Theta(theta));
        }
        Ok(Game {
            theta,
            ..self.clone()
        })
    }
}

#[derive(Deserialize)]
struct RawProfile {
    x: Vec<Vec<f64>>,
}

/// Contribution matrix: `x[i][ω]` is player `i`'s effort on project `ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    x: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawProfile::deserialize(deserializer)?;
        Ok(Profile { x: raw.x })
    }
}

impl Profile {
    /// Builds a profile and checks it against the game's shape and budgets.
    pub fn new(game: &Game, x: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let p = Profile { x };
        p.validate(game)?;
        Ok(p)
    }

    pub fn zeros(game: &Game) -> Self {
        Profile {
            x: vec![vec![0.0; game.num_projects()]; game.num_players()],
        }
    }

    /// Wraps a matrix without validation. Callers that build profiles from
    /// their own arithmetic use this and validate where it matters.
    pub fn from_rows_unchecked(x: Vec<Vec<f64>>) -> Self {
        Profile { x }
    }

    pub fn validate(&self, game: &Game) -> Result<(), GameError> {
        if self.x.len() != game.num_players() {
            return Err(GameError::ProfileRows {
                expected: game.num_players(),
                got: self.x.len(),
            });
        }
        for (player, row) in self.x.iter().enumerate() {
            if row.len() != game.num_projects() {
                return Err(GameError::ProfileColumns {
                    player,
                    expected: game.num_projects(),
                    got: row.len(),
                });
            }
            if let Some((project, &value)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(GameError::Contribution {
                    player,
                    project,
                    value,
                });
            }
            let spent: f64 = row.iter().sum();
            let budget = game.budget(player);
            if spent > budget + BUDGET_EPS {
                return Err(GameError::OverBudget {
                    player,
                    spent,
                    budget,
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, player: usize, project: usize) -> f64 {
        self.x[player][project]
    }

    pub fn row(&self, player: usize) -> &[f64] {
        &self.x[player]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn num_players(&self) -> usize {
        self.x.len()
    }

    pub fn num_projects(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn set_row(&mut self, player: usize, row: Vec<f64>) {
        self.x[player] = row;
    }

    /// Copy of this profile with player `player`'s strategy replaced.
    pub fn with_row(&self, player: usize, row: Vec<f64>) -> Profile {
        let mut p = self.clone();
        p.x[player] = row;
        p
    }

    pub fn project_total(&self, project: usize) -> f64 {
        self.x.iter().map(|r| r[project]).sum()
    }

    pub fn scaled(&self, factor: f64) -> Profile {
        Profile {
            x: self
                .x
                .iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// Largest absolute componentwise difference.
    pub fn linf_distance(&self, other: &Profile) -> f64 {
        self.x
            .iter()
            .flatten()
            .zip(other.x.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Sharing outcome on a single project.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectShare {
    /// Total contribution `x_ω`.
    pub total: f64,
    /// Project value `α_ω · x_ω`.
    pub value: f64,
    /// Players that receive an equal part of the value, ascending.
    pub sharers: Vec<usize>,
    /// Players outside the share set of a non-vacant project.
    pub dominated: Vec<usize>,
    /// Dominated players with a positive contribution.
    pub suppressed: Vec<usize>,
    /// Per-player share of the value.
    pub share: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub projects: Vec<ProjectShare>,
    pub utilities: Vec<f64>,
}

impl Evaluation {
    pub fn social_welfare(&self) -> f64 {
        self.projects
            .iter()
            .filter(|p| !p.sharers.is_empty())
            .map(|p| p.value)
            .sum()
    }
}

fn column_max(profile: &Profile, project: usize) -> f64 {
    profile
        .rows()
        .iter()
        .map(|r| r[project])
        .fold(0.0, f64::max)
}

/// Share set of `project`, ascending player indices.
pub fn share_set(game: &Game, profile: &Profile, project: usize) -> Vec<usize> {
    let max = column_max(profile, project);
    (0..profile.num_players())
        .filter(|&i| game.is_sharer(profile.get(i, project), max))
        .collect()
}

fn project_share(game: &Game, profile: &Profile, project: usize) -> ProjectShare {
    let n = profile.num_players();
    let total = profile.project_total(project);
    let value = game.alpha(project) * total;
    let sharers = share_set(game, profile, project);
    let mut share = vec![0.0; n];
    let mut dominated = Vec::new();
    let mut suppressed = Vec::new();
    if !sharers.is_empty() {
        let part = value / sharers.len() as f64;
        for &i in &sharers {
            share[i] = part;
        }
        let mut is_sharer = vec![false; n];
        for &i in &sharers {
            is_sharer[i] = true;
        }
        for i in (0..n).filter(|&i| !is_sharer[i]) {
            dominated.push(i);
            if profile.get(i, project) > 0.0 {
                suppressed.push(i);
            }
        }
    }
    ProjectShare {
        total,
        value,
        sharers,
        dominated,
        suppressed,
        share,
    }
}

/// Full sharing report and utilities.
pub fn evaluate(game: &Game, profile: &Profile) -> Evaluation {
    let projects: Vec<ProjectShare> = (0..game.num_projects())
        .map(|w| project_share(game, profile, w))
        .collect();
    let utilities = (0..game.num_players())
        .map(|i| projects.iter().map(|p| p.share[i]).sum())
        .collect();
    Evaluation {
        projects,
        utilities,
    }
}

/// Utility of one player, without building the whole report.
pub fn utility(game: &Game, profile: &Profile, player: usize) -> f64 {
    let mut u = 0.0;
    for w in 0..game.num_projects() {
        let max = column_max(profile, w);
        if !game.is_sharer(profile.get(player, w), max) {
            continue;
        }
        let count = (0..profile.num_players())
            .filter(|&j| game.is_sharer(profile.get(j, w), max))
            .count();
        u += game.alpha(w) * profile.project_total(w) / count as f64;
    }
    u
}

/// Total value of all projects that have at least one sharer.
pub fn social_welfare(game: &Game, profile: &Profile) -> f64 {
    (0..game.num_projects())
        .filter(|&w| column_max(profile, w) > 0.0)
        .map(|w| game.alpha(w) * profile.project_total(w))
        .sum()
}

/// Welfare of putting every budget on a most valuable project.
pub fn optimal_welfare(game: &Game) -> f64 {
    game.max_alpha() * game.total_budget()
}

/// A group of equal values together with the indices holding it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub value: f64,
    pub members: Vec<usize>,
}

impl Level {
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

/// Distinct coefficients and budgets in strictly decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStructure {
    pub project_levels: Vec<Level>,
    pub budget_levels: Vec<Level>,
}

impl LevelStructure {
    /// Number of project levels (`l`).
    pub fn l(&self) -> usize {
        self.project_levels.len()
    }

    /// Number of budget levels (`p`).
    pub fn p(&self) -> usize {
        self.budget_levels.len()
    }

    /// Number of steep projects.
    pub fn k(&self) -> usize {
        self.project_levels[0].count()
    }

    pub fn r(&self) -> Vec<usize> {
        self.project_levels.iter().map(Level::count).collect()
    }

    pub fn s(&self) -> Vec<usize> {
        self.budget_levels.iter().map(Level::count).collect()
    }
}

fn group_levels(values: &[f64]) -> Vec<Level> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut levels: Vec<Level> = Vec::new();
    for i in idx {
        match levels.last_mut() {
            Some(level) if level.value == values[i] => level.members.push(i),
            _ => levels.push(Level {
                value: values[i],
                members: vec![i],
            }),
        }
    }
    levels
}

pub fn level_structure(game: &Game) -> LevelStructure {
    LevelStructure {
        project_levels: group_levels(game.alphas()),
        budget_levels: group_levels(game.budgets()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one() -> Game {
        Game::new(0.2, vec![5.0, 20.0], vec![4.0, 2.0]).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            Game::new(1.5, vec![1.0], vec![1.0]),
            Err(GameError::Theta(1.5))
        );
        assert_eq!(
            Game::new(0.5, vec![], vec![1.0]),
            Err(GameError::NoPlayers)
        );
        assert_eq!(
            Game::new(0.5, vec![1.0], vec![]),
            Err(GameError::NoProjects)
        );
        assert!(matches!(
            Game::new(0.5, vec![1.0, 0.0], vec![1.0]),
            Err(GameError::Budget { index: 1, .. })
        ));
        assert!(matches!(
            Game::new(0.5, vec![1.0], vec![f64::NAN]),
            Err(GameError::Alpha { index: 0, .. })
        ));
    }

    #[test]
    fn profile_validation() {
        let g = example_one();
        assert!(Profile::new(&g, vec![vec![4.0, 1.0], vec![10.0, 10.0]]).is_ok());
        assert!(matches!(
            Profile::new(&g, vec![vec![4.0, 1.5], vec![10.0, 10.0]]),
            Err(GameError::OverBudget { player: 0, .. })
        ));
        assert!(matches!(
            Profile::new(&g, vec![vec![4.0, -1.0], vec![10.0, 10.0]]),
            Err(GameError::Contribution { player: 0, project: 1, .. })
        ));
        assert!(matches!(
            Profile::new(&g, vec![vec![4.0, 1.0]]),
            Err(GameError::ProfileRows { .. })
        ));
        // budget slack
        assert!(Profile::new(&g, vec![vec![5.0 + 5e-10, 0.0], vec![20.0, 0.0]]).is_ok());
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let g: Game =
            serde_json::from_str(r#"{"theta":0.2,"budgets":[5,20],"alphas":[4,2]}"#).unwrap();
        assert_eq!(g, example_one());
        let back: Game = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);

        let err = serde_json::from_str::<Game>(r#"{"budgets":[5],"alphas":[4]}"#).unwrap_err();
        assert!(err.to_string().contains("theta"));
        let err =
            serde_json::from_str::<Game>(r#"{"theta":0.2,"budgets":[5,-1],"alphas":[4]}"#)
                .unwrap_err();
        assert!(err.to_string().contains("budgets[1]"));
    }

    #[test]
    fn sorted_views_do_not_mutate() {
        let g = Game::new(0.5, vec![3.0, 1.0, 2.0], vec![1.0, 3.0, 3.0]).unwrap();
        assert_eq!(g.players_by_budget(), vec![1, 2, 0]);
        assert_eq!(g.projects_by_alpha(), vec![0, 1, 2]);
        assert_eq!(g.steep_projects(), vec![1, 2]);
        assert_eq!(g.budgets(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn example_one_shares() {
        let g = example_one();
        let x = Profile::new(&g, vec![vec![4.0, 1.0], vec![10.0, 10.0]]).unwrap();
        assert_eq!(share_set(&g, &x, 0), vec![0, 1]);
        assert_eq!(share_set(&g, &x, 1), vec![1]);
        let ev = evaluate(&g, &x);
        assert_eq!(ev.projects[0].share, vec![28.0, 28.0]);
        assert_eq!(ev.projects[1].share, vec![0.0, 22.0]);
        assert_eq!(ev.projects[1].suppressed, vec![0]);
        assert_eq!(ev.utilities, vec![28.0, 50.0]);
        assert_eq!(social_welfare(&g, &x), 78.0);
        assert_eq!(ev.social_welfare(), 78.0);
        assert_eq!(utility(&g, &x, 0), 28.0);
        assert_eq!(utility(&g, &x, 1), 50.0);
    }

    #[test]
    fn example_one_all_in() {
        let g = example_one();
        let x = Profile::new(&g, vec![vec![5.0, 0.0], vec![20.0, 0.0]]).unwrap();
        let ev = evaluate(&g, &x);
        assert_eq!(ev.utilities, vec![50.0, 50.0]);
        assert_eq!(social_welfare(&g, &x), 100.0);
        assert_eq!(optimal_welfare(&g), 100.0);
        assert!(ev.projects[1].sharers.is_empty());
        assert!(ev.projects[1].dominated.is_empty());
    }

    #[test]
    fn zero_profile() {
        let g = example_one();
        let x = Profile::zeros(&g);
        assert_eq!(evaluate(&g, &x).utilities, vec![0.0, 0.0]);
        assert_eq!(social_welfare(&g, &x), 0.0);
        assert!(share_set(&g, &x, 0).is_empty());
    }

    #[test]
    fn theta_zero_everyone_shares_non_vacant() {
        let g = Game::new(0.0, vec![1.0, 2.0], vec![1.0, 3.0]).unwrap();
        let x = Profile::new(&g, vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let ev = evaluate(&g, &x);
        assert_eq!(ev.projects[0].sharers, vec![0, 1]);
        assert_eq!(ev.utilities, vec![0.5 + 3.0, 0.5 + 3.0]);
    }

    #[test]
    fn threshold_boundary_tolerance() {
        let g = Game::new(0.3, vec![1.0, 1.0], vec![1.0]).unwrap();
        let x = Profile::new(&g, vec![vec![0.3 * 0.7], vec![0.7]]).unwrap();
        assert_eq!(share_set(&g, &x, 0), vec![0, 1]);
    }

    #[test]
    fn optimal_welfare_examples() {
        let g = Game::new(0.5, vec![1.0], vec![1.0]).unwrap();
        assert_eq!(optimal_welfare(&g), 1.0);
        let g = Game::new(0.5, vec![1.0, 2.0], vec![3.0, 1.0]).unwrap();
        assert_eq!(optimal_welfare(&g), 9.0);
    }

    #[test]
    fn levels() {
        let g = Game::new(0.5, vec![1.0, 1.0, 2.0], vec![3.0, 1.0, 1.0]).unwrap();
        let ls = level_structure(&g);
        assert_eq!((ls.l(), ls.p(), ls.k()), (2, 2, 1));
        assert_eq!(ls.r(), vec![1, 2]);
        assert_eq!(ls.s(), vec![1, 2]);
        assert_eq!(ls.project_levels[1].members, vec![1, 2]);
        assert_eq!(ls.budget_levels[0].members, vec![2]);

        let g = Game::new(0.5, vec![5.0, 5.0], vec![2.0, 2.0]).unwrap();
        let ls = level_structure(&g);
        assert_eq!((ls.l(), ls.p(), ls.k()), (1, 1, 2));

        let ls = level_structure(&example_one());
        assert_eq!((ls.l(), ls.p(), ls.k()), (2, 2, 1));
    }
}
