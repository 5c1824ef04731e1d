//! Equilibrium checks and efficiency of profiles.

use crate::bestresponse::{best_response_2p, best_response_grid, BrError, Responder};
use crate::game::{evaluate, optimal_welfare, social_welfare, Game, GameError, Profile, BUDGET_EPS};
use serde::Serialize;
use thiserror::Error;

/// Default absolute gain below which a deviation does not count.
pub const NE_EPS: f64 = 1e-9;

/// Largest number of single-project players the cycle search enumerates.
pub const CYCLE_PLAYER_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EqError {
    #[error("exact verification needs exactly 2 projects, game has {0}")]
    ExactModeUnavailable(usize),
    #[error("profile is not a Nash equilibrium")]
    NotAnNe,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    BestResponse(BrError),
}

impl From<BrError> for EqError {
    fn from(e: BrError) -> Self {
        match e {
            BrError::NotTwoProjects(m) => EqError::ExactModeUnavailable(m),
            other => EqError::BestResponse(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerifyMode {
    /// Exact best responses; two projects only.
    Exact,
    /// Grid best responses with the given number of steps per budget.
    Grid(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NeVerdict {
    IsNe,
    /// No profitable deviation exists on the grid; not a proof of equilibrium.
    NoGridDeviation { resolution: u64 },
    Deviation {
        player: usize,
        action: Vec<f64>,
        gain: f64,
    },
}

impl NeVerdict {
    pub fn is_ne(&self) -> bool {
        !matches!(self, NeVerdict::Deviation { .. })
    }
}

pub fn verify_ne(game: &Game, profile: &Profile, mode: VerifyMode) -> Result<NeVerdict, EqError> {
    verify_ne_eps(game, profile, mode, NE_EPS)
}

pub fn verify_ne_eps(
    game: &Game,
    profile: &Profile,
    mode: VerifyMode,
    eps: f64,
) -> Result<NeVerdict, EqError> {
    profile.validate(game)?;
    if mode == VerifyMode::Exact && game.num_projects() != 2 {
        return Err(EqError::ExactModeUnavailable(game.num_projects()));
    }
    for i in 0..game.num_players() {
        if let Some((action, gain)) = deviation(game, profile, i, mode, eps)? {
            return Ok(NeVerdict::Deviation {
                player: i,
                action,
                gain,
            });
        }
    }
    Ok(match mode {
        VerifyMode::Exact => NeVerdict::IsNe,
        VerifyMode::Grid(resolution) => NeVerdict::NoGridDeviation { resolution },
    })
}

/// A profitable deviation of `player`, if any, with its gain.
pub fn deviation(
    game: &Game,
    profile: &Profile,
    player: usize,
    mode: VerifyMode,
    eps: f64,
) -> Result<Option<(Vec<f64>, f64)>, EqError> {
    let resp = Responder::new(game, profile, player)?;
    let current = resp.utility(profile.row(player));
    let br = match mode {
        VerifyMode::Exact => best_response_2p(game, profile, player)?,
        VerifyMode::Grid(r) => best_response_grid(game, profile, player, r)?,
    };
    if br.sup_value - current <= eps {
        return Ok(None);
    }
    if let Some(action) = br.action() {
        let gain = resp.utility(&action) - current;
        return Ok(Some((action, gain)));
    }
    // unattained: walk toward the limit point until the gain shows up
    let witness = br
        .limit_witness
        .as_ref()
        .expect("unattained best response carries a limit witness");
    let mut delta = 1e-3 * resp.budget();
    let mut action = witness.action_near(delta);
    while delta > 1e-15 {
        action = witness.action_near(delta);
        if resp.utility(&action) > current + eps {
            break;
        }
        delta /= 2.0;
    }
    let gain = resp.utility(&action) - current;
    Ok(Some((action, gain)))
}

/// Welfare relative to the optimum.
pub fn efficiency(game: &Game, profile: &Profile) -> f64 {
    social_welfare(game, profile) / optimal_welfare(game)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CyclicVerdict {
    IsCyclicallyStrong,
    /// Players of `cycle` each move their whole budget to the project of the
    /// next one; `gains` lists their utility changes in cycle order.
    Violation { cycle: Vec<usize>, gains: Vec<f64> },
    Unknown { reason: String },
}

/// Project holding player `i`'s entire budget, if there is one.
pub fn whole_budget_project(game: &Game, profile: &Profile, i: usize) -> Option<usize> {
    let b = game.budget(i);
    (0..game.num_projects()).find(|&w| profile.get(i, w) >= b - BUDGET_EPS)
}

/// Simple cycles over `players` of length at least 2, each listed once with
/// its smallest position first, where consecutive players sit on
/// different projects.
pub(crate) fn cycles(players: &[usize], project_of: &[usize]) -> Vec<Vec<usize>> {
    fn extend(
        start: usize,
        path: &mut Vec<usize>,
        used: &mut [bool],
        project_of: &[usize],
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *path.last().unwrap();
        if path.len() >= 2 && project_of[last] != project_of[start] {
            out.push(path.clone());
        }
        for next in start + 1..project_of.len() {
            if !used[next] && project_of[next] != project_of[last] {
                used[next] = true;
                path.push(next);
                extend(start, path, used, project_of, out);
                path.pop();
                used[next] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut used = vec![false; players.len()];
    for start in 0..players.len() {
        used[start] = true;
        extend(start, &mut vec![start], &mut used, project_of, &mut out);
        used[start] = false;
    }
    out.into_iter()
        .map(|c| c.into_iter().map(|pos| players[pos]).collect())
        .collect()
}

/// Applies a whole-budget rotation and returns each deviator's gain.
pub fn rotation_gains(game: &Game, profile: &Profile, cycle: &[usize]) -> Vec<f64> {
    let before = evaluate(game, profile).utilities;
    let projects: Vec<usize> = cycle
        .iter()
        .map(|&i| whole_budget_project(game, profile, i).expect("whole-budget player"))
        .collect();
    let mut moved = profile.clone();
    for (pos, &i) in cycle.iter().enumerate() {
        let target = projects[(pos + 1) % cycle.len()];
        let mut row = vec![0.0; game.num_projects()];
        row[target] = game.budget(i);
        moved.set_row(i, row);
    }
    let after = evaluate(game, &moved).utilities;
    cycle.iter().map(|&i| after[i] - before[i]).collect()
}

pub fn verify_cyclically_strong(
    game: &Game,
    profile: &Profile,
    mode: VerifyMode,
) -> Result<CyclicVerdict, EqError> {
    if !verify_ne(game, profile, mode)?.is_ne() {
        return Err(EqError::NotAnNe);
    }
    let (players, project_of): (Vec<usize>, Vec<usize>) = (0..game.num_players())
        .filter_map(|i| whole_budget_project(game, profile, i).map(|w| (i, w)))
        .unzip();
    if players.len() > CYCLE_PLAYER_CAP {
        return Ok(CyclicVerdict::Unknown {
            reason: format!(
                "{} single-project players exceed the enumeration cap of {}",
                players.len(),
                CYCLE_PLAYER_CAP
            ),
        });
    }
    for cycle in cycles(&players, &project_of) {
        let gains = rotation_gains(game, profile, &cycle);
        let nobody_loses = gains.iter().all(|&g| g >= -NE_EPS);
        let someone_gains = gains.iter().any(|&g| g > NE_EPS);
        if nobody_loses && someone_gains {
            return Ok(CyclicVerdict::Violation { cycle, gains });
        }
    }
    Ok(CyclicVerdict::IsCyclicallyStrong)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::utility;

    fn example_one() -> Game {
        Game::new(0.2, vec![5.0, 20.0], vec![4.0, 2.0]).unwrap()
    }

    #[test]
    fn example_one_equilibrium() {
        let g = example_one();
        let x = Profile::new(&g, vec![vec![5.0, 0.0], vec![20.0, 0.0]]).unwrap();
        assert_eq!(verify_ne(&g, &x, VerifyMode::Exact).unwrap(), NeVerdict::IsNe);
        assert_eq!(efficiency(&g, &x), 1.0);
        assert!(verify_ne(&g, &x, VerifyMode::Grid(100)).unwrap().is_ne());
    }

    #[test]
    fn example_one_deviation() {
        let g = example_one();
        let x = Profile::new(&g, vec![vec![4.0, 1.0], vec![10.0, 10.0]]).unwrap();
        match verify_ne(&g, &x, VerifyMode::Exact).unwrap() {
            NeVerdict::Deviation { player, gain, .. } => {
                assert_eq!(player, 0);
                assert!(gain >= 2.0);
            }
            v => panic!("{v:?}"),
        }
        // the hour moved back to the first project
        let moved = x.with_row(0, vec![5.0, 0.0]);
        assert_eq!(utility(&g, &moved, 0) - utility(&g, &x, 0), 2.0);
        assert!(deviation(&g, &x, 1, VerifyMode::Exact, NE_EPS)
            .unwrap()
            .is_none());
    }

    #[test]
    fn unattained_deviation_is_realized() {
        let g = Game::new(0.5, vec![1.0, 1.0], vec![9.0, 10.0]).unwrap();
        let x = Profile::new(&g, vec![vec![0.8, 0.2], vec![0.4, 0.0]]).unwrap();
        let (action, gain) = deviation(&g, &x, 0, VerifyMode::Exact, NE_EPS)
            .unwrap()
            .unwrap();
        assert!(gain > NE_EPS);
        assert!(action[0] > 0.8);
    }

    #[test]
    fn exact_mode_rejects_three_projects() {
        let g = Game::new(0.5, vec![1.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            verify_ne(&g, &Profile::zeros(&g), VerifyMode::Exact),
            Err(EqError::ExactModeUnavailable(3))
        );
    }

    #[test]
    fn zero_profile_efficiency() {
        let g = example_one();
        assert_eq!(efficiency(&g, &Profile::zeros(&g)), 0.0);
    }

    #[test]
    fn cycle_enumeration_counts() {
        // four players on four distinct projects: every ordering of every
        // subset of size ≥ 2 up to rotation
        let c = cycles(&[0, 1, 2, 3], &[0, 1, 2, 3]);
        // C(4,2)·1 + C(4,3)·2 + C(4,4)·6
        assert_eq!(c.len(), 6 + 8 + 6);
        // same project neighbours are not cycles
        assert!(cycles(&[0, 1], &[0, 0]).is_empty());
    }

    #[test]
    fn cyclic_needs_ne() {
        let g = example_one();
        let x = Profile::new(&g, vec![vec![4.0, 1.0], vec![10.0, 10.0]]).unwrap();
        assert_eq!(
            verify_cyclically_strong(&g, &x, VerifyMode::Exact),
            Err(EqError::NotAnNe)
        );
    }

    #[test]
    fn single_player_is_vacuously_cyclic() {
        let g = Game::new(0.5, vec![1.0], vec![1.0, 2.0]).unwrap();
        let x = Profile::new(&g, vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            verify_cyclically_strong(&g, &x, VerifyMode::Exact).unwrap(),
            CyclicVerdict::IsCyclicallyStrong
        );
    }

    /// Every ordered selection of distinct positions, rotated so the smallest
    /// comes first, kept when neighbours (and the closing pair) differ.
    fn brute_force_cycles(project_of: &[usize]) -> Vec<Vec<usize>> {
        fn perms(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() >= 2 {
                out.push(cur.clone());
            }
            for next in 0..n {
                if !cur.contains(&next) {
                    cur.push(next);
                    perms(n, cur, out);
                    cur.pop();
                }
            }
        }
        let mut all = Vec::new();
        perms(project_of.len(), &mut Vec::new(), &mut all);
        let mut out: Vec<Vec<usize>> = all
            .into_iter()
            .filter(|c| {
                (0..c.len()).all(|j| project_of[c[j]] != project_of[c[(j + 1) % c.len()]])
            })
            .map(|mut c| {
                let min = (0..c.len()).min_by_key(|&j| c[j]).unwrap();
                c.rotate_left(min);
                c
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    proptest::proptest! {
        #[test]
        fn cycles_match_brute_force(project_of in proptest::collection::vec(0usize..3, 1..=6)) {
            let players: Vec<usize> = (0..project_of.len()).collect();
            let mut got = cycles(&players, &project_of);
            got.sort();
            let want = brute_force_cycles(&project_of);
            proptest::prop_assert_eq!(got, want);
        }
    }
}
