//! Thresholded shared effort games.
//!
//! Players split effort budgets over projects with linear values. A
//! project's value is shared equally by the players whose contribution is at
//! least a `θ` fraction of the largest one.

pub mod bestresponse;
pub mod equilibrium;
pub mod game;
pub mod isfp;
pub mod theory;

pub use bestresponse::{
    best_response_2p, best_response_grid, breakpoints, subset_sum_game, BestResponse, BrError,
    Breakpoints, LimitWitness, Maximizer, Responder, Side, SubsetSumGame,
};
pub use game::{
    evaluate, level_structure, optimal_welfare, share_set, social_welfare, utility, Evaluation,
    Game, GameError, Level, LevelStructure, Profile, ProjectShare,
};
pub use equilibrium::{
    efficiency, verify_cyclically_strong, verify_ne, verify_ne_eps, CyclicVerdict, EqError,
    NeVerdict, VerifyMode,
};
pub use theory::{
    efficiency_two_player, poa_lower_bound_smooth, predict, predict_n_player_sufficient,
    predict_theta0, predict_theta1, predict_two_player, scale_budgets_profile, scale_projects,
    tight_bound, CaseId, Prediction, TheoryError, Verdict,
};
pub use isfp::{
    detect_ne, isfp_step, run_isfp, run_isfp_traced, BeliefState, IsfpConfig, IsfpError,
    IsfpResult,
};
