//! Single-game report.

use shared_effort::equilibrium::{verify_cyclically_strong, CyclicVerdict};
use shared_effort::{
    efficiency, level_structure, optimal_welfare, predict, run_isfp, social_welfare, verify_ne,
    Game, IsfpConfig, NeVerdict, Profile, VerifyMode,
};
use std::fmt::Write;

fn mode_for(game: &Game) -> VerifyMode {
    IsfpConfig::default().mode_for(game)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn fmt_profile(x: &Profile) -> String {
    let rows: Vec<String> = x
        .rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.6}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn fmt_verdict(v: &NeVerdict) -> String {
    match v {
        NeVerdict::IsNe => "equilibrium".into(),
        NeVerdict::NoGridDeviation { resolution } => {
            format!("no deviation on grid of resolution {resolution}")
        }
        NeVerdict::Deviation {
            player,
            action,
            gain,
        } => format!(
            "player {player} gains {gain:.6} by playing {}",
            fmt_profile(&Profile::from_rows_unchecked(vec![action.clone()]))
        ),
    }
}

fn fmt_cyclic(game: &Game, x: &Profile, mode: VerifyMode) -> String {
    match verify_cyclically_strong(game, x, mode) {
        Ok(CyclicVerdict::IsCyclicallyStrong) => "cyclically strong".into(),
        Ok(CyclicVerdict::Violation { cycle, gains }) => {
            format!("violated by cycle {cycle:?} with gains {gains:?}")
        }
        Ok(CyclicVerdict::Unknown { reason }) => format!("unknown ({reason})"),
        Err(e) => format!("not checked ({e})"),
    }
}

fn profile_section(out: &mut String, label: &str, game: &Game, x: &Profile, mode: VerifyMode) {
    let _ = writeln!(out, "{label}: {}", fmt_profile(x));
    match verify_ne(game, x, mode) {
        Ok(v) => {
            let _ = writeln!(out, "  verification: {}", fmt_verdict(&v));
            if v.is_ne() {
                let _ = writeln!(out, "  cyclic: {}", fmt_cyclic(game, x, mode));
            }
        }
        Err(e) => {
            let _ = writeln!(out, "  verification failed: {e}");
        }
    }
    let _ = writeln!(
        out,
        "  welfare: {:.6}  efficiency: {:.6}",
        social_welfare(game, x),
        efficiency(game, x)
    );
}

/// Human-readable analysis of a game: levels, predictions with verified
/// witnesses, and a fictitious-play run.
pub fn analyze(game: &Game, config: &IsfpConfig) -> String {
    let mode = mode_for(game);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "game: theta = {}, budgets = {:?}, alphas = {:?}",
        game.theta(),
        game.budgets(),
        game.alphas()
    );
    let ls = level_structure(game);
    let _ = writeln!(
        out,
        "levels: l = {}, r = {:?}, p = {}, s = {:?}, k = {}",
        ls.l(),
        ls.r(),
        ls.p(),
        ls.s(),
        ls.k()
    );
    let _ = writeln!(out, "optimal welfare: {:.6}", optimal_welfare(game));

    let p = predict(game);
    let _ = writeln!(out, "prediction: {} (case {})", p.verdict, p.case_id);
    let _ = writeln!(
        out,
        "  pos: {}  poa: {}  poa lower bound: {}",
        fmt_opt(p.pos),
        fmt_opt(p.poa),
        fmt_opt(p.poa_lower_bound)
    );
    if let Some(w) = &p.witness {
        profile_section(&mut out, "witness", game, w, mode);
    }
    if let Some(w) = &p.worst_witness {
        profile_section(&mut out, "worst witness", game, w, mode);
    }

    match run_isfp(game, config) {
        Ok(r) if r.converged => {
            let _ = writeln!(
                out,
                "isfp: equilibrium found in restart {} after {} iterations",
                r.restart.unwrap_or_default(),
                r.iterations.unwrap_or_default()
            );
            if let Some(x) = &r.profile {
                profile_section(&mut out, "isfp profile", game, x, mode);
            }
        }
        Ok(r) => {
            let _ = writeln!(
                out,
                "isfp: no equilibrium found in {} restarts",
                r.log.len()
            );
        }
        Err(e) => {
            let _ = writeln!(out, "isfp: failed ({e})");
        }
    }
    out
}
