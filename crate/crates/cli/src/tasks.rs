//! One task at one parameter point: validated inputs in, tables out.

use naeq_core::{
    ad_targeting_analytic, ad_targeting_monte_carlo, advertising_nae, audit_assumptions, certify,
    discount_elasticity, price_duopoly_nae, price_symmetric_nae, postmerger_outcomes,
    run_adjustment, run_replacement, shock_discount_alpha, solve_alpha_equilibrium, solve_nae,
    team_production_nae, verify_nae, AdFormula, AdPolicy, Assumption, AuditStatus, BiasProfile,
    GameSpec, Mode, NaeMethod, NaeReport, SolverSettings,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{self, field, Built, DynamicsMode, NaeMethodChoice, ScenarioConfig, Task};
use crate::error::CliError;
use crate::table::{fmt_num, indexed, Cell, Table};

#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub json: Vec<(String, Value)>,
    pub warnings: Vec<String>,
}

/// Inputs checked before anything is solved.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub task: Task,
    pub built: Built,
    pub profiles: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
}

fn label<T: Serialize>(t: &T) -> String {
    match serde_json::to_value(t) {
        Ok(Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";")
}

fn to_json<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).unwrap_or(Value::Null)
}

fn need_game(built: &Built, task: Task) -> Result<GameSpec, CliError> {
    built
        .game()
        .ok_or_else(|| field("game.kind", format!("task {} needs a strategic game", label(&task))))
}

pub fn prepare(
    cfg: &ScenarioConfig,
    task: Task,
    game: &Value,
    at: &str,
    seed: Option<u64>,
) -> Result<Prepared, CliError> {
    let (_, built) = config::build_game(game, at)?;
    cfg.solver.validate().map_err(|e| field("solver", e.to_string()))?;
    let mut profiles = None;
    match task {
        Task::Sweep => return Err(field("sweep.task", "a sweep cannot nest another sweep")),
        Task::SolveAlphaEq | Task::Verify => {
            let g = need_game(&built, task)?;
            let spec = cfg.alphas.as_ref().ok_or_else(|| field("alphas", "required by this task"))?;
            profiles = Some(config::profiles(spec, g.n())?);
        }
        Task::SolveNae | Task::Audit => {
            need_game(&built, task)?;
        }
        Task::Merger => {
            if !matches!(built, Built::Merger(_)) {
                return Err(field("game.kind", "the merger task needs a merger game"));
            }
        }
        Task::SimulateMicrofound => match built {
            Built::Discount(_) | Built::AdTargeting(_) => {
                if seed.is_none() {
                    return Err(field("seed", "required by stochastic tasks"));
                }
            }
            Built::Shock(_) => {}
            _ => return Err(field("game.kind", "not a microfoundation experiment")),
        },
        Task::SimulateDynamics => {
            let g = need_game(&built, task)?;
            let d = &cfg.dynamics;
            match d.mode {
                DynamicsMode::Replacement => {
                    if seed.is_none() {
                        return Err(field("seed", "required by stochastic tasks"));
                    }
                    d.replacement
                        .validate(g.n())
                        .map_err(|e| field("dynamics.replacement", e.to_string()))?;
                }
                DynamicsMode::Adjustment => {
                    d.adjustment
                        .validate(&g)
                        .map_err(|e| field("dynamics.adjustment", e.to_string()))?;
                    let a = d.alpha.as_ref().ok_or_else(|| field("dynamics.alpha", "required for adjustment"))?;
                    if a.len() != g.n() || a.iter().any(|v| !(*v > 0.0)) {
                        return Err(field("dynamics.alpha", "need one positive bias per player"));
                    }
                }
            }
        }
    }
    if task.stochastic() && matches!(cfg.replications, Some(0)) {
        return Err(field("replications", "must be at least 1"));
    }
    Ok(Prepared {
        task,
        built,
        profiles,
        seed,
    })
}

pub fn run(cfg: &ScenarioConfig, p: &Prepared) -> Result<Output, CliError> {
    match p.task {
        Task::SolveAlphaEq => alpha_equilibria(cfg, p),
        Task::SolveNae => nae(cfg, p),
        Task::Audit => audit(cfg, p),
        Task::Verify => verify(cfg, p),
        Task::Merger => merger(p),
        Task::SimulateMicrofound => microfound(cfg, p),
        Task::SimulateDynamics => dynamics(cfg, p),
        Task::Sweep => Err(field("task", "sweeps are expanded before dispatch")),
    }
}

fn bias(cfg: &ScenarioConfig, alpha: &[f64]) -> Result<BiasProfile, CliError> {
    Ok(BiasProfile::with_function(alpha.to_vec(), cfg.nae.bias)?)
}

fn alpha_equilibria(cfg: &ScenarioConfig, p: &Prepared) -> Result<Output, CliError> {
    let game = need_game(&p.built, p.task)?;
    let n = game.n();
    let mut header = indexed("alpha", n);
    header.extend(indexed("x", n));
    header.extend(indexed("demand", n));
    header.extend(indexed("profit", n));
    header.extend(["residual".into(), "iterations".into()]);
    let mut t = Table::with_header("alpha_equilibria", header);
    for alpha in p.profiles.as_deref().unwrap_or_default() {
        let r = solve_alpha_equilibrium(&game, &bias(cfg, alpha)?, &cfg.solver)?;
        let mut row: Vec<Cell> = alpha.iter().map(|&a| a.into()).collect();
        row.extend(r.x.0.iter().map(|&v| Cell::from(v)));
        row.extend(r.demands.iter().map(|&v| Cell::from(v)));
        row.extend(r.profits.iter().map(|&v| Cell::from(v)));
        row.push(r.residual.into());
        row.push(r.iterations.into());
        t.push(row);
    }
    Ok(Output {
        tables: vec![t],
        ..Default::default()
    })
}

/// Closed form where one applies (unless the generic solver is forced),
/// the outer loop otherwise.
pub fn nae_report(cfg: &ScenarioConfig, built: &Built) -> Result<NaeReport, CliError> {
    let game = need_game(built, Task::SolveNae)?;
    let s = &cfg.nae;
    let auto = cfg.method == NaeMethodChoice::Auto;
    let mut r = match built {
        Built::Price(m) if auto && m.n() == 2 => price_duopoly_nae(m)?,
        Built::Price(m) if auto => match price_symmetric_nae(m) {
            Ok(r) => r,
            Err(naeq_core::Error::InvalidParameter(_)) => solve_nae(&game, s)?,
            Err(e) => return Err(e.into()),
        },
        Built::Advertising(m) if auto => advertising_nae(m)?,
        Built::Team(t) => team_production_nae(t, s)?,
        _ => solve_nae(&game, s)?,
    };
    if r.method == NaeMethod::ClosedForm && s.certify && game.n() > 1 {
        certify(&game, &mut r, s)?;
    }
    Ok(r)
}

fn nae(cfg: &ScenarioConfig, p: &Prepared) -> Result<Output, CliError> {
    let r = nae_report(cfg, &p.built)?;
    let n = r.x_star.0.len();
    let mut alpha = Table::new("alpha_star", &["player", "alpha_star", "method"]);
    let mut prices = Table::new(
        "prices",
        &["player", "x_nash", "x_star", "demand_nash", "demand_star", "profit_nash", "profit_star"],
    );
    let mut checks = Table::new(
        "checks",
        &["player", "slope_identity_relative", "stackelberg_gap", "leader_distance", "unbiased_reply", "verified"],
    );
    let verified = r.verification.as_ref().map(|v| v.holds);
    for i in 0..n {
        alpha.push(vec![i.into(), r.alpha_star[i].into(), label(&r.method).into()]);
        prices.push(vec![
            i.into(),
            r.nash_reference.x.0[i].into(),
            r.x_star.0[i].into(),
            r.nash_reference.demands[i].into(),
            r.demands[i].into(),
            r.nash_reference.profits[i].into(),
            r.profits[i].into(),
        ]);
        checks.push(vec![
            i.into(),
            r.slope_identity.get(i).map(|c| c.relative).into(),
            r.stackelberg_gaps.get(i).copied().into(),
            r.leader_distance.get(i).copied().into(),
            r.unbiased_replies.get(i).copied().into(),
            verified.into(),
        ]);
    }
    let mut tables = vec![alpha, prices, checks];
    if let Some(c) = &r.classification {
        let mut t = Table::new("directions", &["check", "predicted", "observed", "holds"]);
        let signs = |v: &[naeq_core::Sign]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";");
        t.push(vec![
            "reply-direction".into(),
            c.reply_direction.predicted.to_string().into(),
            signs(&c.reply_direction.observed).into(),
            c.reply_direction.holds.into(),
        ]);
        t.push(vec![
            "bias-direction".into(),
            c.bias_direction.predicted.to_string().into(),
            signs(&c.bias_direction.observed).into(),
            c.bias_direction.holds.into(),
        ]);
        t.push(vec![
            "pareto".into(),
            c.pareto.predicted.as_ref().map(label).into(),
            label(&c.pareto.observed).into(),
            c.pareto.holds.into(),
        ]);
        tables.push(t);
    }
    let mut warnings = r.warnings.clone();
    if let Some(a) = &r.audit {
        warnings.extend(audit_warnings(a));
        tables.push(witnesses(a));
    }
    Ok(Output {
        tables,
        json: vec![("nae_report".into(), to_json(&r))],
        warnings,
    })
}

fn audit_warnings(a: &naeq_core::AuditReport) -> Vec<String> {
    a.passed
        .iter()
        .filter_map(|(k, s)| match s {
            AuditStatus::HeuristicPass => Some(format!("audit: {k:?} passed by numeric search only")),
            AuditStatus::Fail => Some(format!("audit: {k:?} failed")),
            _ => None,
        })
        .collect()
}

fn witnesses(a: &naeq_core::AuditReport) -> Table {
    let mut w = Table::new("witnesses", &["assumption", "player", "other", "value", "alpha", "x", "note"]);
    for x in &a.witnesses {
        w.push(vec![
            format!("{:?}", x.assumption).into(),
            x.player.into(),
            x.other.into(),
            x.value.into(),
            joined(&x.alpha).into(),
            joined(&x.x).into(),
            x.note.clone().into(),
        ]);
    }
    w
}

fn audit(cfg: &ScenarioConfig, p: &Prepared) -> Result<Output, CliError> {
    let game = need_game(&p.built, p.task)?;
    let a = audit_assumptions(&game, &cfg.nae.bias, &cfg.audit)?;
    let mut status = Table::new("assumptions", &["assumption", "status"]);
    for k in [Assumption::A1, Assumption::A2, Assumption::A3, Assumption::A4, Assumption::A5, Assumption::A6] {
        if let Some(s) = a.passed.get(&k) {
            status.push(vec![format!("{k:?}").into(), label(s).into()]);
        }
    }
    let mut signs = Table::new("signs", &["quantity", "sign"]);
    for (q, s) in [("comp", a.sign_comp), ("extr", a.sign_extr), ("partial", a.sign_partial)] {
        signs.push(vec![q.into(), s.map(|s| s.to_string()).into()]);
    }
    Ok(Output {
        tables: vec![status, signs, witnesses(&a)],
        json: vec![("audit".into(), to_json(&a))],
        warnings: audit_warnings(&a),
    })
}

fn verify(cfg: &ScenarioConfig, p: &Prepared) -> Result<Output, CliError> {
    let game = need_game(&p.built, p.task)?;
    let n = game.n();
    let mut header = indexed("alpha", n);
    header.extend(indexed("x", n));
    header.extend(
        ["holds", "worst_violation", "worst_player", "worst_alpha", "inconclusive", "checked"].map(String::from),
    );
    let mut t = Table::with_header("verdicts", header);
    let mut verdicts = Vec::new();
    for alpha in p.profiles.as_deref().unwrap_or_default() {
        let b = bias(cfg, alpha)?;
        let x = solve_alpha_equilibrium(&game, &b, &cfg.solver)?.x;
        let v = verify_nae(&game, &b, &x, &cfg.nae.deviation_grid, &cfg.solver)?;
        let mut row: Vec<Cell> = alpha.iter().map(|&a| a.into()).collect();
        row.extend(x.0.iter().map(|&v| Cell::from(v)));
        row.push(v.holds.into());
        row.push(v.worst_violation.into());
        row.push(v.worst.as_ref().map(|d| d.player).into());
        row.push(v.worst.as_ref().map(|d| d.alpha).into());
        row.push(v.inconclusive.len().into());
        row.push(v.checked.into());
        t.push(row);
        verdicts.push(v);
    }
    Ok(Output {
        tables: vec![t],
        json: vec![("verdicts".into(), to_json(&verdicts))],
        warnings: Vec::new(),
    })
}

fn merger(p: &Prepared) -> Result<Output, CliError> {
    let Built::Merger(s) = &p.built else {
        return Err(field("game.kind", "the merger task needs a merger game"));
    };
    let o = postmerger_outcomes(s)?;
    let pr = &o.prices;
    let mut mc = Table::new("mc", &["mc"]);
    mc.push(vec![o.mc.into()]);
    let mut alpha = Table::new("alpha", &["alpha_pre", "alpha_post"]);
    alpha.push(vec![o.alpha_pre.into(), o.alpha_post.into()]);
    let cols = ["pre", "pre_nash", "post_mc", "post_alpha_pre", "post_alpha_post"];
    let mut firm1 = Table::new("firm1_prices", &cols);
    firm1.push(vec![
        pr.pre.into(),
        pr.pre_nash.into(),
        pr.post_mc.firm1.into(),
        pr.post_alpha_pre.firm1.into(),
        pr.post_alpha_post.firm1.into(),
    ]);
    let mut merged = Table::new("merged_prices", &cols);
    merged.push(vec![
        pr.pre.into(),
        pr.pre_nash.into(),
        pr.post_mc.merged.into(),
        pr.post_alpha_pre.merged.into(),
        pr.post_alpha_post.merged.into(),
    ]);
    let mut ord = Table::new("ordering", &["ordering_holds", "ordering_margin"]);
    ord.push(vec![o.ordering_holds.into(), o.ordering_margin.into()]);
    Ok(Output {
        tables: vec![mc, alpha, firm1, merged, ord],
        json: vec![("merger_outcome".into(), to_json(&o))],
        warnings: o.notes.clone(),
    })
}

fn z_score(est: f64, se: Option<f64>, truth: f64) -> f64 {
    se.map_or(f64::NAN, |s| (est - truth) / s)
}

fn microfound(cfg: &ScenarioConfig, p: &Prepared) -> Result<Output, CliError> {
    let reps = cfg.replications.unwrap_or(20);
    let base = p.seed.unwrap_or(0);
    match &p.built {
        Built::Discount(e) => {
            let truth = discount_elasticity(e, Mode::Analytic)?;
            let runs: Vec<_> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut e = e.clone();
                    e.seed = base.wrapping_add(r as u64);
                    discount_elasticity(&e, Mode::MonteCarlo).map(|m| (e.seed, m))
                })
                .collect::<naeq_core::Result<_>>()?;
            let mut t = Table::new(
                "replications",
                &["replication", "seed", "eta_hat", "std_error", "eta_hat_analytic", "z", "implied_alpha", "implied_alpha_analytic"],
            );
            let mut zmax = 0.0f64;
            let mut within = 0usize;
            for (r, (seed, m)) in runs.iter().enumerate() {
                let z = z_score(m.eta_hat, m.std_error, truth.eta_hat);
                zmax = zmax.max(z.abs());
                within += usize::from(z.abs() <= 3.0);
                t.push(vec![
                    r.into(),
                    (*seed).into(),
                    m.eta_hat.into(),
                    m.std_error.into(),
                    truth.eta_hat.into(),
                    z.into(),
                    m.implied_alpha.into(),
                    truth.implied_alpha.into(),
                ]);
            }
            let mut s = Table::new(
                "summary",
                &["replications", "eta_hat_analytic", "eta_true_naive", "eta_true_derived", "implied_alpha", "max_abs_z", "within_3se"],
            );
            s.push(vec![
                reps.into(),
                truth.eta_hat.into(),
                truth.eta_true_naive.into(),
                truth.eta_true_derived.into(),
                truth.implied_alpha.into(),
                zmax.into(),
                within.into(),
            ]);
            Ok(Output {
                tables: vec![t, s],
                json: Vec::new(),
                warnings: vec![
                    "true elasticity reported with both the naive and the average-demand denominator".into(),
                ],
            })
        }
        Built::AdTargeting(e) => {
            let corrected = ad_targeting_analytic(e, AdFormula::Corrected)?;
            let naive = ad_targeting_analytic(e, AdFormula::Naive)?;
            let runs: Vec<_> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut e = e.clone();
                    e.seed = base.wrapping_add(r as u64);
                    ad_targeting_monte_carlo(&e).map(|m| (e.seed, m))
                })
                .collect::<naeq_core::Result<_>>()?;
            let mut t = Table::new(
                "replications",
                &["replication", "seed", "estimate", "std_error", "analytic", "z", "switches_up", "switches_down"],
            );
            let mut zmax = 0.0f64;
            let mut within = 0usize;
            for (r, (seed, m)) in runs.iter().enumerate() {
                let z = z_score(m.estimate, m.std_error, corrected);
                zmax = zmax.max(z.abs());
                within += usize::from(z.abs() <= 3.0);
                t.push(vec![
                    r.into(),
                    (*seed).into(),
                    m.estimate.into(),
                    m.std_error.into(),
                    corrected.into(),
                    z.into(),
                    m.switches.0.into(),
                    m.switches.1.into(),
                ]);
            }
            let mut s = Table::new(
                "summary",
                &["replications", "analytic_corrected", "analytic_naive", "max_abs_z", "within_3se"],
            );
            s.push(vec![reps.into(), corrected.into(), naive.into(), zmax.into(), within.into()]);
            let mut warnings = Vec::new();
            if e.policy == AdPolicy::Threshold {
                warnings.push(
                    "simulation is compared with the corrected closed form; the naive one is reported alongside".into(),
                );
            }
            Ok(Output {
                tables: vec![t, s],
                json: Vec::new(),
                warnings,
            })
        }
        Built::Shock(s) => {
            let mut t = Table::new("shock", &["dx", "eps", "alpha"]);
            t.push(vec![s.dx.into(), s.eps.into(), shock_discount_alpha(s)?.into()]);
            Ok(Output {
                tables: vec![t],
                ..Default::default()
            })
        }
        _ => Err(field("game.kind", "not a microfoundation experiment")),
    }
}

fn dynamics(cfg: &ScenarioConfig, p: &Prepared) -> Result<Output, CliError> {
    let game = need_game(&p.built, p.task)?;
    let d = &cfg.dynamics;
    match d.mode {
        DynamicsMode::Adjustment => {
            let alpha = d.alpha.clone().unwrap_or_default();
            let tr = run_adjustment(&game, &bias(cfg, &alpha)?, &d.adjustment)?;
            let mut path = Table::new("path", &["step", "firm", "x"]);
            for (k, x) in tr.path.iter().enumerate() {
                for (i, v) in x.iter().enumerate() {
                    path.push(vec![k.into(), i.into(), (*v).into()]);
                }
            }
            let mut s = Table::new("summary", &["steps", "converged", "distance", "endpoint", "equilibrium"]);
            s.push(vec![
                tr.steps.into(),
                tr.converged.into(),
                tr.distance.into(),
                tr.path.last().map(|x| joined(x)).into(),
                tr.equilibrium.as_deref().map(joined).into(),
            ]);
            let warnings = if tr.converged {
                Vec::new()
            } else {
                vec![format!("adjustment did not reach an alpha-equilibrium in {} steps", tr.steps)]
            };
            Ok(Output {
                tables: vec![s, path],
                json: Vec::new(),
                warnings,
            })
        }
        DynamicsMode::Replacement => {
            let reps = cfg.replications.unwrap_or(10);
            let base = p.seed.unwrap_or(0);
            let runs: Vec<_> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut c = d.replacement.clone();
                    c.seed = base.wrapping_add(r as u64);
                    c.solver = SolverSettings {
                        initial: None,
                        ..cfg.solver.clone()
                    };
                    run_replacement(&game, &c).map(|run| (c.seed, run))
                })
                .collect::<naeq_core::Result<_>>()?;
            let mut s = Table::new(
                "summary",
                &["replication", "seed", "modal", "modal_share", "replacements", "reverts", "invalid_periods"],
            );
            let mut occ = Table::new("occupancy", &["replication", "profile", "periods", "share"]);
            let mut traj = Table::new("trajectories", &["replication", "period", "firm", "alpha", "x", "profit"]);
            for (r, (seed, run)) in runs.iter().enumerate() {
                s.push(vec![
                    r.into(),
                    (*seed).into(),
                    joined(&run.modal).into(),
                    run.modal_share.into(),
                    run.replacements.into(),
                    run.reverts.into(),
                    run.invalid_periods.into(),
                ]);
                let valid = (run.path.len() - run.invalid_periods).max(1) as f64;
                for (profile, count) in &run.occupancy {
                    occ.push(vec![r.into(), joined(profile).into(), (*count).into(), (*count as f64 / valid).into()]);
                }
                if d.trajectories {
                    for rec in &run.path {
                        for i in 0..rec.alpha.len() {
                            traj.push(vec![
                                r.into(),
                                rec.period.into(),
                                i.into(),
                                rec.alpha[i].into(),
                                rec.x.get(i).copied().into(),
                                rec.profits.get(i).copied().into(),
                            ]);
                        }
                    }
                }
            }
            let mut tables = vec![s, occ];
            if d.trajectories {
                tables.push(traj);
            }
            let warnings = runs
                .iter()
                .filter(|(_, r)| r.invalid_periods > 0)
                .map(|(seed, r)| format!("seed {seed}: {} periods skipped after failed solves", r.invalid_periods))
                .collect();
            Ok(Output {
                tables,
                json: Vec::new(),
                warnings,
            })
        }
    }
}
