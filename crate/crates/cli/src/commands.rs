use num_complex::Complex64;
use serde_json::{json, Value};
use toruslab::control::{synthesize_control, verify_terminal, ControlOptions};
use toruslab::estimates::{dispersive_scan_1d, growth_exponent, resolvent_ratio_scan, zygmund_scan};
use toruslab::geometry::{hitting_fraction, lemma_geom_bruteforce, rational_hitting_lowerbound, Direction};
use toruslab::lowfreq::{assemble_constant, certify_weak_observability, verify_elimination, ModelSystem};
use toruslab::observability::{observability_constant, shell_observability_scan};
use toruslab::spectral1d::build_floquet;
use toruslab::spectral2d::{build_hamiltonian, duhamel_residual, propagate, split_step, ProjectorSpec};

use crate::config::{field_2d, potential_1d, Command, RunConfig};

/// Result of one command: a pass flag, a summary for the JSON report and CSV rows.
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Errors raised before any computation count as invalid configuration.
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl From<toruslab::Error> for Failure {
    fn from(e: toruslab::Error) -> Self {
        match e {
            toruslab::Error::InvalidArgument(_) | toruslab::Error::Aliasing { .. } => Failure::Config(e.to_string()),
            toruslab::Error::Numerical(_) => Failure::Runtime(e.to_string()),
        }
    }
}

type Run = std::result::Result<Outcome, Failure>;

fn f(x: f64) -> String {
    format!("{x}")
}

fn cfg<T>(r: std::result::Result<T, String>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Config)
}

pub fn run(command: Command, c: &RunConfig) -> Run {
    match command {
        Command::Simulate => simulate(c),
        Command::Gramian => gramian(c),
        Command::Control => control(c),
        Command::ScanZygmund => scan_zygmund(c),
        Command::ScanResolvent => scan_resolvent(c),
        Command::ScanDispersive => scan_dispersive(c),
        Command::VerifyGeom => verify_geom(c),
        Command::ScanShells => scan_shells(c),
        Command::Lowfreq => lowfreq(c),
        Command::Hitting => hitting(c),
    }
}

fn initial_state(c: &RunConfig) -> std::result::Result<toruslab::torus::FourierField, Failure> {
    let spec = c.initial.as_ref().ok_or_else(|| Failure::Config("this command needs `initial`".into()))?;
    let u0 = cfg(field_2d(spec, cfg(c.torus())?))?;
    if u0.support_cutoff() > c.cutoff {
        return Err(Failure::Config(format!("initial state exceeds cutoff {}", c.cutoff)));
    }
    Ok(u0.with_cutoff(c.cutoff))
}

fn simulate(c: &RunConfig) -> Run {
    let g = cfg(c.torus())?;
    let v = cfg(field_2d(&c.potential, g))?;
    let h = build_hamiltonian(g, &v, c.cutoff)?;
    let u0 = initial_state(c)?;
    let norm0 = u0.l2_norm();
    let steps = c.params.steps.max(1);
    let mut rows = Vec::new();
    let mut drift: f64 = 0.0;
    for i in 0..=steps {
        let t = c.time * i as f64 / steps as f64;
        let u = propagate(&h, &u0, t)?;
        drift = drift.max((u.l2_norm() - norm0).abs());
        rows.push(vec![f(t), f(u.l2_norm())]);
    }
    let exact = propagate(&h, &u0, c.time)?;
    let m = c.grid.unwrap_or(2 * c.cutoff.max(v.support_cutoff()) + 1) | 1;
    let split = split_step(g, &v, &u0, c.time, steps, m)?;
    let split_error = split.with_cutoff(c.cutoff).sub(&exact).l2_norm() / norm0;
    let duhamel = duhamel_residual(&h, &u0, c.time, c.params.panels)?;
    let passed = drift <= 1e-10 * norm0.max(1.0);
    Ok(Outcome {
        passed,
        summary: json!({
            "dim": h.dim(),
            "norm_drift": drift,
            "split_step_error": split_error,
            "duhamel_residual": duhamel,
            "steps": steps,
        }),
        header: vec!["time", "norm"],
        rows,
    })
}

fn gramian(c: &RunConfig) -> Run {
    let g = cfg(c.torus())?;
    let v = cfg(field_2d(&c.potential, g))?;
    let region = cfg(c.region())?;
    let mut cutoffs = c.cutoffs.clone().unwrap_or_else(|| vec![c.cutoff]);
    cutoffs.sort_unstable();
    cutoffs.dedup();
    let reports = observability_constant(g, &v, &region, c.time, &cutoffs, c.grid)?;
    let last = reports.last().expect("at least one cutoff");
    let rows = reports
        .iter()
        .map(|r| vec![r.cutoff.to_string(), r.dim.to_string(), f(r.lambda_min), f(r.lambda_max), f(r.constant)])
        .collect();
    Ok(Outcome {
        passed: reports.iter().all(|r| !r.degenerate),
        summary: json!({
            "K": last.constant,
            "lambda_min": last.lambda_min,
            "lambda_max": last.lambda_max,
            "region_measure": region.measure(),
            "reports": reports,
        }),
        header: vec!["cutoff", "dim", "lambda_min", "lambda_max", "K"],
        rows,
    })
}

fn control(c: &RunConfig) -> Run {
    let g = cfg(c.torus())?;
    let v = cfg(field_2d(&c.potential, g))?;
    let h = build_hamiltonian(g, &v, c.cutoff)?;
    let region = cfg(c.region())?;
    let u0 = initial_state(c)?;
    let opts = ControlOptions { grid: c.grid, ..ControlOptions::default() };
    let sol = synthesize_control(&h, &region, c.time, &u0, &opts)?;
    let independent = verify_terminal(&h, &region, &sol, &u0, c.params.panels)?;
    let norm0 = u0.l2_norm();
    let rows = sol.samples.iter().map(|s| vec![f(s.time), f(s.control.l2_norm())]).collect();
    Ok(Outcome {
        passed: independent <= 1e-8 * norm0 && sol.terminal_norm <= 1e-8 * norm0,
        summary: json!({
            "terminal_norm": independent,
            "terminal_norm_cg": sol.terminal_norm,
            "cost": sol.cost,
            "cost_bound": sol.observability_constant * norm0 * norm0,
            "K": sol.observability_constant,
            "cg_iterations": sol.cg_iterations,
            "initial_norm": norm0,
        }),
        header: vec!["time", "control_norm"],
        rows,
    })
}

fn scan_zygmund(c: &RunConfig) -> Run {
    let g = cfg(c.torus())?;
    let mut points: Vec<(f64, f64)> = c
        .params
        .hs
        .iter()
        .flat_map(|&h| c.params.kappas.iter().map(move |&k| (k, h)))
        .filter(|&(k, h)| k * h <= 0.25)
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if points.is_empty() {
        return Err(Failure::Config("no (kappa, h) pair with kappa h <= 1/4".into()));
    }
    let reports = zygmund_scan(g, &points, c.trials, c.seed)?;
    let exponent = growth_exponent(&reports);
    let rows = reports
        .iter()
        .map(|r| vec![f(r.kappa), f(r.h), r.band_size.to_string(), f(r.max), f(r.mean), r.witness.to_string()])
        .collect();
    let passed = !(exponent > c.params.max_exponent);
    Ok(Outcome {
        passed,
        summary: json!({ "growth_exponent": if exponent.is_finite() { json!(exponent) } else { Value::Null }, "reports": reports }),
        header: vec!["kappa", "h", "band_size", "max_ratio", "mean_ratio", "witness_trial"],
        rows,
    })
}

fn scan_resolvent(c: &RunConfig) -> Run {
    let g = cfg(c.torus())?;
    let v = cfg(field_2d(&c.potential, g))?;
    let h = build_hamiltonian(g, &v, c.cutoff)?;
    let mut re = c.params.tau_re.clone();
    re.sort_by(|a, b| a.total_cmp(b));
    let taus: Vec<Complex64> = re.iter().map(|&r| Complex64::new(r, c.params.tau_im)).collect();
    let reports = resolvent_ratio_scan(&h, &taus, c.trials, c.seed, c.params.oversample)?;
    let first = reports.first().map(|r| r.max_ratio).unwrap_or(0.0);
    let last = reports.last().map(|r| r.max_ratio).unwrap_or(0.0);
    let rows = reports
        .iter()
        .map(|r| vec![f(r.tau.re), f(r.tau.im), f(r.max_ratio), f(r.mean_ratio), f(r.max_residual), f(r.condition)])
        .collect();
    Ok(Outcome {
        passed: last <= 1.5 * first,
        summary: json!({ "ratio_growth": last / first, "reports": reports }),
        header: vec!["tau_re", "tau_im", "max_ratio", "mean_ratio", "max_residual", "condition"],
        rows,
    })
}

fn scan_dispersive(c: &RunConfig) -> Run {
    let w = cfg(potential_1d(&c.potential))?;
    let mut ks = c.params.ks.clone();
    ks.sort_by(|a, b| a.total_cmp(b));
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &k in &ks {
        let op = build_floquet(&w, k, c.cutoff)?;
        let r = dispersive_scan_1d(&op, c.time, c.params.points, c.trials, c.seed)?;
        worst = worst.max(r);
        rows.push(vec![f(k), f(r)]);
    }
    Ok(Outcome {
        passed: worst.is_finite(),
        summary: json!({ "max_ratio": worst, "potential_l2": w.l2_norm() }),
        header: vec!["k", "max_ratio"],
        rows,
    })
}

fn verify_geom(c: &RunConfig) -> Run {
    let rep = lemma_geom_bruteforce(c.params.epsilon, c.params.threshold, c.params.refinements)?;
    let passed = rep.violating_disjoint == rep.violating && rep.inconclusive_violating == 0;
    let rows = vec![vec![
        f(rep.epsilon),
        rep.n_sectors.to_string(),
        rep.q_min.to_string(),
        rep.quadruples.to_string(),
        rep.violating.to_string(),
        rep.violating_disjoint.to_string(),
        rep.inconclusive_count.to_string(),
    ]];
    Ok(Outcome {
        passed,
        summary: serde_json::to_value(&rep).expect("plain data"),
        header: vec!["epsilon", "N_sectors", "Q_min", "quadruples", "violating", "violating_disjoint", "inconclusive"],
        rows,
    })
}

fn scan_shells(c: &RunConfig) -> Run {
    let g = cfg(c.torus())?;
    let v = cfg(field_2d(&c.potential, g))?;
    let h = build_hamiltonian(g, &v, c.cutoff)?;
    let region = cfg(c.region())?;
    let mut hs = c.params.hs.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let specs: Vec<ProjectorSpec> = hs.iter().map(|&s| ProjectorSpec { h: s, rho: c.params.rho, profile: c.params.profile }).collect();
    let m = c.grid.unwrap_or(4 * c.cutoff + 1);
    let reports = shell_observability_scan(&h, &specs, &region, c.time, m)?;
    let rows = reports
        .iter()
        .map(|r| vec![f(r.h), f(r.rho), r.modes.to_string(), f(r.lambda_min), f(r.constant)])
        .collect();
    let passed = reports.iter().all(|r| r.modes > 0 && !r.degenerate);
    Ok(Outcome {
        passed,
        summary: json!({ "reports": reports }),
        header: vec!["h", "rho", "modes", "lambda_min", "K_shell"],
        rows,
    })
}

fn lowfreq(c: &RunConfig) -> Run {
    let w = cfg(potential_1d(&c.potential))?;
    let op = build_floquet(&w, c.params.k, c.cutoff)?;
    let omega = cfg(c.interval())?;
    let model = ModelSystem::from_floquet(&op, &omega, c.time, c.grid.unwrap_or(1024))?;
    let weak = certify_weak_observability(&model, c.params.weak_epsilon, c.params.samples, c.seed)?;
    let rep = assemble_constant(&model, &weak, None, c.params.cluster_tol)?;
    let ver = verify_elimination(&model, rep.k_assembled, c.params.samples, c.seed)?;
    let passed = ver.passed && rep.k_assembled >= rep.k_gramian && rep.zero_residual <= 1e-10;
    let rows = model
        .values()
        .iter()
        .enumerate()
        .map(|(i, l)| vec![i.to_string(), f(*l)])
        .collect();
    Ok(Outcome {
        passed,
        summary: json!({ "assembly": rep, "weak": weak, "elimination": ver }),
        header: vec!["index", "eigenvalue"],
        rows,
    })
}

fn hitting(c: &RunConfig) -> Run {
    let g = cfg(c.torus())?;
    let region = cfg(c.region())?;
    let p = &c.params;
    let direction = match (p.direction, p.angle) {
        (Some((a, b)), None) => Direction::Rational(a, b),
        (None, Some(t)) => Direction::Angle(t),
        _ => return Err(Failure::Config("give exactly one of `direction` or `angle`".into())),
    };
    let rep = hitting_fraction(g, direction, p.start, &region, c.time, p.samples)?;
    let mut summary = json!({ "fraction": rep.fraction, "refinement_delta": rep.refinement_delta, "period": rep.period,
        "region_fraction": region.measure() / g.area() });
    let mut passed = (0.0..=1.0).contains(&rep.fraction);
    if let Some(n_min) = p.n_min {
        let cap = p.norm_cap.unwrap_or(n_min + 4.0);
        let bound = rational_hitting_lowerbound(g, &region, n_min, cap, p.z_grid)?;
        passed &= bound.delta > 0.0;
        summary["lower_bound"] = serde_json::to_value(&bound).expect("plain data");
    }
    Ok(Outcome {
        passed,
        summary,
        header: vec!["fraction", "refinement_delta"],
        rows: vec![vec![f(rep.fraction), f(rep.refinement_delta)]],
    })
}
