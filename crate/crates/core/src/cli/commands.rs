use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::{Command, ExperimentConfig, NamedDomain};
use crate::blowup::{blowup_trace, lower_bound_check, refined_peak, rescale_profile, Classification, DEFAULT_WINDOW};
use crate::error::Result;
use crate::functional::{continuation, disk_energy, energy_estimate_with, MeshPolicy};
use crate::geometry::{Domain, DomainKind};
use crate::greens::{robin_sup, GreenEvaluator, GreenMethod};
use crate::report::Report;
use crate::suite::{
    battery, energy_comparison_row, energy_comparison_table, strip_check, strip_threshold, suite_domains, testfn_bound,
};
use crate::testfn::standard_bubble;
use crate::Vector;

/// Reports to write plus the numerical gates that failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: Vec<(String, Report)>,
    pub failed_gates: Vec<String>,
}

fn file_name(command: Command, domain: Option<&str>) -> String {
    let base = match domain {
        Some(d) => format!("{}-{d}", command.name()),
        None => command.name().to_string(),
    };
    let clean: String =
        base.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect();
    format!("{clean}.txt")
}

fn header(cfg: &ExperimentConfig, title: &str) -> Report {
    let mut r = Report::new(title);
    r.field("command", cfg.command.name())
        .field("config_hash", cfg.hash())
        .field("seed", cfg.seed)
        .field("h", cfg.h)
        .field("tol_scale", cfg.tol_scale);
    for (k, v) in cfg.tolerances().entries() {
        r.field(format!("tol.{k}"), format!("{v:e}"));
    }
    r
}

fn describe(r: &mut Report, d: &NamedDomain) {
    let c = d.domain.center();
    r.field("domain", &d.name)
        .field("kind", d.domain.kind().name())
        .field("params", format!("{:?}", d.domain.kind().params()))
        .field("center", format!("{:?},{:?}", c.x, c.y))
        .field("rotation", format!("{:?}", d.domain.rotation()))
        .field("area", format!("{:.12}", d.domain.area()));
}

fn policy(cfg: &ExperimentConfig) -> MeshPolicy {
    MeshPolicy { h: cfg.h, ..Default::default() }
}

fn is_unit_disk(d: &Domain) -> bool {
    matches!(d.kind(), DomainKind::Disk { radius } if (*radius - 1.0).abs() < 1e-12)
}

fn normalized(d: &NamedDomain) -> Result<NamedDomain> {
    Ok(NamedDomain { name: d.name.clone(), domain: d.domain.normalize_area(PI)? })
}

fn robin(cfg: &ExperimentConfig, d: &NamedDomain, out: &mut Outcome) -> Result<()> {
    let tol = cfg.tolerances();
    let opts = tol.robin_options();
    let rep = robin_sup(&d.domain, &opts)?;
    let mut r = header(cfg, "Robin function supremum");
    describe(&mut r, d);
    let method = match rep.method {
        GreenMethod::ClosedForm => "closed-form".to_string(),
        GreenMethod::FundamentalSolutions { charges, offset } => {
            format!("fundamental-solutions charges={charges} offset={offset}")
        }
    };
    r.field("method", method)
        .field("gamma_sup", format!("{:.10}", rep.gamma_sup))
        .field("argmax", format!("{:.8},{:.8}", rep.argmax.x, rep.argmax.y))
        .field("residual", format!("{:.3e}", rep.residual))
        .field("condition", format!("{:.3e}", rep.condition))
        .field(
            "convergence",
            format!(
                "charges={} gamma={:.10} doubled={:.10} passed={}",
                rep.convergence.charges, rep.convergence.gamma, rep.convergence.doubled_gamma, rep.convergence.passed
            ),
        )
        .field("corners", rep.corners);
    let mut maxima = String::from("x\ty\tgamma\n");
    for (p, g) in &rep.local_maxima {
        let _ = writeln!(maxima, "{:.8}\t{:.8}\t{:.10}", p.x, p.y, g);
    }
    let mut samples = String::from("x\ty\tgamma\n");
    for (p, g) in &rep.samples {
        let _ = writeln!(samples, "{:.6}\t{:.6}\t{:.10}", p.x, p.y, g);
    }
    r.section("local_maxima", maxima).section("samples", samples).section("warnings", rep.warnings.join("\n"));
    if !rep.convergence.passed {
        out.failed_gates.push(format!("{}: greens convergence gate (charge doubling)", d.name));
    }
    if rep.residual > opts.residual_tol {
        out.failed_gates
            .push(format!("{}: greens residual gate {:.2e} > {:.2e}", d.name, rep.residual, opts.residual_tol));
    }
    out.reports.push((file_name(cfg.command, Some(&d.name)), r));
    Ok(())
}

fn energy(cfg: &ExperimentConfig, d: &NamedDomain, out: &mut Outcome) -> Result<()> {
    let trace = continuation(&d.domain, &cfg.schedule, 0.0, &policy(cfg))?;
    let est = energy_estimate_with(&normalized(d)?.domain, &cfg.tolerances().robin_options())?;
    let mut r = header(cfg, "Continuation energies");
    describe(&mut r, d);
    r.field("energy_estimate_area_pi", format!("{:.10}", est.upper))
        .field("gamma_sup_area_pi", format!("{:.10}", est.gamma_sup))
        .field("truncated", trace.truncated.as_deref().unwrap_or("no"));
    let disk = is_unit_disk(&d.domain);
    let mut t = String::from(
        "lambda\tenergy\tlambda_eps\talpha_eps\tvertices\tregrades\titerations\tgrad_norm\tmt_slack\tdisk_oracle\n",
    );
    for s in &trace.steps {
        let m = &s.result;
        let oracle = if disk { format!("{:.10}", disk_energy(m.lambda)) } else { "-".into() };
        let _ = writeln!(
            t,
            "{:.8}\t{:.10}\t{:.8}\t{:.6}\t{}\t{}\t{}\t{:.2e}\t{:.4e}\t{oracle}",
            m.lambda, m.energy, m.max_value, s.alpha, s.vertices, s.regrades, m.iterations, m.grad_norm, m.mt_slack
        );
    }
    r.section("trace", t);
    if let Some(why) = &trace.truncated {
        out.failed_gates.push(format!("{}: functional continuation gate: {why}", d.name));
    }
    out.reports.push((file_name(cfg.command, Some(&d.name)), r));
    Ok(())
}

fn verify_theorem1(cfg: &ExperimentConfig, domains: &[NamedDomain], out: &mut Outcome) -> Result<()> {
    let tol = cfg.tolerances();
    let opts = tol.robin_options();
    let rows = domains
        .par_iter()
        .map(|d| {
            let n = normalized(d)?;
            let rep = robin_sup(&n.domain, &opts)?;
            energy_comparison_row(&n.name, &n.domain, &rep, cfg.h, &tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = header(cfg, "Energy estimates against the disk");
    r.field("domains", domains.iter().map(|d| d.name.as_str()).collect::<Vec<_>>().join(","))
        .field("disk_energy", "-1")
        .section("estimates", energy_comparison_table(&rows));
    for row in &rows {
        for f in &row.failures {
            out.failed_gates.push(format!("{}: energy gate: {f}", row.name));
        }
    }
    out.reports.push((file_name(cfg.command, None), r));
    Ok(())
}

fn strip(cfg: &ExperimentConfig, d: &NamedDomain, out: &mut Outcome) -> Result<()> {
    let v = strip_check(&d.domain, &cfg.schedule, &policy(cfg))?;
    let mut r = header(cfg, "Covering strip criterion");
    describe(&mut r, d);
    r.field("strip_width", format!("{:.10}", v.width))
        .field("strip_direction", format!("{:.10}", v.direction))
        .field("threshold", format!("{:.10}", strip_threshold()))
        .field("verdict", v.verdict())
        .field("classification", v.trace.classification)
        .field("truncated", v.trace.truncated.as_deref().unwrap_or("no"))
        .section("trace", v.trace.to_table());
    if !v.consistent() {
        out.failed_gates.push(format!("{}: blowup classification gate: thin domain classified as blowup", d.name));
    }
    out.reports.push((file_name(cfg.command, Some(&d.name)), r));
    Ok(())
}

fn testfn(cfg: &ExperimentConfig, d: &NamedDomain, out: &mut Outcome) -> Result<()> {
    let tol = cfg.tolerances();
    let n = normalized(d)?;
    let rep = robin_sup(&n.domain, &tol.robin_options())?;
    let table = testfn_bound(&n.domain, &rep, &cfg.epsilons, &cfg.shapes, cfg.h)?;
    let target = -1.0 - 4.0 * PI * rep.gamma_sup;
    let best = table.best().and_then(|b| b.value.clone().ok());
    let mut r = header(cfg, "Glued test function bound");
    describe(&mut r, &n);
    r.field("gamma_sup", format!("{:.10}", rep.gamma_sup))
        .field("center", format!("{:.8},{:.8}", rep.argmax.x, rep.argmax.y))
        .field("bound_-1-4pi_gamma", format!("{target:.10}"))
        .field("best_I", best.map_or_else(|| "none".to_string(), |b| format!("{b:.10}")))
        .section("grid", table.to_table());
    match best {
        Some(b) if b <= target + tol.testfn_margin => {}
        Some(b) => out.failed_gates.push(format!(
            "{}: testfn bound gate: best I {b:.6} > {:.6}",
            d.name,
            target + tol.testfn_margin
        )),
        None => out.failed_gates.push(format!("{}: testfn bound gate: no admissible grid point", d.name)),
    }
    out.reports.push((file_name(cfg.command, Some(&d.name)), r));
    Ok(())
}

fn blowup(cfg: &ExperimentConfig, d: &NamedDomain, out: &mut Outcome) -> Result<()> {
    let tol = cfg.tolerances();
    let (trace, an) = blowup_trace(&d.domain, &cfg.schedule, 0.0, &policy(cfg), DEFAULT_WINDOW)?;
    let mut r = header(cfg, "Blow-up diagnostics");
    describe(&mut r, d);
    r.field("window_R", an.window)
        .field("classification", an.classification)
        .field("truncated", an.truncated.as_deref().unwrap_or("no"))
        .field("far_field_bound_C(K)", an.far_field_bound().map_or_else(|| "-".into(), |v| format!("{v:.6}")))
        .field(
            "note",
            "the lower-bound check samples finitely many points with a fixed budget; it is evidence, not verification",
        );
    let mut gates = Vec::new();
    for (k, s) in an.steps.iter().enumerate() {
        let alpha = ((1.0 - s.epsilon) * PI).sqrt() * (0.5 * (s.lambda_eps - s.ln_mass)).exp();
        if ((alpha - s.alpha) / s.alpha).abs() > 1e-10 {
            gates.push(format!("step {k}: alpha formula mismatch"));
        }
        let mass = PI * (1.0 - s.epsilon);
        if (s.rescaled_mass - mass).abs() > tol.mass * mass {
            gates.push(format!("step {k}: rescaled mass {:.6} vs {mass:.6}", s.rescaled_mass));
        }
    }
    r.section("trace", an.to_table());
    if let (Some(last), Some(step)) = (an.steps.last(), trace.steps.last()) {
        let res = &step.result;
        r.field("last_lambda_eps", format!("{:.8}", last.lambda_eps))
            .field("last_alpha_eps", format!("{:.8}", last.alpha))
            .field("last_D_eps", format!("{:.8}", last.d_eps))
            .field("last_A", format!("{:.8}", last.a))
            .field("last_boundary_distance", format!("{:.6}", last.boundary_distance))
            .field("inradius", format!("{:.6}", d.domain.inradius()));
        if let Ok(p) = rescale_profile(res, an.window) {
            let mut t = String::from("radius\tphi_eps_mean\tphi0\n");
            for (rad, v) in p.radii.iter().zip(p.mean()) {
                let _ = writeln!(t, "{rad:.4}\t{v:.8}\t{:.8}", standard_bubble(Vector::new(*rad, 0.0)));
            }
            r.section("rescaled_profile", t);
        }
        if an.classification == Classification::Blowup {
            match last.profile_error {
                Some(e) if e <= tol.bubble_distance => {}
                other => gates.push(format!("bubble distance {other:?} exceeds {}", tol.bubble_distance)),
            }
            let green = GreenEvaluator::for_domain(&d.domain, refined_peak(&res.field), 256)?;
            let lb = lower_bound_check(res, &d.domain, &green, last.d_eps, 50)?;
            r.field("lower_bound_min_margin", format!("{:.6}", lb.min_margin));
            if !lb.passed(tol.lower_bound_budget) {
                gates.push(format!("lower bound margin {:.4} below -{}", lb.min_margin, tol.lower_bound_budget));
            }
        }
    }
    r.section("gates", if gates.is_empty() { "all passed".to_string() } else { gates.join("\n") });
    out.failed_gates.extend(gates.into_iter().map(|g| format!("{}: blowup gate: {g}", d.name)));
    out.reports.push((file_name(cfg.command, Some(&d.name)), r));
    Ok(())
}

fn suite(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let outcomes = battery(cfg.seed, &cfg.tolerances());
    let mut r = header(cfg, "Acceptance battery");
    let mut body = String::new();
    for o in &outcomes {
        let _ =
            writeln!(body, "criterion {} {}: {}: {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.title, o.detail);
        if !o.passed {
            out.failed_gates.push(format!("suite gate: criterion {} ({})", o.id, o.title));
        }
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    r.field("passed", passed).field("failed", outcomes.len() - passed).section("criteria", body);
    out.reports.push((file_name(cfg.command, None), r));
    Ok(())
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    match cfg.command {
        Command::Suite => suite(cfg, &mut out)?,
        Command::VerifyTheorem1 => {
            let domains = if cfg.domains.is_empty() {
                suite_domains()?
                    .into_iter()
                    .map(|m| NamedDomain { name: m.name.to_string(), domain: m.domain })
                    .collect()
            } else {
                cfg.domains.clone()
            };
            verify_theorem1(cfg, &domains, &mut out)?
        }
        c => {
            for d in &cfg.domains {
                match c {
                    Command::Robin => robin(cfg, d, &mut out)?,
                    Command::Energy => energy(cfg, d, &mut out)?,
                    Command::StripCheck => strip(cfg, d, &mut out)?,
                    Command::TestfnBound => testfn(cfg, d, &mut out)?,
                    Command::BlowupTrace => blowup(cfg, d, &mut out)?,
                    Command::Suite | Command::VerifyTheorem1 => unreachable!("handled above"),
                }
            }
        }
    }
    Ok(out)
}
