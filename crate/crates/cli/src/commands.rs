use anyhow::Result;
use stopsum_core::asym::{
    predict, select_regime, LawRef, PredictInputs, RegimeInput, ScaleConvention, SubcriticalParams,
};
use stopsum_core::clustering::{
    delta_exponent, dyadic, kappa_exponent, ClusterParams, ClusterPipeline,
};
use stopsum_core::diagnostics::{
    large_dev_bound, llt_error, LargeDevOptions, LargeDevVariant, Method,
};
use stopsum_core::lattice::{build_power_law, Law, LatticePmf, PowerLawSpec, TruncationPolicy};
use stopsum_core::report::{Cell, Table};
use stopsum_core::rig::{clustering_table, degree_histogram, sample_graph, RigConfig};
use stopsum_core::stopsum::{ratio_curve, ratio_table, stopped_sum_pmf, CutoffPolicy};
use stopsum_core::verify::{self, VerifyOptions, SCENARIOS};
use stopsum_core::Error;

use serde::Serialize;

use crate::config::{Command, Params, RunConfig};
use crate::output::OutDir;
use crate::plot::PlotStyle;

pub struct Ctx<'a> {
    pub config: &'a RunConfig,
    pub workers: usize,
}

/// Verdict of a run; `false` only for a failed `verify`.
pub type Passed = bool;

fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")).into())
}

/// Law of the summands from `--alpha`, `--a`, `--b` and `--rho`.
fn summand_spec(p: &Params) -> Result<PowerLawSpec> {
    let alpha = need(p.alpha, "alpha")?;
    let a = p.a.unwrap_or(1.0);
    let mut spec = match p.b {
        Some(b) if b > 0.0 => PowerLawSpec::two_sided(alpha, a, b),
        _ => PowerLawSpec {
            a,
            ..PowerLawSpec::one_sided(alpha)
        },
    };
    if let Some(rho) = p.rho {
        spec = spec.with_slowly_varying(1.0, rho);
    }
    spec.validate()?;
    Ok(spec)
}

fn stopping_spec(p: &Params) -> Result<PowerLawSpec> {
    let spec = PowerLawSpec::one_sided(need(p.gamma, "gamma")?);
    spec.validate()?;
    Ok(spec)
}

fn pmf_table(pmf: &LatticePmf) -> Table {
    let mut t = Table::new(["t", "prob"]);
    for (k, p) in pmf.iter() {
        t.push(vec![Cell::Int(k), Cell::Real(p)]);
    }
    t
}

#[derive(Serialize)]
struct DistSummary {
    spec: PowerLawSpec,
    t_max: i64,
    tail_mass_left: f64,
    tail_mass_right: f64,
}

fn dist(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let p = &ctx.config.params;
    let spec = summand_spec(p)?;
    let t_max = p.tmax.unwrap_or(1000);
    let pmf = build_power_law(&spec, &TruncationPolicy::keep_tail(t_max))?;
    let table = pmf_table(&pmf);
    out.csv("dist.csv", &table)?;
    out.json(
        "dist.json",
        &DistSummary {
            spec,
            t_max,
            tail_mass_left: pmf.tail_left(),
            tail_mass_right: pmf.tail_right(),
        },
    )?;
    out.plot("dist.svg", &table, "t", "prob", &PlotStyle::log_log("P(X = t)"))?;
    println!("{} points, tail mass {:.6e}", pmf.len(), pmf.tail_mass());
    Ok(true)
}

#[derive(Serialize)]
struct StopsumSummary {
    n_cutoff: i64,
    truncation_error: f64,
    predictor: Option<String>,
    notes: Vec<String>,
}

fn stopsum(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let p = &ctx.config.params;
    let x = summand_spec(p)?;
    let n = stopping_spec(p)?;
    let t_max = p.tmax.unwrap_or(1000);
    let policy = TruncationPolicy::keep_tail(t_max);
    let xp = build_power_law(&x, &policy)?;
    let np = build_power_law(&n, &policy)?;
    let cut = if x.is_nonnegative() {
        CutoffPolicy::fixed(t_max).with_window(t_max)
    } else {
        CutoffPolicy::default()
    };
    let exact = stopped_sum_pmf(&xp, &np, &cut)?;
    let mut table = Table::new(["t", "prob", "local_error"]);
    for (t, pr) in exact.pmf.iter().filter(|&(t, _)| t <= t_max) {
        table.push(vec![Cell::Int(t), Cell::Real(pr), Cell::Real(exact.local_error(t))]);
    }
    out.csv("stopsum.csv", &table)?;
    out.plot("stopsum.svg", &table, "t", "prob", &PlotStyle::log_log("P(S_N = t)"))?;

    let report = select_regime(&RegimeInput::from_specs(&x, Some(&n)));
    if let Some(pred) = report.predictor {
        let inputs = PredictInputs {
            x: LawRef::Spec(&x),
            n: LawRef::Spec(&n),
            mu: x.mean().unwrap_or(f64::NAN),
            en: n.mean().unwrap_or(f64::NAN),
            subcritical: SubcriticalParams::from_specs(&x, &n, ScaleConvention::TailMatched).ok(),
        };
        let grid: Vec<i64> = (1..19)
            .map(|e| 10i64.pow(e))
            .take_while(|&t| t <= t_max)
            .collect();
        let rows = ratio_curve(&exact, |t| predict(pred, t, &inputs), &grid)?;
        let ratio = ratio_table(&rows);
        out.csv("ratio.csv", &ratio)?;
        out.plot("ratio.svg", &ratio, "t", "ratio", &PlotStyle::log_x("exact / predictor"))?;
    }
    out.json(
        "stopsum.json",
        &StopsumSummary {
            n_cutoff: exact.n_cutoff,
            truncation_error: exact.truncation_error,
            predictor: report.predictor.map(|p| format!("{p:?}")),
            notes: exact.pmf.notes.clone(),
        },
    )?;
    println!(
        "N cut at {}, P(N > cut) = {:.3e}, predictor {:?}",
        exact.n_cutoff, exact.truncation_error, report.predictor
    );
    Ok(true)
}

fn regimes(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let p = &ctx.config.params;
    let x = summand_spec(p)?;
    let n = stopping_spec(p)?;
    let report = select_regime(&RegimeInput::from_specs(&x, Some(&n)));
    out.json("regimes.json", &report)?;
    match (&report.regime, report.predictor) {
        (Some(id), Some(pred)) => println!("{id}: {pred:?}"),
        _ => println!("no regime applies; unmet {:?}", report.unmet),
    }
    Ok(true)
}

fn verify_cmd(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let c = ctx.config;
    let name = c.scenario.as_deref().unwrap_or_default();
    let opts = VerifyOptions {
        seed: c.seed,
        workers: ctx.workers,
        alpha: c.params.alpha,
        gamma: c.params.gamma,
    };
    let selected: Vec<&str> = if name == "all" {
        SCENARIOS.iter().map(|s| s.name).collect()
    } else {
        vec![verify::find(name)
            .ok_or_else(|| {
                let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
                Error::InvalidParameter(format!("unknown scenario {name}; one of {}", names.join(", ")))
            })?
            .name]
    };
    let mut all = true;
    for s in selected {
        let o = verify::run(s, &opts)?;
        println!("{}", o.line());
        all &= o.pass;
        for (table_name, t) in &o.tables {
            out.csv(&format!("{}/{table_name}.csv", o.name), t)?;
            if table_name == "ratio" && t.column_index("ratio").is_some() {
                out.plot(
                    &format!("{}/{table_name}.svg", o.name),
                    t,
                    "t",
                    "ratio",
                    &PlotStyle::log_x(o.name),
                )?;
            }
        }
    }
    Ok(all)
}

fn llt(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let p = &ctx.config.params;
    let law = Law::PowerLaw(summand_spec(p)?);
    let ns = p.n.clone().unwrap_or_else(|| vec![16, 64, 256, 1024]);
    let mut t = Table::new(["n", "a_n", "b_n", "tau", "argmax", "value_error", "outside_mass", "edge_density"]);
    for n in ns {
        let r = llt_error(&law, n)?;
        t.push(vec![
            Cell::Int(n as i64),
            r.a_n.into(),
            r.b_n.into(),
            r.tau.into(),
            Cell::Int(r.argmax),
            r.value_error.into(),
            r.outside_mass.into(),
            r.edge_density.into(),
        ]);
        println!("n = {n}: tau = {:.6}", r.tau);
    }
    out.csv("llt.csv", &t)?;
    out.plot("llt.svg", &t, "n", "tau", &PlotStyle::log_log("LLT sup error"))?;
    Ok(true)
}

fn bounds(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let c = ctx.config;
    let p = &c.params;
    let spec = summand_spec(p)?;
    let alpha = spec.alpha;
    let variant = if alpha > 1.0 && alpha < 2.0 {
        LargeDevVariant::I
    } else if alpha == 2.0 {
        LargeDevVariant::Ii
    } else if alpha > 2.0 && alpha < 3.0 {
        LargeDevVariant::Iii
    } else if alpha == 3.0 {
        LargeDevVariant::Iv
    } else {
        return Err(Error::InvalidParameter(format!(
            "large deviation bounds cover 1 < α ≤ 3, got {alpha}"
        ))
        .into());
    };
    let opts = LargeDevOptions {
        seed: c.seed,
        workers: ctx.workers,
        ..LargeDevOptions::default()
    };
    let (x, y) = (p.x.unwrap_or(200.0), p.y.unwrap_or(100.0));
    let mut t = Table::new(["n", "lhs", "rhs_without_constant", "ratio", "method", "half_width"]);
    for n in p.n.clone().unwrap_or_else(|| vec![4, 16, 64]) {
        let r = large_dev_bound(variant, &Law::PowerLaw(spec), n, x, y, &opts)?;
        let (method, hw) = match r.method {
            Method::Exact => ("exact", 0.0),
            Method::MonteCarlo { half_width, .. } => ("monte-carlo", half_width),
        };
        t.push(vec![
            Cell::Int(n as i64),
            r.lhs.into(),
            r.rhs_without_constant.into(),
            r.ratio.into(),
            method.into(),
            hw.into(),
        ]);
        println!("n = {n}: lhs {:.4e}, rhs {:.4e}, ratio {:.4e}", r.lhs, r.rhs_without_constant, r.ratio);
    }
    out.csv("bounds.csv", &t)?;
    Ok(true)
}

#[derive(Serialize)]
struct ClusteringSummary {
    alpha: f64,
    gamma: f64,
    beta: f64,
    delta: f64,
    kappa: f64,
    c_star_slope: Option<f64>,
    warnings: Vec<String>,
}

fn unit_params(p: &Params) -> Result<ClusterParams> {
    Ok(ClusterParams::unit(
        p.alpha.unwrap_or(8.0),
        p.gamma.unwrap_or(6.5),
        p.beta.unwrap_or(1.0),
    )?)
}

fn clustering(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let p = &ctx.config.params;
    let params = unit_params(p)?;
    let k_max = p.kmax.unwrap_or(1024);
    let pipe = ClusterPipeline::up_to(params, k_max)?;
    let table = pipe.curve(&dyadic(2, k_max))?;
    out.csv("clustering.csv", &table)?;
    out.plot("clustering.svg", &table, "k", "c_star", &PlotStyle::log_log("C*(k)"))?;
    let (alpha, gamma) = (params.alpha(), params.gamma());
    let lo = 64.min(k_max / 2).max(2);
    let summary = ClusteringSummary {
        alpha,
        gamma,
        beta: params.beta,
        delta: delta_exponent(alpha, gamma).value,
        kappa: kappa_exponent(alpha, gamma),
        c_star_slope: pipe.c_star_slope(lo, k_max).ok(),
        warnings: params.warnings(),
    };
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "δ = {}, fitted slope on [{lo}, {k_max}] = {:?}",
        summary.delta, summary.c_star_slope
    );
    out.json("clustering.json", &summary)?;
    Ok(true)
}

#[derive(Serialize)]
struct RigSummary {
    n: usize,
    m: usize,
    seed: u64,
    edges: usize,
}

fn rig(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    let c = ctx.config;
    let p = &c.params;
    let size = p.size.unwrap_or(20_000);
    let beta = p.beta.unwrap_or(1.0);
    let m = ((size as f64) * beta).round().max(1.0) as usize;
    let cfg = RigConfig {
        n: size,
        m,
        actor_weights: PowerLawSpec::one_sided(p.gamma.unwrap_or(6.5)),
        attr_weights: PowerLawSpec::one_sided(p.alpha.unwrap_or(8.0)),
        seed: c.seed,
    };
    let g = sample_graph(&cfg, ctx.workers)?;
    out.text("edges.txt", &g.edge_list())?;
    let ks: Vec<i64> = (2..=p.kmax.unwrap_or(6)).collect();
    let table = clustering_table(&g, &ks)?;
    out.csv("clustering.csv", &table)?;
    let degrees = pmf_table(&degree_histogram(&g)?);
    out.csv("degree.csv", &degrees)?;
    out.plot("degree.svg", &degrees, "t", "prob", &PlotStyle::log_log("degree distribution"))?;
    let summary = RigSummary {
        n: g.n,
        m: g.m,
        seed: c.seed,
        edges: g.edge_count(),
    };
    out.json("rig.json", &summary)?;
    println!("{} actors, {} attributes, {} edges", g.n, g.m, summary.edges);
    Ok(true)
}

pub fn run(ctx: &Ctx, out: &mut OutDir) -> Result<Passed> {
    match ctx.config.command {
        Command::Dist => dist(ctx, out),
        Command::Stopsum => stopsum(ctx, out),
        Command::Regimes => regimes(ctx, out),
        Command::Verify => verify_cmd(ctx, out),
        Command::Llt => llt(ctx, out),
        Command::Bounds => bounds(ctx, out),
        Command::Clustering => clustering(ctx, out),
        Command::Rig => rig(ctx, out),
    }
}
