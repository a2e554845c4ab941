//! Subcommand implementations on top of resolved settings.

use std::path::PathBuf;

use serde_json::{json, Value};
use tbp_core::asymptotics::{maxbias_curve, population_location, variance_terms};
use tbp_core::audit::{
    budget_splits, run_test, score_test_bp, test_bp_bounds, two_sample_bp_bounds,
};
use tbp_core::bootstrap::{
    bootstrap_bp, bootstrap_sensitivity, pit_uniformity, BootstrapConfig, CiMethod,
};
use tbp_core::estimators::{plugin_se, solve_location, solve_scale, solve_two_stage, Centering};
use tbp_core::model::PopulationModel;
use tbp_core::oracle::{brute_force_sensitivity, brute_force_test_bp, OracleConfig, OracleTarget};
use tbp_core::score::tune_for_efficiency;
use tbp_core::sensitivity::{
    location_bp, location_eta, scale_bp, sensitivity_curve, two_stage_bp_bounds, CurveMode,
    EstimatorSpec, SchemeConfig,
};
use tbp_core::{
    BoundKind, BudgetMode, Sample, ScaleScore, Score, ScoreFamily, ScoreKind, Side, Sided,
    TestData, TestKind, TestSpec,
};

use crate::error::{CliError, CliResult};
use crate::ingest::{ingest, IngestOptions, Ingested};
use crate::output::{jnum, jopt, Cell, Format, Report, Table};
use crate::settings::Settings;

/// Resolved settings plus typed accessors.
pub struct Ctx {
    pub s: Settings,
}

fn cfg_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl Ctx {
    pub fn new(s: Settings) -> Self {
        Self { s }
    }

    pub fn format(&self) -> CliResult<Format> {
        self.s.get_or("format", Format::Csv)
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.s.str("out").map(PathBuf::from)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.s.get_or("seed", 0u64)
    }

    pub fn score(&self) -> CliResult<Score> {
        let kind: ScoreKind = self
            .s
            .str("loss")
            .unwrap_or("huber")
            .parse()
            .map_err(cfg_err)?;
        let delta = match (
            self.s.get::<f64>("delta")?,
            self.s.get::<f64>("efficiency")?,
        ) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either delta or efficiency".into()))
            }
            (Some(d), None) => d,
            (None, Some(e)) => tune_for_efficiency(kind, e, &PopulationModel::standard_normal())?,
            (None, None) => kind.default_delta(),
        };
        if !(delta > 0.0) {
            return Err(CliError::Config(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Ok(ScoreFamily::new(kind, delta)?)
    }

    pub fn chi(&self, score: &Score) -> CliResult<ScaleScore> {
        Ok(ScaleScore::normal_consistent(score.clone())?)
    }

    pub fn side(&self, default: Side) -> CliResult<Side> {
        match self.s.str("side") {
            Some(v) => v.parse().map_err(cfg_err),
            None => Ok(default),
        }
    }

    pub fn scheme(&self) -> CliResult<SchemeConfig> {
        Ok(SchemeConfig {
            a_grid: self.s.flag("a_grid")?,
            centering: Centering::Origin,
        })
    }

    pub fn data(&self) -> CliResult<Ingested> {
        let input: PathBuf = self
            .s
            .str("input")
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Config("--input is required".into()))?;
        let input2 = self.s.str("input2").map(PathBuf::from);
        let order = match self.s.list::<String>("group_order")? {
            Some(v) if v.len() == 2 => Some((v[0].clone(), v[1].clone())),
            Some(_) => return Err(CliError::Config("group_order needs two labels".into())),
            None => None,
        };
        let opts = IngestOptions {
            column: self.s.str("column").map(String::from),
            group_col: self.s.str("group_col").map(String::from),
            group_order: order,
            mad_normalize: self.s.flag("mad_normalize")?,
        };
        ingest(&input, input2.as_deref(), &opts)
    }

    pub fn model(&self) -> CliResult<PopulationModel> {
        Ok(PopulationModel::parse(
            self.s.str("model").unwrap_or("normal"),
        )?)
    }

    fn estimator(&self, score: &Score) -> CliResult<EstimatorSpec<f64>> {
        let name = self
            .s
            .str("estimator")
            .unwrap_or("location")
            .to_ascii_lowercase()
            .replace('-', "_");
        Ok(match name.as_str() {
            "location" => EstimatorSpec::Location(score.clone()),
            "scale" => EstimatorSpec::Scale(self.chi(score)?),
            "two_stage" => EstimatorSpec::TwoStage {
                score: score.clone(),
                chi: self.chi(score)?,
                config: self.scheme()?,
            },
            "se_restricted" => EstimatorSpec::RestrictedSe {
                score: score.clone(),
                theta0: self.s.get_or("theta0", 0.0)?,
            },
            "se_plugin" => EstimatorSpec::PluginSe {
                score: score.clone(),
                envelope: self.s.flag("envelope")?,
                config: self.scheme()?,
            },
            other => return Err(CliError::Config(format!("unknown estimator '{other}'"))),
        })
    }

    pub fn test_spec(&self) -> CliResult<TestSpec> {
        let kind: TestKind = self
            .s
            .str("test")
            .unwrap_or("wald")
            .parse()
            .map_err(cfg_err)?;
        let mut spec = TestSpec::new(kind, self.s.get_or("alpha", 0.05)?);
        spec.theta0 = self.s.get_or("theta0", 0.0)?;
        spec.sigma0 = self.s.get("sigma0")?;
        if let Some(v) = self.s.str("sided") {
            spec.sided = v.parse::<Sided>().map_err(cfg_err)?;
        }
        spec.scheme = self.scheme()?;
        spec.envelope = self.s.flag("envelope")?;
        spec.budget_mode = match self
            .s
            .str("budget")
            .map(|b| b.to_ascii_lowercase().replace('-', "_"))
        {
            None => BudgetMode::Total,
            Some(b) if b == "total" => BudgetMode::Total,
            Some(b) if b == "per_sample" => BudgetMode::PerSample,
            Some(b) => return Err(CliError::Config(format!("unknown budget mode '{b}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn boot_config(&self) -> CliResult<BootstrapConfig> {
        let mut c = BootstrapConfig::new(self.s.get_or("boot_b", 1000usize)?, self.seed()?);
        if let Some(l) = self.s.list::<f64>("ci_levels")? {
            c.ci_levels = l;
        }
        if let Some(m) = self.s.str("ci_method") {
            c.method = m.parse::<CiMethod>().map_err(cfg_err)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn m_grid(&self, n: usize) -> CliResult<Vec<usize>> {
        let g = match (self.s.get::<usize>("m")?, self.s.usize_grid("m_grid")?) {
            (Some(m), _) => vec![m],
            (None, Some(g)) => g,
            (None, None) => tbp_core::sensitivity::default_m_grid(n),
        };
        if let Some(m) = g.iter().find(|&&m| m > n) {
            return Err(CliError::Config(format!("m = {m} exceeds n = {n}")));
        }
        Ok(g)
    }

    fn eta_grid(&self) -> CliResult<Vec<f64>> {
        let g = match (self.s.get::<f64>("eta")?, self.s.list::<f64>("eta_grid")?) {
            (Some(e), _) => vec![e],
            (None, Some(g)) => g,
            (None, None) => return Err(CliError::Config("give --eta or --eta-grid".into())),
        };
        if let Some(e) = g.iter().find(|e| !(**e > 0.0)) {
            return Err(CliError::Config(format!("eta must be positive, got {e}")));
        }
        Ok(g)
    }

    fn oracle_config(&self) -> CliResult<OracleConfig> {
        let mut c = OracleConfig::default();
        if let Some(v) = self.s.list::<f64>("oracle_candidates")? {
            c.candidate_values = v;
        }
        c.max_n = self.s.get_or("oracle_max_n", c.max_n)?;
        Ok(c)
    }
}

fn one_sample(d: &Ingested) -> CliResult<&Sample<f64>> {
    if d.y.is_some() {
        return Err(CliError::Config("this command expects one sample".into()));
    }
    Ok(&d.x)
}

fn bound_name(k: BoundKind) -> &'static str {
    k.name()
}

fn sample_labels(d: &Ingested) -> (String, String) {
    d.labels.clone().unwrap_or_else(|| ("x".into(), "y".into()))
}

// ------------------------------------------------------------------ fit

pub fn fit(ctx: &Ctx) -> CliResult<Report> {
    let d = ctx.data()?;
    let score = ctx.score()?;
    let chi = ctx.chi(&score)?;
    let mut t = Table::new(&[
        "sample",
        "n",
        "theta_hat",
        "se_hat",
        "sigma_hat",
        "theta_two_stage",
        "sigma_two_stage",
    ]);
    let (lx, ly) = sample_labels(&d);
    let mut samples = vec![(lx, &d.x)];
    if let Some(y) = &d.y {
        samples.push((ly, y));
    }
    for (label, s) in samples {
        let th = solve_location(s, &score)?.theta_hat;
        let se = plugin_se(s, &score, th).unwrap_or(f64::NAN);
        let sigma = solve_scale(s, &chi)
            .ok()
            .and_then(|f| f.sigma_hat)
            .unwrap_or(f64::NAN);
        let (t2, s2) = match solve_two_stage(s, &score, &chi) {
            Ok(f) => (f.theta_hat, f.sigma_hat.unwrap_or(f64::NAN)),
            Err(_) => (f64::NAN, f64::NAN),
        };
        t.push(vec![
            label.into(),
            s.n().into(),
            th.into(),
            se.into(),
            sigma.into(),
            t2.into(),
            s2.into(),
        ]);
    }
    Ok(Report::new(t)
        .with("command", json!("fit"))
        .with("loss", json!(score.kind().name()))
        .with("delta", jnum(score.delta()))
        .with("dropped_rows", json!(d.dropped)))
}

// ---------------------------------------------------------- sensitivity

/// m-sensitivity of θ̂_x − θ̂_y: the budget is split between the samples.
pub fn difference_sensitivity(
    x: &Sample<f64>,
    y: &Sample<f64>,
    score: &Score,
    m: usize,
    mode: BudgetMode,
) -> CliResult<(f64, f64)> {
    let tx = solve_location(x, score)?.theta_hat;
    let ty = solve_location(y, score)?.theta_hat;
    let mut up = 0.0f64;
    let mut dn = 0.0f64;
    for (a, b) in budget_splits(m, x.n(), y.n(), mode) {
        let u = location_eta(x.sorted(), score, tx, a, Side::Plus)
            + location_eta(y.sorted(), score, ty, b, Side::Minus);
        let v = location_eta(x.sorted(), score, tx, a, Side::Minus)
            + location_eta(y.sorted(), score, ty, b, Side::Plus);
        up = up.max(u);
        dn = dn.max(v);
    }
    Ok((up, dn))
}

pub fn sensitivity(ctx: &Ctx) -> CliResult<Report> {
    let d = ctx.data()?;
    let score = ctx.score()?;
    if let Some(y) = &d.y {
        return two_sample_sensitivity(ctx, &d.x, y, &score);
    }
    let s = &d.x;
    let spec = ctx.estimator(&score)?;
    let grid = ctx.m_grid(s.n())?;
    let mode = match ctx.s.str("bounds").unwrap_or("both") {
        "both" => CurveMode::Both,
        "lower" => CurveMode::Lower,
        "upper" => CurveMode::Upper,
        o => return Err(CliError::Config(format!("unknown bounds mode '{o}'"))),
    };
    let curve = sensitivity_curve(s, &spec, &grid, mode)?;
    let use_oracle = ctx.s.flag("oracle")?;
    let mut header = vec!["m", "m_over_n", "kind", "eta_plus", "eta_minus"];
    if use_oracle {
        header.extend(["oracle_plus", "oracle_minus"]);
    }
    let mut t = Table::new(&header);
    let oc = ctx.oracle_config()?;
    let target = OracleTarget::Estimator(spec.clone());
    let mut last_m = usize::MAX;
    let mut oracle = (f64::NAN, f64::NAN);
    for p in &curve.points {
        let mut row: Vec<Cell> = vec![
            p.m.into(),
            (p.m as f64 / s.n() as f64).into(),
            bound_name(p.kind).into(),
            p.eta_plus.into(),
            p.eta_minus.into(),
        ];
        if use_oracle {
            if p.m != last_m {
                oracle = (
                    brute_force_sensitivity(s, &target, p.m, Side::Plus, &oc)?,
                    brute_force_sensitivity(s, &target, p.m, Side::Minus, &oc)?,
                );
                last_m = p.m;
            }
            row.push(oracle.0.into());
            row.push(oracle.1.into());
        }
        t.push(row);
    }
    Ok(Report::new(t)
        .with("command", json!("sensitivity"))
        .with("estimator", json!(spec.label()))
        .with("loss", json!(score.kind().name()))
        .with("delta", jnum(score.delta()))
        .with("n", json!(s.n())))
}

fn two_sample_sensitivity(
    ctx: &Ctx,
    x: &Sample<f64>,
    y: &Sample<f64>,
    score: &Score,
) -> CliResult<Report> {
    let spec = ctx
        .test_spec()
        .unwrap_or_else(|_| TestSpec::new(TestKind::TwoSampleWald, 0.05));
    let nstar = x.n().min(y.n());
    let cap = nstar.div_ceil(2);
    let grid: Vec<usize> = match ctx.s.usize_grid("m_grid")? {
        Some(g) => g,
        None => (0..=cap).collect(),
    };
    let mut t = Table::new(&["m", "m_over_nstar", "eta_plus", "eta_minus"]);
    for &m in &grid {
        if m > cap {
            return Err(CliError::Config(format!(
                "m = {m} exceeds ceil(n*/2) = {cap}"
            )));
        }
        let (u, v) = difference_sensitivity(x, y, score, m, spec.budget_mode)?;
        t.push(vec![
            m.into(),
            (m as f64 / nstar as f64).into(),
            u.into(),
            v.into(),
        ]);
    }
    // one-sided thresholds z_{1−α}·ŝe − (θ̂_x − θ̂_y) at fixed pooled se
    let alphas = ctx.s.list::<f64>("alphas")?.unwrap_or(vec![0.05, 0.001]);
    let mut spec2 = TestSpec::new(TestKind::TwoSampleWald, 0.05).with_sided(Sided::OneSidedUpper);
    spec2.theta0 = spec.theta0;
    let out = run_test(&TestData::Two(x.clone(), y.clone()), score, &spec2)?;
    let thresholds: Vec<Value> = alphas
        .iter()
        .map(|&a| {
            let z = TestSpec::new(TestKind::TwoSampleWald, a)
                .with_sided(Sided::OneSidedUpper)
                .z();
            json!({"alpha": jnum(a), "threshold": jnum(z * out.se - out.center)})
        })
        .collect();
    Ok(Report::new(t)
        .with("command", json!("sensitivity"))
        .with("estimator", json!("location_difference"))
        .with("difference", jnum(out.center))
        .with("pooled_se", jnum(out.se))
        .with("thresholds", Value::Array(thresholds))
        .with("n_x", json!(x.n()))
        .with("n_y", json!(y.n())))
}

// ------------------------------------------------------------ breakdown

fn bp_kind_from_curve(k: BoundKind) -> BoundKind {
    // an upper sensitivity bound gives a lower breakdown bound
    match k {
        BoundKind::UpperBound => BoundKind::LowerBound,
        BoundKind::LowerBound => BoundKind::UpperBound,
        BoundKind::Exact => BoundKind::Exact,
    }
}

pub fn breakdown(ctx: &Ctx) -> CliResult<Report> {
    let d = ctx.data()?;
    let s = one_sample(&d)?;
    let score = ctx.score()?;
    let spec = ctx.estimator(&score)?;
    let etas = ctx.eta_grid()?;
    let side = ctx.side(Side::TwoSided)?;
    let n = s.n();
    let use_oracle = ctx.s.flag("oracle")?;
    let oc = ctx.oracle_config()?;
    let mut header = vec!["eta", "side", "kind", "m", "bp"];
    if use_oracle {
        header.push("oracle_m");
    }
    let mut t = Table::new(&header);
    let frac = |m: Option<usize>| m.map_or(f64::INFINITY, |m| m as f64 / n as f64);
    let curve = match &spec {
        EstimatorSpec::RestrictedSe { .. } | EstimatorSpec::PluginSe { .. } => Some(
            sensitivity_curve(s, &spec, &(1..=n).collect::<Vec<_>>(), CurveMode::Both)?,
        ),
        _ => None,
    };
    for &eta in &etas {
        let mut rows: Vec<(BoundKind, Option<usize>)> = Vec::new();
        match &spec {
            EstimatorSpec::Location(sc) => {
                let th = solve_location(s, sc)?.theta_hat;
                rows.push((BoundKind::Exact, location_bp(s, sc, th, eta, side)?.m));
            }
            EstimatorSpec::Scale(chi) => {
                let sig = solve_scale(s, chi)?.sigma_hat.unwrap_or(f64::NAN);
                rows.push((BoundKind::Exact, scale_bp(s, chi, sig, eta, side)?.m));
            }
            EstimatorSpec::TwoStage { score, chi, config } => {
                let (a, b) = two_stage_bp_bounds(s, score, chi, eta, side, config)?;
                rows.push((a.kind, a.m));
                rows.push((b.kind, b.m));
            }
            _ => {
                let c = curve.as_ref().unwrap();
                let mut kinds: Vec<BoundKind> = c.points.iter().map(|p| p.kind).collect();
                kinds.dedup();
                kinds.sort_by_key(|k| k.name());
                kinds.dedup();
                for k in kinds {
                    let m = c
                        .points
                        .iter()
                        .filter(|p| p.kind == k)
                        .find(|p| p.get(side) >= eta)
                        .map(|p| p.m);
                    rows.push((bp_kind_from_curve(k), m));
                }
            }
        }
        let om = if use_oracle {
            let target = OracleTarget::Estimator(spec.clone());
            let mut found = None;
            for m in 1..=n {
                if brute_force_sensitivity(s, &target, m, side, &oc)? >= eta {
                    found = Some(m);
                    break;
                }
            }
            Some(found)
        } else {
            None
        };
        for (k, m) in rows {
            let mut row: Vec<Cell> = vec![
                eta.into(),
                side.name().into(),
                bound_name(k).into(),
                m.into(),
                frac(m).into(),
            ];
            if let Some(o) = om {
                row.push(o.into());
            }
            t.push(row);
        }
    }
    Ok(Report::new(t)
        .with("command", json!("breakdown"))
        .with("estimator", json!(spec.label()))
        .with("loss", json!(score.kind().name()))
        .with("n", json!(n)))
}

// ----------------------------------------------------------- test-audit

/// Certified status of a two-sample band row for an accepting test.
fn band_status(
    decision: bool,
    sided: Sided,
    z: f64,
    low: f64,
    high: f64,
    upward: bool,
) -> &'static str {
    if decision {
        return "n/a";
    }
    let (flip, none) = if upward {
        (low > z, high <= z)
    } else {
        (high < -z, low >= -z)
    };
    if flip {
        "flip"
    } else if none && sided != Sided::TwoSided {
        "no_flip"
    } else {
        "unresolved"
    }
}

pub fn test_audit(ctx: &Ctx) -> CliResult<Report> {
    let d = ctx.data()?;
    let score = ctx.score()?;
    let mut spec = ctx.test_spec()?;
    let data = match &d.y {
        Some(y) => {
            if ctx.s.str("test").is_none() {
                spec.kind = TestKind::TwoSampleWald;
            }
            if spec.kind != TestKind::TwoSampleWald {
                return Err(CliError::Config(
                    "two samples need --test two-sample".into(),
                ));
            }
            TestData::Two(d.x.clone(), y.clone())
        }
        None => {
            if spec.kind == TestKind::TwoSampleWald {
                return Err(CliError::Config("two-sample test needs two samples".into()));
            }
            TestData::One(d.x.clone())
        }
    };
    let audit = match (&data, spec.kind) {
        (TestData::Two(x, y), _) => two_sample_bp_bounds(x, y, &score, &spec)?,
        (TestData::One(s), TestKind::Score | TestKind::RestrictedScore) => {
            score_test_bp(s, &score, &spec)?
        }
        (TestData::One(s), _) => test_bp_bounds(s, &score, &spec)?,
    };
    let o = &audit.outcome;
    let b = audit.bracket();
    let oracle = if ctx.s.flag("oracle")? {
        Some(brute_force_test_bp(
            &data,
            &score,
            &spec,
            &ctx.oracle_config()?,
        )?)
    } else {
        None
    };
    let upward = match spec.sided {
        Sided::OneSidedUpper => true,
        Sided::OneSidedLower => false,
        Sided::TwoSided => o.statistic >= 0.0,
    };
    let table = if audit.band.is_empty() {
        let mut t = Table::new(&[
            "decision", "bracket", "lower_m", "upper_m", "lower_bp", "upper_bp", "exact",
        ]);
        t.push(vec![
            o.decision.into(),
            (if o.decision { "reject" } else { "accept" }).into(),
            b.lower.into(),
            b.upper.into(),
            b.lower_bp().into(),
            b.upper_bp().into(),
            audit.exact.into(),
        ]);
        t
    } else {
        let nstar = data.n_norm() as f64;
        let mut t = Table::new(&["m", "m_over_nstar", "low", "high", "z", "status"]);
        for r in &audit.band {
            t.push(vec![
                r.m.into(),
                (r.m as f64 / nstar).into(),
                r.low.into(),
                r.high.into(),
                o.z.into(),
                band_status(o.decision, spec.sided, o.z, r.low, r.high, upward).into(),
            ]);
        }
        t
    };
    let mut rep = Report::new(table)
        .with("command", json!("test-audit"))
        .with("test", json!(spec.kind.name()))
        .with("alpha", jnum(spec.alpha))
        .with(
            "decision",
            json!(if o.decision { "reject" } else { "accept" }),
        )
        .with("statistic", jnum(o.statistic))
        .with("center", jnum(o.center))
        .with("se", jnum(o.se))
        .with("z", jnum(o.z))
        .with("lower_m", jopt(b.lower))
        .with("upper_m", jopt(b.upper))
        .with("lower_bp", jnum(b.lower_bp()))
        .with("upper_bp", jnum(b.upper_bp()))
        .with("cap", json!(b.cap))
        .with("exact", json!(audit.exact));
    if let Some(or) = oracle {
        rep = rep
            .with("oracle_m", jopt(or.m))
            .with("oracle_in_bracket", json!(b.contains(or.m)));
    }
    Ok(rep)
}

// ------------------------------------------------------------ bootstrap

pub fn bootstrap(ctx: &Ctx) -> CliResult<Report> {
    let d = ctx.data()?;
    let s = one_sample(&d)?;
    let score = ctx.score()?;
    let cfg = ctx.boot_config()?;
    let side = ctx.side(Side::Plus)?;
    let (target, summary) = match (ctx.s.get::<usize>("m")?, ctx.s.get::<f64>("eta")?) {
        (Some(m), None) => (
            "sensitivity",
            bootstrap_sensitivity(s, &score, m, side, &cfg)?,
        ),
        (None, Some(eta)) => ("breakdown", bootstrap_bp(s, &score, eta, side, &cfg)?),
        _ => return Err(CliError::Config("give exactly one of --m or --eta".into())),
    };
    let mut t = Table::new(&["replicate", "value"]);
    for (i, v) in summary.draws.iter().enumerate() {
        t.push(vec![i.into(), (*v).into()]);
    }
    let ci: Vec<Value> = summary
        .ci
        .iter()
        .map(|c| json!({"level": jnum(c.level), "lo": jnum(c.lo), "hi": jnum(c.hi)}))
        .collect();
    Ok(Report::new(t)
        .with("command", json!("bootstrap"))
        .with("target", json!(target))
        .with("side", json!(side.name()))
        .with("point", jnum(summary.point))
        .with("ci", Value::Array(ci))
        .with("method", json!(summary.method.name()))
        .with("B", json!(summary.replicates))
        .with("seed", json!(summary.seed))
        .with("failures", json!(summary.failures))
        .with("weight_warnings", json!(cfg.weight_law.warnings())))
}

// ----------------------------------------------------------- population

pub fn population(ctx: &Ctx) -> CliResult<Report> {
    let model = ctx.model()?;
    let score = ctx.score()?;
    let eps_max = ctx.s.get_or("eps_max", 0.45)?;
    let step = ctx.s.get_or("step", 0.01)?;
    let eps = ctx.s.get_or("eps", 0.1)?;
    let c = maxbias_curve(&model, &score, eps_max, step)?;
    let mut t = Table::new(&[
        "epsilon",
        "eta_plus",
        "eta_minus",
        "deta_deps",
        "deta_deps_minus",
    ]);
    for i in 0..c.len() {
        t.push(vec![
            c.epsilons[i].into(),
            c.eta_plus[i].into(),
            c.eta_minus[i].into(),
            c.deriv_plus[i].into(),
            c.deriv_minus[i].into(),
        ]);
    }
    let theta0 = population_location(&model, &score)?;
    let mut var = serde_json::Map::new();
    for side in [Side::Plus, Side::Minus] {
        let v = variance_terms(&model, &score, eps, side)?;
        let e = v.b - v.psi_q;
        var.insert(
            side.name().into(),
            json!({
                "eta": jnum(v.eta),
                "V": jnum(v.sandwich),
                "V_expanded": jnum(v.expanded),
                "sigma2_bp": jnum((v.b_tail / e).powi(2) * v.sandwich),
                "deps_deta": jnum(v.bp_slope()),
            }),
        );
    }
    Ok(Report::new(t)
        .with("command", json!("population"))
        .with("loss", json!(score.kind().name()))
        .with("delta", jnum(score.delta()))
        .with("theta0", jnum(theta0))
        .with("eps", jnum(eps))
        .with("variance", Value::Object(var)))
}

// ------------------------------------------------------------------ pit

pub fn pit(ctx: &Ctx) -> CliResult<Report> {
    let model = ctx.model()?;
    let score = ctx.score()?;
    let eps = ctx.s.get_or("eps", 0.1)?;
    let n = ctx.s.get_or("n", 100usize)?;
    let outer = ctx.s.get_or("outer", 200usize)?;
    let mut cfg = ctx.boot_config()?;
    if ctx.s.str("boot_b").is_none() {
        cfg.replicates = 200;
    }
    let r = pit_uniformity(&model, &score, eps, n, outer, &cfg)?;
    let mut t = Table::new(&["j", "u"]);
    for (j, u) in r.u.iter().enumerate() {
        t.push(vec![j.into(), (*u).into()]);
    }
    Ok(Report::new(t)
        .with("command", json!("pit"))
        .with("eps", jnum(eps))
        .with("n", json!(n))
        .with("m", json!(r.m))
        .with("M", json!(outer))
        .with("B", json!(cfg.replicates))
        .with("seed", json!(cfg.seed))
        .with("eta_population", jnum(r.eta_population))
        .with("ks_stat", jnum(r.ks_stat))
        .with("p_value", jnum(r.p_value)))
}

// --------------------------------------------------------------- oracle

pub fn oracle(ctx: &Ctx) -> CliResult<Report> {
    let d = ctx.data()?;
    let score = ctx.score()?;
    let oc = ctx.oracle_config()?;
    if ctx.s.str("test").is_some() || d.y.is_some() {
        let mut c2 = Ctx::new(ctx.s.clone());
        c2.s.set("oracle", "true");
        return test_audit(&c2);
    }
    let s = &d.x;
    if s.n() > oc.max_n {
        return Err(CliError::Config(format!(
            "oracle limited to n <= {}",
            oc.max_n
        )));
    }
    let spec = ctx.estimator(&score)?;
    let grid = ctx.m_grid(s.n())?;
    let curve = sensitivity_curve(s, &spec, &grid, CurveMode::Both)?;
    let target = OracleTarget::Estimator(spec.clone());
    let mut t = Table::new(&[
        "m",
        "side",
        "oracle",
        "analytic_low",
        "analytic_high",
        "contained",
    ]);
    for &m in &grid {
        for side in [Side::Plus, Side::Minus] {
            let o = brute_force_sensitivity(s, &target, m, side, &oc)?;
            let pts: Vec<f64> = curve
                .points
                .iter()
                .filter(|p| p.m == m)
                .map(|p| p.get(side))
                .collect();
            let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-8 * (1.0 + o.abs());
            let ok = (o.is_infinite() && hi.is_infinite()) || (o >= lo - tol && o <= hi + tol);
            t.push(vec![
                m.into(),
                side.name().into(),
                o.into(),
                lo.into(),
                hi.into(),
                ok.into(),
            ]);
        }
    }
    Ok(Report::new(t)
        .with("command", json!("oracle"))
        .with("estimator", json!(spec.label()))
        .with("n", json!(s.n())))
}
