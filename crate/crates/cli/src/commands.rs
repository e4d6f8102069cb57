use std::fmt::Write as _;
use std::path::Path;

use serlab::bounds::{
    check_derivative_bounds, coefficients, inflection_scan, log_concavity_check, noise_regimes,
    snr_regimes,
};
use serlab::closed_form::ClosedForm;
use serlab::curve::{curve, CurveEstimate, Grid, Method, Quantity, Target};
use serlab::fading::{
    average_ser, avg_convexity_check, jensen_check, scale_family_check, FadingFamily, FadingModel,
};
use serlab::interp::SerInterpolant;
use serlab::optimize::{blast_allocate, blast_bler, find_inflection, jam_optimal, jam_suboptimal};
use serlab::sphere::{
    extremal_radii, sphere_pc_d, sphere_pe, sphere_pe_noise, sphere_pe_noise_d, SphereRegion,
};
use serlab::{Axis, Constellation, Error, StandardConstellation};

use crate::{AllocateArgs, FadeArgs, Failure, JamArgs, Report, SerArgs, SphereArgs, VerifyArgs};

const MIN_MC_SAMPLES: usize = 1000;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(command: &str, config: &[(&str, String)]) -> String {
    let mut s = format!("# serlab {} {command}", env!("CARGO_PKG_VERSION"));
    for (k, v) in config {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    s
}

fn load_constellation(source: &str) -> Result<Constellation, Failure> {
    if let Ok(kind) = source.parse::<StandardConstellation>() {
        return Ok(Constellation::standard(kind)?);
    }
    let path = Path::new(source);
    if !path.is_file() {
        return Err(usage(format!(
            "'{source}' is neither a standard constellation nor a readable file"
        )));
    }
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {source}: {e}")))?;
    Ok(Constellation::from_json(&text)?)
}

fn parse_grid(spec: &str) -> Result<Grid, Failure> {
    let g: Grid = spec.parse()?;
    if g.len() < 2 {
        return Err(usage(format!("grid '{spec}' needs at least two points")));
    }
    Ok(g)
}

fn axis_grid(
    snr: &Option<String>,
    noise: &Option<String>,
) -> Result<(Axis, Grid, String), Failure> {
    match (snr, noise) {
        (Some(s), None) => Ok((Axis::Snr, parse_grid(s)?, s.clone())),
        (None, Some(s)) => Ok((Axis::NoisePower, parse_grid(s)?, s.clone())),
        _ => Err(usage("give exactly one of --snr or --noise")),
    }
}

fn check_samples(method: Method, samples: usize) -> Result<(), Failure> {
    if method == Method::MonteCarlo && samples < MIN_MC_SAMPLES {
        return Err(usage(format!(
            "Monte Carlo runs need --samples >= {MIN_MC_SAMPLES}"
        )));
    }
    Ok(())
}

fn closed_form(s: &str) -> Result<ClosedForm<f64>, Failure> {
    Ok(s.parse()?)
}

pub fn ser(a: &SerArgs) -> Result<Report, Failure> {
    let c = load_constellation(&a.constellation)?;
    let (axis, grid, grid_spec) = axis_grid(&a.snr, &a.noise)?;
    let quantity: Quantity = a.quantity.parse()?;
    let method: Method = a.method.parse()?;
    check_samples(method, a.samples)?;
    let cv = curve(&c, axis, &grid, quantity, method, a.samples, a.seed)?;
    let mut text = header(
        "ser",
        &[
            ("constellation", a.constellation.clone()),
            ("axis", axis.to_string()),
            ("grid", grid_spec),
            ("quantity", quantity.to_string()),
            ("method", method.to_string()),
            ("samples", a.samples.to_string()),
            ("seed", a.seed.to_string()),
        ],
    );
    text.push_str(&cv.to_csv());
    Ok(Report { text, passed: true })
}

struct Checks {
    text: String,
    total: usize,
    failed: usize,
}

impl Checks {
    fn record(&mut self, pass: bool, line: &str) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        let _ = writeln!(
            self.text,
            "[{}] {}",
            if pass { "PASS" } else { "FAIL" },
            line.trim_end()
        );
    }

    fn info(&mut self, line: &str) {
        let _ = writeln!(self.text, "[INFO] {}", line.trim_end());
    }
}

pub fn verify(a: &VerifyArgs) -> Result<Report, Failure> {
    let c = load_constellation(&a.constellation)?;
    let n = c.dim();
    let method: Method = match &a.method {
        Some(m) => m.parse()?,
        None if n <= 2 => Method::Quadrature,
        None => Method::MonteCarlo,
    };
    check_samples(method, a.samples)?;
    let snr_grid = parse_grid(&a.snr)?;
    let noise_grid = parse_grid(&a.noise)?;
    let bs = coefficients::<f64>(n)?;
    let mut ck = Checks {
        text: header(
            "verify",
            &[
                ("constellation", a.constellation.clone()),
                ("n", n.to_string()),
                ("points", c.len().to_string()),
                ("snr", a.snr.clone()),
                ("noise", a.noise.clone()),
                ("method", method.to_string()),
                ("samples", a.samples.to_string()),
                ("seed", a.seed.to_string()),
            ],
        ),
        total: 0,
        failed: 0,
    };
    ck.info(&format!(
        "coefficients n={n} c_n={} beta_l={} beta_u={} b_l={} b_u={} b_1={} b_2={}",
        f17(bs.c_n),
        f17(bs.beta_l),
        f17(bs.beta_u),
        f17(bs.b_l),
        f17(bs.b_u),
        f17(bs.b_1),
        f17(bs.b_2)
    ));
    if n != 2 {
        let (lit_l, lit_u) = bs.literal_beta();
        ck.info(&format!(
            "beta discrepancy n={n}: extremal-sphere beta_u={} vs a_n-based beta_u={}; beta_l={} vs {} (the two forms agree only at n=2; the extremal-sphere values are used)",
            f17(bs.beta_u),
            f17(lit_u),
            f17(bs.beta_l),
            if lit_l.is_nan() { "undefined".to_string() } else { f17(lit_l) }
        ));
    }
    let snr_reg = snr_regimes(&c, true)?;
    let noise_reg = noise_regimes(&c, true)?;
    let snr_global = snr_regimes(&c, false)?;
    let noise_global = noise_regimes(&c, false)?;
    if snr_global.globally_convex {
        ck.info(&format!("n={n} <= 2: P_e is convex for all snr"));
    }
    for r in [&snr_global, &noise_global, &snr_reg, &noise_reg] {
        for line in r.summary().lines() {
            ck.info(line);
        }
    }

    for (axis, grid) in [(Axis::Snr, &snr_grid), (Axis::NoisePower, &noise_grid)] {
        for order in [1u8, 2] {
            let cv = curve(
                &c,
                axis,
                grid,
                Quantity::pe().derivative(order),
                method,
                a.samples,
                a.seed,
            )?;
            let rep = check_derivative_bounds(&cv, &bs)?;
            ck.record(rep.passed(), &rep.summary());
            if order == 2 {
                let regime = if axis == Axis::Snr {
                    &snr_global
                } else {
                    &noise_global
                };
                scan_inflections(
                    &mut ck,
                    &cv,
                    regime.entries[0].intermediate,
                    regime.globally_convex,
                )?;
            }
        }
    }

    for i in 0..c.len() {
        let cv = curve(
            &c,
            Axis::Snr,
            &snr_grid,
            Quantity::pci(i),
            method,
            a.samples,
            a.seed,
        )?;
        match log_concavity_check(&cv) {
            Ok(rep) => ck.record(
                rep.passed,
                &format!(
                    "log-concavity P_c{i}: worst slope increase minus 4 std errors {} at snr {}",
                    f17(rep.worst),
                    rep.worst_at.map_or("n/a".to_string(), f17)
                ),
            ),
            Err(Error::NonPositiveValue(k)) => ck.info(&format!(
                "log-concavity P_c{i}: skipped, estimate at grid index {k} is zero"
            )),
            Err(e) => return Err(e.into()),
        }
    }
    if c.is_symmetric() {
        ck.info(
            "symmetric constellation: P_c equals every P_ci, so the average is log-concave too",
        );
    }
    let _ = writeln!(
        ck.text,
        "# summary: {} checks, {} failed",
        ck.total, ck.failed
    );
    Ok(Report {
        passed: ck.failed == 0,
        text: ck.text,
    })
}

fn scan_inflections(
    ck: &mut Checks,
    cv: &CurveEstimate<f64>,
    intermediate: Option<serlab::bounds::Interval<f64>>,
    globally_convex: bool,
) -> Result<(), Failure> {
    let axis = cv.axis;
    let (first, last) = (cv.grid[0], cv.grid[cv.len() - 1]);
    if globally_convex {
        let scan = inflection_scan(cv, (first, last))?;
        ck.record(
            scan.crossings.is_empty(),
            &format!(
                "no inflection on {axis} grid: {} significant crossings, {} unresolved",
                scan.crossings.len(),
                scan.unresolved
            ),
        );
        return Ok(());
    }
    let Some(b) = intermediate else { return Ok(()) };
    match inflection_scan(cv, (b.lo, b.hi)) {
        Ok(scan) => ck.info(&format!(
            "inflection scan {axis} in [{}, {}]: {} significant crossings {:?}, {} unresolved, odd={}",
            f17(b.lo),
            if b.hi.is_finite() { f17(b.hi) } else { "inf".into() },
            scan.crossings.len(),
            scan.crossings,
            scan.unresolved,
            scan.odd
        )),
        Err(Error::BracketOutsideGrid { .. }) => ck.info(&format!("inflection scan {axis}: bracket outside the grid")),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn sphere(a: &SphereArgs) -> Result<Report, Failure> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if a.order > 2 {
        return Err(usage("--order must be 0, 1 or 2"));
    }
    let (axis, grid, grid_spec) = axis_grid(&a.snr, &a.noise)?;
    let rule = a.radius_rule.trim().to_ascii_lowercase();
    let fixed = match rule.strip_prefix("fixed:") {
        Some(r) => Some(
            r.parse::<f64>()
                .ok()
                .filter(|r| *r > 0.0)
                .ok_or_else(|| usage(format!("bad radius in '{rule}'")))?,
        ),
        None if ["first-order", "lower", "upper"].contains(&rule.as_str()) => None,
        None => return Err(usage(format!("unknown radius rule '{rule}'"))),
    };
    let radius = |x: f64| -> Result<f64, Error> {
        if let Some(r) = fixed {
            return Ok(r);
        }
        let r = extremal_radii(a.n, axis, x)?;
        Ok(match rule.as_str() {
            "lower" => r.lower,
            "upper" => r.upper,
            _ => r.first_order,
        })
    };
    let value = |x: f64| -> Result<f64, Error> {
        let r = radius(x)?;
        if r == 0.0 {
            return Ok(if a.order == 0 { 1.0 } else { 0.0 });
        }
        let s = SphereRegion::new(a.n, r)?;
        match (axis, a.order) {
            (Axis::Snr, 0) => sphere_pe(&s, x),
            (Axis::Snr, k) => Ok(-sphere_pc_d(&s, x, k)?),
            (Axis::NoisePower, 0) => sphere_pe_noise(&s, x),
            (Axis::NoisePower, k) => sphere_pe_noise_d(&s, x, k),
        }
    };
    for &x in grid.points() {
        value(x)?;
    }
    let cv = CurveEstimate::from_fn(axis, Quantity::pei(0).derivative(a.order), &grid, |x| {
        value(x).unwrap_or(f64::NAN)
    });
    let bs = coefficients::<f64>(a.n)?;
    let mut text = header(
        "sphere",
        &[
            ("n", a.n.to_string()),
            ("radius_rule", rule.clone()),
            ("axis", axis.to_string()),
            ("grid", grid_spec),
            ("order", a.order.to_string()),
        ],
    );
    let _ = writeln!(
        text,
        "# c_n={} beta_l={} beta_u={} b_l={} b_u={}",
        f17(bs.c_n),
        f17(bs.beta_l),
        f17(bs.beta_u),
        f17(bs.b_l),
        f17(bs.b_u)
    );
    text.push_str(&cv.to_csv());
    Ok(Report { text, passed: true })
}

pub fn fade(a: &FadeArgs) -> Result<Report, Failure> {
    let family: FadingFamily = a.fading.parse()?;
    let grid = parse_grid(&a.mean_snr)?;
    let (source, pe): (String, Box<dyn Fn(f64) -> f64>) = match (&a.pe, &a.curve) {
        (Some(p), None) => {
            let cf = closed_form(p)?;
            (p.clone(), Box::new(move |g| cf.pe(g)))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let cv = CurveEstimate::from_csv(&text)?;
            if cv.axis != Axis::Snr
                || cv.quantity.order != 0
                || !matches!(cv.quantity.target, Target::ErrorAvg | Target::ErrorAt(_))
            {
                return Err(usage(
                    "--curve must hold an error-probability curve on the snr axis",
                ));
            }
            let interp = SerInterpolant::new(cv.grid, cv.values)?;
            (
                path.display().to_string(),
                Box::new(move |g| interp.eval(g)),
            )
        }
        _ => return Err(usage("give exactly one of --pe or --curve")),
    };
    let scale = scale_family_check(&FadingModel::new(family, 1.0)?);
    let mut text = header(
        "fade",
        &[
            ("pe", source),
            ("fading", family.to_string()),
            ("mean_snr", a.mean_snr.clone()),
        ],
    );
    let mut rows = String::from("mean_snr,average_ser,pe_at_mean,jensen_gap\n");
    for &g0 in grid.points() {
        let j = jensen_check(&pe, &FadingModel::new(family, g0)?)?;
        let _ = writeln!(
            rows,
            "{},{},{},{}",
            f17(g0),
            f17(j.average),
            f17(j.at_mean),
            f17(j.gap)
        );
    }
    let convex = if grid.len() >= 3 {
        let r = avg_convexity_check(&pe, family, grid.points())?;
        format!(
            "{} (worst relative second difference {})",
            r.passed,
            f17(r.worst)
        )
    } else {
        "n/a".into()
    };
    let _ = writeln!(text, "# scale_family={scale} convex_in_mean_snr={convex}");
    text.push_str(&rows);
    Ok(Report { text, passed: true })
}

pub fn allocate(a: &AllocateArgs) -> Result<Report, Failure> {
    let cf = closed_form(&a.pe)?;
    let family = a
        .fading
        .as_deref()
        .map(str::parse::<FadingFamily>)
        .transpose()?;
    // d/dγ₀ E[pe(γ₀T)] = E[(γ/γ₀)·pe'(γ)]
    let pe = |g: f64| match family {
        None => cf.pe(g),
        Some(f) => FadingModel::new(f, g)
            .and_then(|m| average_ser(|x| cf.pe(x), &m))
            .unwrap_or(f64::NAN),
    };
    let pe_d1 = |g: f64| match family {
        None => cf.pe_d1(g),
        Some(f) => FadingModel::new(f, g)
            .and_then(|m| average_ser(|x| x / g * cf.pe_d1(x), &m))
            .unwrap_or(f64::NAN),
    };
    let r = blast_allocate(pe, pe_d1, &a.streams)?;
    let uniform = blast_bler(pe, &vec![1.0; a.streams.len()], &a.streams)?;
    let streams: Vec<String> = a.streams.iter().map(|s| s.to_string()).collect();
    let mut text = header(
        "allocate",
        &[
            ("pe", a.pe.clone()),
            ("streams", streams.join(",")),
            ("fading", family.map_or("none".into(), |f| f.to_string())),
        ],
    );
    let _ = writeln!(
        text,
        "# multiplier={} objective={} uniform_objective={} kkt_residual={}",
        f17(r.multiplier),
        f17(r.objective),
        f17(uniform),
        f17(r.kkt_residual)
    );
    text.push_str("stream,snr,fraction\n");
    for (i, (&g, &f)) in a.streams.iter().zip(&r.fractions).enumerate() {
        let _ = writeln!(text, "{i},{},{}", f17(g), f17(f));
    }
    Ok(Report {
        text,
        passed: r.kkt_residual < 1e-6,
    })
}

pub fn jam(a: &JamArgs) -> Result<Report, Failure> {
    let cf = closed_form(&a.pe)?;
    let (lo, hi) = a
        .bracket
        .split_once(':')
        .and_then(|(l, h)| Some((l.parse::<f64>().ok()?, h.parse::<f64>().ok()?)))
        .ok_or_else(|| usage(format!("bracket must be lo:hi, got '{}'", a.bracket)))?;
    let optimal = match a.mode.as_str() {
        "optimal" => true,
        "suboptimal" => false,
        m => return Err(usage(format!("unknown mode '{m}'"))),
    };
    let p0 = match find_inflection(|p| cf.pe_noise_d2(p), lo, hi) {
        Ok(p) => Some(p),
        Err(Error::NoSignChange { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let pe = |p: f64| cf.pe_noise(p);
    let s = match (p0, optimal) {
        (Some(p0), false) => jam_suboptimal(pe, p0, a.budget)?,
        (p0, _) => jam_optimal(pe, |p| cf.pe_noise_d1(p), p0, a.budget)?,
    };
    let mut text = header(
        "jam",
        &[
            ("pe", a.pe.clone()),
            ("budget", f17(a.budget)),
            ("mode", a.mode.clone()),
            ("bracket", a.bracket.clone()),
        ],
    );
    let _ = writeln!(
        text,
        "# inflection={} no_sharing={}",
        p0.map_or("none".to_string(), f17),
        f17(pe(a.budget))
    );
    let _ = write!(text, "# {}", s.summary());
    text.push_str(&s.to_csv());
    Ok(Report { text, passed: true })
}
