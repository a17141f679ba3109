use std::fmt::Display;

use ldlab_core::estimators::*;
use ldlab_core::exact_kernels::*;
use ldlab_core::tower::TowerModel;
use ldlab_core::{LdError, MapSpec, Observable, ObservableKind, OrbitStream};

use crate::args::*;
use crate::output::Record;
use crate::svg::{Plot, Series};

#[derive(Debug)]
pub enum CliError {
    /// Bad parameter, exit status 2.
    Param(String),
    /// Failure while running, exit status 1.
    Run(String),
}

impl From<LdError> for CliError {
    fn from(e: LdError) -> Self {
        match e {
            LdError::Certificate { .. } | LdError::InsufficientData(_) => CliError::Run(e.to_string()),
            _ => CliError::Param(e.to_string()),
        }
    }
}

fn bad<E: Display>(key: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Param(format!("key '{key}': {e}"))
}

fn parse_map(s: &str) -> Result<MapSpec, CliError> {
    s.parse().map_err(bad("map"))
}

fn parse_obs(s: &str) -> Result<Observable, CliError> {
    let kind: ObservableKind = s.parse().map_err(bad("obs"))?;
    Observable::new(kind).map_err(bad("obs"))
}

fn parse_side(s: &str) -> Result<Side, CliError> {
    s.parse().map_err(bad("side"))
}

fn channel(c: ChannelArg, map: &str) -> Result<Channel, CliError> {
    Ok(match c {
        ChannelArg::Iid => Channel::Iid,
        ChannelArg::Orbit => Channel::Orbit(parse_map(map)?),
    })
}

pub struct Outcome {
    pub theorem: &'static str,
    pub summary: Record,
    pub records: Vec<Record>,
    pub plot: Option<Plot>,
    /// Self-check verdict and its explanation.
    pub check: Option<(bool, String)>,
}

fn estimate_record(e: &TailEstimate) -> Record {
    Record::new()
        .int("n", e.n)
        .num("eps", e.eps)
        .int("count", e.count)
        .int("samples", e.samples)
        .num("phat", e.p_hat)
        .num("ci_lo", e.ci_lo)
        .num("ci_hi", e.ci_hi)
        .flag("unreliable", e.unreliable)
}

pub fn run(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Tail(a) => tail(a),
        Command::Exponent(a) => exponent(a),
        Command::Lowerbound(a) => lowerbound(a),
        Command::Autocorr(a) => autocorr(a),
        Command::Lpdecay(a) => lpdecay(a),
        Command::Martingale(a) => martingale(a),
        Command::Erdos(a) => erdos(a),
        Command::Obstruct(a) => obstruct(a),
        Command::Pressure(a) => pressure(a),
        Command::Tower(a) => tower(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn tail(a: &TailArgs) -> Result<Outcome, CliError> {
    let ch = channel(a.channel, &a.map)?;
    let obs = parse_obs(&a.obs)?;
    let side = parse_side(&a.side)?;
    let pairs: Vec<(u64, f64)> = a.n.iter().flat_map(|&n| a.eps.iter().map(move |&e| (n, e))).collect();
    let est = tail_mc_multi(&ch, &obs, &pairs, side, a.samples, a.common.seed)?;
    let records: Vec<Record> = est.iter().map(estimate_record).collect();
    let all_reliable = est.iter().all(|e| !e.unreliable);
    let series = a
        .eps
        .iter()
        .map(|&eps| Series {
            label: format!("eps = {eps}"),
            points: est.iter().filter(|e| e.eps == eps).map(|e| (e.n as f64, e.p_hat)).collect(),
        })
        .collect();
    Ok(Outcome {
        theorem: "stretched-exponential tail probabilities",
        summary: Record::new()
            .text("map", &a.map)
            .text("obs", &a.obs)
            .num("mean", obs.mean()?)
            .text("side", &a.side),
        records,
        plot: Some(Plot {
            title: format!("tail probabilities of {}", a.obs),
            x_label: "n".into(),
            y_label: "p_hat".into(),
            log_x: false,
            log_y: true,
            series,
        }),
        check: Some((all_reliable, format!("all estimates reliable: {all_reliable}"))),
    })
}

fn exponent(a: &ExponentArgs) -> Result<Outcome, CliError> {
    let eps = match (a.eps, a.preset, a.alpha) {
        (Some(e), _, _) => e,
        (None, Some(Preset::Thm32), x) if x == 1.0 => 0.3,
        (None, Some(Preset::Thm32), x) if x == 2.0 => 3.0,
        _ => return Err(CliError::Param("key 'eps': required unless --preset thm32 with alpha 1 or 2".into())),
    };
    if !(a.alpha > 0.0) {
        return Err(CliError::Param("key 'alpha': must be positive".into()));
    }
    let map = parse_map(&a.map)?;
    let obs = Observable::log_pow(a.alpha, 0.0).centered()?;
    let est = tail_mc_grid(&Channel::Orbit(map), &obs, &a.n, eps, Side::Upper, a.samples, a.common.seed)?;
    let target = 1.0 / (1.0 + a.alpha);
    let fit = fit_exponent(&est);
    let mut summary = Record::new().num("alpha", a.alpha).num("eps", eps).num("target", target);
    let check = match &fit {
        Ok(f) => {
            summary = summary
                .num("gamma_hat", f.gamma_hat)
                .num("stderr", f.stderr)
                .int("n_min", f.n_min)
                .int("n_max", f.n_max)
                .flag("unreliable", false);
            let ok = (f.gamma_hat - target).abs() <= a.tol;
            (ok, format!("gamma_hat {:.4} vs target {target:.4} (tol {})", f.gamma_hat, a.tol))
        }
        Err(e) => {
            summary = summary.flag("unreliable", true).text("reason", e.to_string());
            (false, format!("no fit: {e}"))
        }
    };
    let pts: Vec<(f64, f64)> = est
        .iter()
        .filter(|e| e.p_hat > 0.0)
        .map(|e| (e.n as f64, -e.p_hat.ln()))
        .collect();
    Ok(Outcome {
        theorem: "stretched-exponential large deviation exponent 1/(1+alpha)",
        summary,
        records: est.iter().map(estimate_record).collect(),
        plot: Some(Plot {
            title: format!("-ln p_n for alpha = {}", a.alpha),
            x_label: "n".into(),
            y_label: "-ln p_hat".into(),
            log_x: true,
            log_y: true,
            series: vec![Series { label: format!("eps = {eps}"), points: pts }],
        }),
        check: Some(check),
    })
}

fn lowerbound(a: &LowerBoundArgs) -> Result<Outcome, CliError> {
    let map = parse_map(&a.map)?;
    let obs = Observable::log_pow(a.alpha, 0.0);
    let c = lower_bound_construction(&map, &obs, a.n, a.eps, a.samples as usize, a.common.seed)?;
    let summary = Record::new()
        .num("alpha", c.alpha)
        .int("n", c.n)
        .num("eps", c.eps)
        .num("mean", c.mean)
        .num("omega", c.omega)
        .num("r", c.r)
        .num("log_width", c.log_width)
        .num("log_p_lower", c.log_p_lower())
        .int("sampled", c.sampled as u64)
        .int("failures", c.failures as u64)
        .num("min_margin", c.min_margin);
    Ok(Outcome {
        theorem: "explicit lower-bound interval near the fixed point",
        records: vec![summary.clone()],
        summary,
        plot: None,
        check: Some((c.failures == 0, format!("{} failures out of {}", c.failures, c.sampled))),
    })
}

fn curve_outcome(
    theorem: &'static str,
    curve: &DecayCurve,
    column: &str,
    max_slope: f64,
) -> Outcome {
    let ok = curve.log_slope <= max_slope;
    Outcome {
        theorem,
        summary: Record::new()
            .text("label", &curve.label)
            .num("log_slope", curve.log_slope)
            .int("fit_from", curve.fit_from),
        records: curve.points.iter().map(|&(n, v)| Record::new().int("n", n).num(column, v)).collect(),
        plot: Some(Plot {
            title: curve.label.clone(),
            x_label: "n".into(),
            y_label: format!("|{column}|"),
            log_x: false,
            log_y: true,
            series: vec![Series {
                label: curve.label.clone(),
                points: curve.points.iter().map(|&(n, v)| (n as f64, v.abs())).collect(),
            }],
        }),
        check: Some((ok, format!("log-slope {:.4} <= {max_slope}: {ok}", curve.log_slope))),
    }
}

fn autocorr(a: &AutocorrArgs) -> Result<Outcome, CliError> {
    let obs = parse_obs(&a.obs)?;
    let curve = autocorrelation_curve(&obs, a.nmax)?;
    Ok(curve_outcome("exponential decay of autocorrelations", &curve, "autocorrelation", a.max_slope))
}

fn lpdecay(a: &LpDecayArgs) -> Result<Outcome, CliError> {
    let obs = parse_obs(&a.obs)?;
    let curve = lp_decay_curve(&obs, a.p, a.nmax)?;
    Ok(curve_outcome("exponential L^p decay under the transfer operator", &curve, "norm", a.max_slope))
}

fn martingale(a: &MartingaleArgs) -> Result<Outcome, CliError> {
    let obs = parse_obs(&a.obs)?;
    let m = martingale_decompose(&obs, a.n, a.alpha, a.theta)?;
    let records: Vec<Record> = (0..64)
        .map(|i| {
            let x = (i as f64 + 0.5) / 64.0;
            Record::new()
                .num("x", x)
                .num("h", m.h.eval_unchecked(x) - m.h_mean)
                .num("w", m.w(x))
                .num("g", m.g(x))
        })
        .collect();
    let ok = m.telescoping_error <= 1e-10 && m.residual <= m.residual_bound && m.w_sup <= m.w_bound();
    let summary = Record::new()
        .int("n", m.n)
        .num("alpha", m.alpha)
        .num("theta", m.theta)
        .num("m_n", m.m_n)
        .int("c_n", m.c_n)
        .num("variation", m.variation)
        .num("telescoping_error", m.telescoping_error)
        .num("residual", m.residual)
        .num("residual_bound", m.residual_bound)
        .num("tail_bound", m.tail_bound)
        .num("w_sup", m.w_sup)
        .num("w_bound", m.w_bound());
    Ok(Outcome {
        theorem: "martingale-coboundary decomposition with Azuma-Hoeffding bound",
        summary,
        plot: Some(Plot {
            title: "coboundary w".into(),
            x_label: "x".into(),
            y_label: "w(x)".into(),
            log_x: false,
            log_y: false,
            series: vec![Series {
                label: "w".into(),
                points: (0..512).map(|i| (i as f64 + 0.5) / 512.0).map(|x| (x, m.w(x))).collect(),
            }],
        }),
        records,
        check: Some((
            ok,
            format!(
                "telescoping {:.1e} <= 1e-10, |Pg| {:.3e} <= {:.3e}, |w| {:.3} <= {:.3}",
                m.telescoping_error,
                m.residual,
                m.residual_bound,
                m.w_sup,
                m.w_bound()
            ),
        )),
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn erdos(a: &ErdosArgs) -> Result<Outcome, CliError> {
    use rayon::prelude::*;
    let ch = channel(a.channel, &a.map)?;
    let obs = parse_obs(&a.obs)?;
    let rate = match a.rate {
        Some(r) => r,
        None if obs.kind == (ObservableKind::LogPow { alpha: 1.0, point: 0.0 }) && a.level > 1.0 => {
            exponential_rate(a.level)
        }
        None => return Err(CliError::Param("key 'rate': required unless obs is logpow:1:0 with level > 1".into())),
    };
    if a.seeds == 0 {
        return Err(CliError::Param("key 'seeds': must be positive".into()));
    }
    let stats = (0..a.seeds)
        .into_par_iter()
        .map(|s| erdos_renyi_windows(&ch, &obs, a.common.seed, s, a.n, rate))
        .collect::<ldlab_core::Result<Vec<_>>>()?;
    let med = median(stats.iter().map(|w| w.w).collect());
    let ok = (med - a.level).abs() <= a.tol * a.level;
    Ok(Outcome {
        theorem: "upper Erdos-Renyi law for maximal window averages",
        summary: Record::new()
            .num("level", a.level)
            .num("rate", rate)
            .int("n", a.n)
            .int("ell", stats[0].ell)
            .num("median_w", med),
        records: stats
            .iter()
            .enumerate()
            .map(|(i, w)| Record::new().int("seed_index", i as u64).int("n", w.n).int("ell", w.ell).num("w", w.w).int("argmax", w.argmax))
            .collect(),
        plot: None,
        check: Some((ok, format!("median W {med:.4} within {} of level {}", a.tol * a.level, a.level))),
    })
}

fn obstruct(a: &ObstructArgs) -> Result<Outcome, CliError> {
    use rayon::prelude::*;
    let map = parse_map(&a.map)?;
    let obs = parse_obs(&a.obs)?.centered()?;
    let p = obs.singular_point().ok_or_else(|| CliError::Param("key 'obs': must be unbounded".into()))?;
    let reports = (0..a.seeds)
        .into_par_iter()
        .map(|s| {
            let mut stream = OrbitStream::new(a.common.seed, s);
            obstruction_check(&mut stream, &map, &obs, a.gamma, a.alpha, a.rate, a.nmax)
        })
        .collect::<ldlab_core::Result<Vec<_>>>()?;
    let Some(first) = reports.first() else {
        return Err(CliError::Param("key 'seeds': must be positive".into()));
    };
    let verified = reports.iter().filter(|r| r.verified_count() > 0).count();
    let mean_hits = reports.iter().map(|r| r.exceedances.len()).sum::<usize>() as f64 / reports.len() as f64;
    let exact = expected_hits(p, a.gamma, first.n0 + 1, a.nmax);
    let rel = (mean_hits - exact).abs() / exact;
    let ok = verified as f64 >= 0.9 * reports.len() as f64;
    let mut records = Vec::new();
    for (s, r) in reports.iter().enumerate() {
        for e in &r.exceedances {
            records.push(
                Record::new()
                    .int("seed_index", s as u64)
                    .int("n", e.n)
                    .int("short_len", e.short_len)
                    .num("short_avg", e.short_avg)
                    .int("er_len", e.er_len)
                    .num("er_avg", e.er_avg)
                    .flag("verified", e.verified),
            );
        }
    }
    Ok(Outcome {
        theorem: "failure of exponential large deviations at a periodic point",
        summary: Record::new()
            .num("m_critical", first.m_critical)
            .num("m_level", first.m_level)
            .int("n0", first.n0)
            .int("seeds", a.seeds)
            .int("verified_seeds", verified as u64)
            .num("mean_hits_past_n0", mean_hits)
            .num("expected_hits_past_n0", exact)
            .num("relative_error", rel),
        records,
        plot: None,
        check: Some((ok, format!("{verified}/{} seeds with a verified exceedance", a.seeds))),
    })
}

fn pressure(a: &PressureArgs) -> Result<Outcome, CliError> {
    let map = parse_map(&a.map)?;
    let obs = Observable::log_pow(1.0, map.periodic_point);
    let rep = pressure_diagnostics(&map, &obs, a.t, &a.levels, &a.n, a.neval)?;
    let mut records: Vec<Record> = rep
        .rows
        .iter()
        .map(|r| {
            Record::new()
                .text("table", "slope")
                .num("M", r.m)
                .num("radius", r.radius)
                .num("slope", r.slope)
                .num("bound_at_n", r.bound_at_n)
        })
        .collect();
    records.extend(rep.integrability.iter().map(|r| {
        Record::new().text("table", "integrability").int("n", r.n).num("exponent", r.exponent).flag("infinite", r.infinite)
    }));
    let increasing = rep.rows.windows(2).all(|w| w[1].slope > w[0].slope);
    let mut probes_ok = true;
    if map.kind == ldlab_core::MapKind::Doubling {
        for r in rep.integrability.iter().filter(|r| r.n <= 10) {
            let v: Vec<f64> = [10, 20, 40]
                .iter()
                .map(|&j| partial_mgf_integral(a.t, r.n as u32, j))
                .collect::<ldlab_core::Result<_>>()?;
            let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
            probes_ok &= if r.infinite { d2 >= 1.9 * d1 } else { d2 < d1 };
            for (j, x) in [10, 20, 40].iter().zip(&v) {
                records.push(Record::new().text("table", "partial_integral").int("n", r.n).int("J", *j).num("value", *x));
            }
        }
    }
    Ok(Outcome {
        theorem: "divergence of the pressure lower bound t M - log lambda",
        summary: Record::new().num("t", a.t).num("lambda", rep.lambda).int("n_eval", rep.n_eval),
        records,
        plot: None,
        check: Some((
            increasing && probes_ok,
            format!("slopes increasing: {increasing}; partial integrals match integrability: {probes_ok}"),
        )),
    })
}

fn tower(a: &TowerArgs) -> Result<Outcome, CliError> {
    let m = TowerModel::build(a.k).map_err(bad("K"))?;
    let cob = m.verify_coboundary(a.trajectories as usize, a.length as usize, a.common.seed);
    let resid = m.stationarity_residual();
    let curve = m.log_mgf_curve(a.t, a.nmax).map_err(bad("nmax"))?;
    let (limsup, liminf) = curve.tail_proxies();
    let (max_early, _) = curve.range(0, 200.min(a.nmax));
    let (_, min_late) = curve.range(200, a.nmax);
    let ok = cob.violations == 0 && cob.trajectory_failures == 0 && resid <= 1e-12;
    Ok(Outcome {
        theorem: "coboundary on a Young tower without a large-deviation rate function",
        summary: Record::new()
            .int("K", a.k)
            .num("C", m.c())
            .num("Z", m.z())
            .num("tail_log10", m.tail_log10)
            .int("states", m.state_count() as u64)
            .int("violations", cob.violations as u64)
            .int("trajectory_failures", cob.trajectory_failures as u64)
            .num("stationarity_residual", resid)
            .num("t", a.t)
            .num("limsup_proxy", limsup)
            .num("liminf_proxy", liminf)
            .num("max_n_le_200", max_early)
            .num("min_n_gt_200", min_late),
        records: curve.points.iter().map(|&(n, v)| Record::new().int("n", n).num("log_mgf_rate", v)).collect(),
        plot: Some(Plot {
            title: format!("(1/n) ln E exp({} S_n), K = {}", a.t, a.k),
            x_label: "n".into(),
            y_label: "rate".into(),
            log_x: true,
            log_y: false,
            series: vec![Series {
                label: "log-MGF / n".into(),
                points: curve.points.iter().map(|&(n, v)| (n as f64, v)).collect(),
            }],
        }),
        check: Some((
            ok,
            format!("{} violations, {} trajectory failures, residual {resid:.1e}", cob.violations, cob.trajectory_failures),
        )),
    })
}

fn oracle(a: &OracleArgs) -> Result<Outcome, CliError> {
    let mut obs = parse_obs(&a.obs)?;
    if let Some(d) = a.depth {
        if !obs.is_bounded() || !matches!(obs.kind, ObservableKind::CylinderCoded { .. }) {
            obs = obs.to_cylinder(d).map_err(bad("depth"))?;
        }
    }
    let ObservableKind::CylinderCoded { ref values, .. } = obs.kind else {
        return Err(CliError::Param("key 'depth': needed for non-cylinder observables".into()));
    };
    let lo_v = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_v = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta = a.delta.unwrap_or(((hi_v - lo_v).max(1.0)) * 1e-3);
    let side = parse_side(&a.side)?;
    let mean = obs.mean()?;
    let nf = a.n as f64;
    let dist = cylinder_dp(&obs, a.n, delta)?;
    let (dp_lo, dp_hi) = match side {
        Side::Upper => dist.tail_ge(nf * (mean + a.eps)),
        Side::Lower => dist.tail_le(nf * (mean - a.eps)),
        Side::TwoSided => return Err(CliError::Param("key 'side': oracle supports upper or lower".into())),
    };
    let est = tail_mc_grid(
        &Channel::Orbit(MapSpec::doubling()),
        &obs,
        &[a.n as u64],
        a.eps,
        side,
        a.samples,
        a.common.seed,
    )?
    .remove(0);
    let se = est.standard_error_at(est.p_hat.max(dp_lo).max(1.0 / est.samples as f64));
    let ok = est.p_hat >= dp_lo - 4.0 * se && est.p_hat <= dp_hi + 4.0 * se;
    let summary = estimate_record(&est).num("delta", delta).num("dp_lo", dp_lo).num("dp_hi", dp_hi).num("se", se).flag("within", ok);
    Ok(Outcome {
        theorem: "exact cylinder dynamic programme versus Monte Carlo",
        records: vec![summary.clone()],
        summary,
        plot: None,
        check: Some((ok, format!("p_hat {:.5} vs DP [{dp_lo:.5}, {dp_hi:.5}] +- 4 SE ({se:.2e})", est.p_hat))),
    })
}
