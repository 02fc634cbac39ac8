//! Command implementations. Each returns a JSON report, an optional CSV
//! rendering, and the exit status the report warrants.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use halfspace_core::bloch::{
    bloch_series, closed_form_coeffs, BlochCoefficients, BlochError, SeriesOptions, DENOM_REL_TOL,
};
use halfspace_core::galerkin::{DEFAULT_RANK_TOL, DEFAULT_RHS_TOL};
use halfspace_core::isoenergetic::{sample_surface, sample_surface_with_potential, IsoError, TIE_TOL};
use halfspace_core::rootfn::second_plane::oracle_root_class;
use halfspace_core::rootfn::{
    analyze_root_function, invariant_subspace_operator, oned_double_criterion, OneDimPotential,
    RootFnError, CRITERION_TOL,
};
use halfspace_core::spectrum::{self, degeneracy_group, eigenvalue, DEFAULT_GROUP_TOL};
use halfspace_core::{HalfSpace, IndexVector, Sign, TruncatedOperator};
use serde_json::{json, Value};

use crate::config::ProblemConfig;
use crate::error::CliError;

pub struct Report {
    pub json: Value,
    pub csv: Option<String>,
    /// Set when the report is complete but the run must still exit nonzero.
    pub failure: Option<CliError>,
}

impl Report {
    fn ok(json: Value) -> Self {
        Report {
            json,
            csv: None,
            failure: None,
        }
    }
}

fn guard(e: impl std::fmt::Display) -> CliError {
    CliError::Guard(e.to_string())
}

fn halfspace_json(h: HalfSpace) -> Value {
    json!({ "k": h.axis + 1, "sign": h.sign.to_string() })
}

/// `key,value` rows for every scalar leaf, with dotted paths.
pub fn flatten_csv(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, out);
                }
            }
            Value::Array(items) => {
                for (i, x) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, out);
                }
            }
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let v = if v.contains(',') { format!("\"{v}\"") } else { v };
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

pub fn classify(cfg: &ProblemConfig) -> Result<Report, CliError> {
    let q = &cfg.potential;
    let json = match q.classification() {
        Some(h) => json!({
            "command": "classify",
            "in_s": true,
            "status": format!("in S: k={}, sign {}", h.axis + 1, h.sign),
            "classification": halfspace_json(h),
            "support_size": q.coeffs().len(),
        }),
        None => {
            let witness = q.conflicting_pair().map(|(a, b)| json!([a, b]));
            // per axis and sign, the first support index outside that half-lattice
            let violators: Vec<Value> = (0..q.dim())
                .map(|axis| {
                    let first_out = |sign| {
                        let h = HalfSpace::new(axis, sign);
                        q.coeffs().keys().find(|n| !h.contains(n)).cloned()
                    };
                    json!({ "k": axis + 1, "plus": first_out(Sign::Plus), "minus": first_out(Sign::Minus) })
                })
                .collect();
            json!({
                "command": "classify",
                "in_s": false,
                "status": "not in S",
                "witness": witness,
                "violators": violators,
            })
        }
    };
    Ok(Report::ok(json))
}

fn bloch_error(e: BlochError) -> CliError {
    guard(e)
}

fn records_csv(sets: &[&BlochCoefficients], dim: usize) -> String {
    let cols: Vec<String> = (1..=dim).map(|i| format!("delta{i}")).collect();
    let mut out = format!("method,{},re,im\n", cols.join(","));
    for s in sets {
        let method = serde_json::to_value(s.method).unwrap();
        let method = method.as_str().unwrap_or_default().to_string();
        for (delta, v) in &s.coeffs {
            let d: Vec<String> = delta.coords().iter().map(|x| x.to_string()).collect();
            out.push_str(&format!("{method},{},{:e},{:e}\n", d.join(","), v.re, v.im));
        }
    }
    out
}

pub fn bloch(cfg: &ProblemConfig) -> Result<Report, CliError> {
    let q = &cfg.potential;
    let gamma = cfg.index_param("gamma", Some(IndexVector::zero(q.dim())))?;
    let method: String = cfg.param_or("method", "both".to_string())?;
    let (want_series, want_closed) = match method.as_str() {
        "series" => (true, false),
        "closed-form" => (false, true),
        "both" => (true, true),
        other => {
            return Err(CliError::Parse {
                field: "params.method".into(),
                message: format!("unknown method {other:?}; expected series, closed-form or both"),
            })
        }
    };
    let order: usize = cfg.param_or("order", 64)?;
    let depth: usize = cfg.param_or("depth", 6)?;
    let tail_tol: Option<f64> = match cfg.params.get("tail_tol") {
        Some(Value::Null) => None,
        _ => Some(cfg.param_or("tail_tol", 1e-14)?),
    };
    if q.classification().is_none() {
        return Err(bloch_error(BlochError::Unclassified));
    }

    let series = if want_series {
        let opts = SeriesOptions {
            max_order: order,
            tail_tol,
        };
        Some(bloch_series(q, &gamma, &cfg.t, opts).map_err(bloch_error)?)
    } else {
        None
    };
    let closed = if want_closed {
        Some(closed_form_coeffs(q, &gamma, &cfg.t, depth).map_err(bloch_error)?)
    } else {
        None
    };
    let discrepancy = match (&series, &closed) {
        (Some(s), Some(c)) => Some(s.max_discrepancy(c, depth.min(order) as i64)),
        _ => None,
    };

    let json = json!({
        "command": "bloch",
        "gamma": gamma,
        "t": cfg.t,
        "lambda": eigenvalue(q.basis(), &gamma, &cfg.t),
        "series": series.as_ref().map(|s| json!({
            "record": s.to_record(),
            "converged": s.converged,
            "tail": s.tail,
        })),
        "closed_form": closed.as_ref().map(|c| c.to_record()),
        "max_discrepancy": discrepancy,
        "tolerances": {
            "denominator_rel_tol": DENOM_REL_TOL,
            "tail_tol": tail_tol,
            "max_order": order,
            "depth": depth,
        },
    });
    let sets: Vec<&BlochCoefficients> = series.iter().chain(closed.iter()).collect();
    let failure = series
        .as_ref()
        .filter(|s| !s.converged)
        .map(|s| CliError::NonConvergence(format!("series tail {:.3e} after {} terms", s.tail, s.order)));
    Ok(Report {
        csv: Some(records_csv(&sets, q.dim())),
        json,
        failure,
    })
}

/// Indices of the closed-form support whose every predecessor, and itself,
/// lies inside the operator's index set.
fn interior(
    closed: &BlochCoefficients,
    support: &[IndexVector],
    gamma: &IndexVector,
    op: &TruncatedOperator,
) -> Vec<IndexVector> {
    let h = closed.halfspace;
    let mut keys: Vec<&IndexVector> = closed.coeffs.keys().collect();
    keys.sort_by_key(|d| h.depth(d));
    let mut inside: BTreeSet<IndexVector> = BTreeSet::new();
    for d in keys {
        if op.position(&gamma.add(d)).is_none() {
            continue;
        }
        let preds_ok = d.is_zero()
            || support.iter().all(|g| {
                let p = d.sub(g);
                !closed.coeffs.contains_key(&p) || inside.contains(&p)
            });
        if preds_ok {
            inside.insert(d.clone());
        }
    }
    inside.into_iter().collect()
}

pub fn oracle(cfg: &ProblemConfig) -> Result<Report, CliError> {
    let q = &cfg.potential;
    let cutoff: f64 = cfg.param_or("cutoff", 6.0)?;
    let depth: usize = cfg.param_or("depth", 3)?;
    let gamma = cfg.index_param("gamma", Some(IndexVector::zero(q.dim())))?;
    let group_tol: f64 = cfg.param_or("group_tol", DEFAULT_GROUP_TOL)?;
    let rhs_tol: f64 = cfg.param_or("rhs_tol", DEFAULT_RHS_TOL)?;

    let op = TruncatedOperator::build(q, &cfg.t, cutoff).map_err(guard)?;
    let triangular = op.is_strictly_triangular();
    let mut diagonal = op.diagonal();
    let mut free: Vec<f64> = op
        .indices()
        .iter()
        .map(|g| eigenvalue(q.basis(), g, &cfg.t))
        .collect();
    diagonal.sort_by(f64::total_cmp);
    free.sort_by(f64::total_cmp);
    let spectrum_match = triangular && diagonal == free;

    let mut agreement: Option<f64> = None;
    let mut note: Option<String> = None;
    if triangular {
        match (closed_form_coeffs(q, &gamma, &cfg.t, depth), op.position(&gamma)) {
            (Err(e), _) => note = Some(format!("closed form unavailable: {e}")),
            (_, None) => note = Some(format!("{gamma} lies outside the cutoff ball")),
            (Ok(closed), Some(row)) => match op.eigenvector_backsolve(row, group_tol, rhs_tol) {
                Err(e) => note = Some(format!("backsolve failed: {e}")),
                Ok(solved) => {
                    let support: Vec<IndexVector> = q.coeffs().keys().cloned().collect();
                    let cone = interior(&closed, &support, &gamma, &op);
                    let worst = cone
                        .iter()
                        .map(|d| {
                            let x = solved.vector[op.position(&gamma.add(d)).unwrap()];
                            (x - closed.coefficient(d)).norm()
                        })
                        .fold(0.0, f64::max);
                    agreement = Some(worst);
                    note = Some(format!("compared on {} interior coefficients", cone.len()));
                }
            },
        }
    }

    let json = json!({
        "command": "oracle",
        "size": op.size(),
        "halfspace": halfspace_json(op.halfspace()),
        "classified": q.classification().is_some(),
        "triangular": triangular,
        "spectrum_match": spectrum_match,
        "eigenvector_agreement": agreement,
        "eigenvector_note": note,
        "gamma": gamma,
        "tolerances": {
            "cutoff": cutoff,
            "depth": depth,
            "group_tol": group_tol,
            "rhs_tol": rhs_tol,
            "denominator_rel_tol": DENOM_REL_TOL,
        },
    });
    let failure = (!triangular).then(|| guard("matrix is not strictly triangular: potential is not of half-space type"));
    Ok(Report {
        json,
        csv: Some(op.to_csv()),
        failure,
    })
}

fn rootfn_error(e: RootFnError) -> CliError {
    match e {
        RootFnError::NonPositiveIndex { .. } | RootFnError::NonFinite { .. } => CliError::Parse {
            field: "potential".into(),
            message: e.to_string(),
        },
        other => guard(other),
    }
}

fn multiplicity_1d(cfg: &ProblemConfig) -> Result<Value, CliError> {
    if cfg.basis.dim() != 1 {
        return Err(CliError::Parse {
            field: "dimension".into(),
            message: "the 1-D criterion needs dimension 1".into(),
        });
    }
    let g = cfg.basis.generator(0)[0];
    if (g - 2.0 * PI).abs() > 1e-12 * 2.0 * PI {
        return Err(CliError::Parse {
            field: "generators".into(),
            message: "the 1-D criterion needs the generator 2π (period-1 potentials)".into(),
        });
    }
    if cfg.t[0] != 0.0 {
        return Err(CliError::Parse {
            field: "t".into(),
            message: "the 1-D criterion concerns the periodic problem, t = 0".into(),
        });
    }
    let n: i64 = cfg.require("n")?;
    let group_tol: f64 = cfg.param_or("group_tol", DEFAULT_GROUP_TOL)?;
    let rank_tol: f64 = cfg.param_or("rank_tol", DEFAULT_RANK_TOL)?;
    let cutoff_index: i64 = cfg.param_or("cutoff_index", 3 * n + 2)?;

    let q1d = OneDimPotential::new(
        cfg.exact
            .iter()
            .map(|(k, v)| (k.coords()[0], v.clone())),
    )
    .map_err(rootfn_error)?;
    let crit = oned_double_criterion(n, &q1d).map_err(rootfn_error)?;
    let value = crit.to_complex();
    let zero = crit.is_zero() || value.norm() <= CRITERION_TOL;

    let op = TruncatedOperator::build(&cfg.potential, &[0.0], 2.0 * PI * cutoff_index as f64 + 1e-9)
        .map_err(guard)?;
    let lambda = eigenvalue(&cfg.basis, &IndexVector::from([n]), &[0.0]);
    let report = op.geometric_multiplicity(lambda, group_tol, rank_tol).map_err(guard)?;
    let predicted = if zero { 2 } else { 1 };
    Ok(json!({
        "command": "multiplicity",
        "mode": "1d-criterion",
        "n": n,
        "lambda": lambda,
        "criterion": { "exact": crit.to_string(), "re": value.re, "im": value.im, "is_zero": zero },
        "predicted_multiplicity": predicted,
        "oracle": { "multiplicity": report.nullity, "borderline": report.borderline, "cutoff_index": cutoff_index },
        "verdict": if report.nullity == predicted && !report.borderline { "consistent" } else { "inconsistent" },
        "tolerances": { "criterion_tol": CRITERION_TOL, "group_tol": group_tol, "rank_tol": rank_tol },
    }))
}

fn multiplicity_2d(cfg: &ProblemConfig) -> Result<Value, CliError> {
    let q = &cfg.potential;
    let gamma = cfg.index_param("gamma", None)?;
    let plane: usize = cfg.param_or("plane", 2)?;
    let member: usize = cfg.param_or("member", 0)?;
    let group_tol: f64 = cfg.param_or("group_tol", DEFAULT_GROUP_TOL)?;
    let rank_tol: f64 = cfg.param_or("rank_tol", DEFAULT_RANK_TOL)?;
    let halfspace = q
        .classification()
        .ok_or_else(|| guard("potential is not supported in a half-lattice"))?;
    let group_cutoff: f64 = cfg.param_or(
        "group_cutoff",
        spectrum::required_cutoff(&cfg.basis, &gamma, &cfg.t),
    )?;
    let group = degeneracy_group(&cfg.basis, &gamma, &cfg.t, halfspace, group_cutoff, group_tol)
        .map_err(guard)?;
    let report = analyze_root_function(q, &group, plane, member).map_err(rootfn_error)?;

    let mut oracle = Value::Null;
    let mut verdict = "not-checked";
    if plane == 2 {
        let reach = q
            .coeffs()
            .keys()
            .map(|g| cfg.basis.to_cartesian(g).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let span = (halfspace.depth(&group.leading()[0]) - halfspace.depth(&report.leading) + 1) as f64;
        let default_cutoff = group.lambda.sqrt() + cfg.t.iter().map(|x| x * x).sum::<f64>().sqrt() + span * reach + 1.0;
        let oracle_cutoff: f64 = cfg.param_or("oracle_cutoff", default_cutoff)?;
        let op = invariant_subspace_operator(q, &group, member, oracle_cutoff).map_err(rootfn_error)?;
        let probe = op.jordan_probe(group.lambda, group_tol, rank_tol).map_err(guard)?;
        let class = oracle_root_class(&probe, group.s);
        verdict = if class == Some(report.classification) && !probe.borderline() {
            "consistent"
        } else {
            "inconsistent"
        };
        oracle = json!({
            "nullity": probe.first.nullity,
            "nullity_squared": probe.second.nullity,
            "borderline": probe.borderline(),
            "classification": class,
            "cutoff": oracle_cutoff,
            "size": op.size(),
        });
    }
    Ok(json!({
        "command": "multiplicity",
        "mode": "2d-second-plane",
        "report": report,
        "oracle": oracle,
        "verdict": verdict,
        "tolerances": { "criterion_tol": CRITERION_TOL, "group_tol": group_tol, "rank_tol": rank_tol, "group_cutoff": group_cutoff },
    }))
}

fn multiplicity_oracle(cfg: &ProblemConfig) -> Result<Value, CliError> {
    let q = &cfg.potential;
    let gamma = cfg.index_param("gamma", None)?;
    let cutoff: f64 = cfg.param_or("cutoff", 6.0)?;
    let group_tol: f64 = cfg.param_or("group_tol", DEFAULT_GROUP_TOL)?;
    let rank_tol: f64 = cfg.param_or("rank_tol", DEFAULT_RANK_TOL)?;
    let op = TruncatedOperator::build(q, &cfg.t, cutoff).map_err(guard)?;
    let lambda = eigenvalue(&cfg.basis, &gamma, &cfg.t);
    let probe = op.jordan_probe(lambda, group_tol, rank_tol).map_err(guard)?;
    Ok(json!({
        "command": "multiplicity",
        "mode": "oracle",
        "gamma": gamma,
        "lambda": lambda,
        "algebraic_occurrences": op.rows_at(lambda, group_tol).len(),
        "geometric_multiplicity": probe.first.nullity,
        "nullity_squared": probe.second.nullity,
        "jordan_chain": probe.has_jordan_chain(),
        "borderline": probe.borderline(),
        "tolerances": { "cutoff": cutoff, "group_tol": group_tol, "rank_tol": rank_tol },
    }))
}

pub fn multiplicity(cfg: &ProblemConfig) -> Result<Report, CliError> {
    let default_mode = if cfg.basis.dim() == 1 { "1d-criterion" } else { "2d-second-plane" };
    let mode: String = cfg.param_or("mode", default_mode.to_string())?;
    let json = match mode.as_str() {
        "1d-criterion" => multiplicity_1d(cfg)?,
        "2d-second-plane" => multiplicity_2d(cfg)?,
        "oracle" => multiplicity_oracle(cfg)?,
        other => {
            return Err(CliError::Parse {
                field: "params.mode".into(),
                message: format!(
                    "unknown mode {other:?}; expected 1d-criterion, 2d-second-plane or oracle"
                ),
            })
        }
    };
    let csv = flatten_csv(&json);
    Ok(Report {
        json,
        csv: Some(csv),
        failure: None,
    })
}

pub fn fermi(cfg: &ProblemConfig) -> Result<Report, CliError> {
    let rho: f64 = cfg.require("rho")?;
    let resolution: usize = cfg.param_or("resolution", 21)?;
    let threshold: f64 = cfg.param_or("threshold", 0.01)?;
    let use_potential: bool = cfg.param_or("use_potential", false)?;
    let iso = |e: IsoError| match e {
        IsoError::BadRho { .. } => CliError::Parse {
            field: "params.rho".into(),
            message: e.to_string(),
        },
        IsoError::BadResolution { .. } => CliError::Parse {
            field: "params.resolution".into(),
            message: e.to_string(),
        },
        other => guard(other),
    };
    let sample = if use_potential {
        sample_surface_with_potential(&cfg.potential, rho, resolution, threshold).map_err(iso)?
    } else {
        sample_surface(&cfg.basis, rho, resolution, threshold).map_err(iso)?
    };
    let json = json!({
        "command": "fermi",
        "use_potential": use_potential,
        "sample": sample,
        "tolerances": { "threshold": threshold, "tie_tol": TIE_TOL },
    });
    Ok(Report {
        json,
        csv: Some(sample.to_csv()),
        failure: None,
    })
}
