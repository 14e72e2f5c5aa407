use std::collections::HashMap;

use anyhow::{anyhow, bail, Result};
use hsm_core::exponents::{parse_rational, ExtendedExponent};
use hsm_core::fields::{parse_field, Domain, GridConfig, PolarGrid};
use hsm_core::verifier::{verify_case, InequalityCase, Report};
use hsm_core::Error;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Param, SuiteConfig};

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub field: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub case: InequalityCase,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    pub pi_degree: Option<usize>,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Row {
    fn new(field: &str, case: InequalityCase, outcome: hsm_core::Result<Report>) -> Row {
        let mut row = Row {
            field: field.to_string(),
            param: None,
            value: None,
            case,
            lhs: None,
            rhs: None,
            ratio: None,
            pi_degree: None,
            verdict: String::new(),
            error: None,
        };
        match outcome {
            Ok(r) => {
                row.lhs = Some(r.lhs);
                row.rhs = Some(r.rhs);
                row.ratio = r.ratio;
                row.pi_degree = r.pi_u.degree_with_tol(hsm_core::polyproj::POLY_ZERO_TOL);
                row.verdict = r.verdict().to_string();
            }
            Err(e) => {
                row.verdict = error_kind(&e).to_string();
                row.error = Some(e.to_string());
            }
        }
        row
    }

    pub fn csv_record(&self) -> Vec<String> {
        let c = &self.case;
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        vec![
            self.field.clone(),
            c.n.to_string(),
            c.k.to_string(),
            c.j.to_string(),
            c.s.to_string(),
            c.p.to_string(),
            c.q.to_string(),
            c.scale.to_string(),
            num(self.lhs),
            num(self.rhs),
            num(self.ratio),
            self.pi_degree.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
            self.verdict.clone(),
        ]
    }

    pub fn is_divergent(&self) -> bool {
        self.verdict == "divergent_rhs"
    }

    pub fn is_failure(&self) -> bool {
        self.verdict == "error"
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DivergentRhs(_) => "divergent_rhs",
        Error::InadmissiblePq(_) => "inadmissible",
        Error::ExcludedS { .. } | Error::SZero | Error::DimensionOne(_) => "excluded",
        _ => "error",
    }
}

struct Grids(HashMap<(usize, Domain), PolarGrid>);

impl Grids {
    fn build(cases: &[InequalityCase], config: &GridConfig) -> Result<Grids> {
        let mut map = HashMap::new();
        for c in cases {
            if let std::collections::hash_map::Entry::Vacant(e) = map.entry((c.n, c.domain)) {
                e.insert(PolarGrid::new(c.n, *config, c.domain)?);
            }
        }
        Ok(Grids(map))
    }

    fn get(&self, case: &InequalityCase) -> &PolarGrid {
        &self.0[&(case.n, case.domain)]
    }
}

/// Every `(field, case)` pair, fields outer, in config order.
pub fn verify(cfg: &SuiteConfig, grid: &GridConfig) -> Result<Vec<Row>> {
    let grids = Grids::build(&cfg.cases, grid)?;
    let tasks: Vec<(usize, usize)> =
        (0..cfg.fields.len()).flat_map(|f| (0..cfg.cases.len()).map(move |c| (f, c))).collect();
    Ok(tasks
        .par_iter()
        .map(|&(f, c)| {
            let spec = &cfg.fields[f];
            let case = &cfg.cases[c];
            let outcome = parse_field(&spec.spec, case.n).and_then(|u| verify_case(&u, case, grids.get(case)));
            Row::new(&spec.name, case.clone(), outcome)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub enum ScanValue {
    S(Rational64),
    Q(ExtendedExponent),
    Lambda(f64),
}

impl ScanValue {
    fn label(&self) -> String {
        match self {
            ScanValue::S(s) => s.to_string(),
            ScanValue::Q(q) => q.to_string(),
            ScanValue::Lambda(l) => l.to_string(),
        }
    }
}

/// `"lo:hi:n"` (inclusive, exact rational steps) or a comma list.
pub fn parse_range(param: Param, text: &str) -> Result<Vec<ScanValue>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let lo = parse_rational(parts[0])?;
        let hi = parse_rational(parts[1])?;
        let n: i64 = parts[2].trim().parse().map_err(|_| anyhow!("bad point count in range `{text}`"))?;
        if n < 1 {
            bail!("range `{text}` needs at least one point");
        }
        let step = if n == 1 { Rational64::from_integer(0) } else { (hi - lo) / Rational64::from_integer(n - 1) };
        return (0..n).map(|i| from_rational(param, lo + step * Rational64::from_integer(i))).collect();
    }
    if parts.len() != 1 {
        bail!("range `{text}` is neither `lo:hi:n` nor a comma list");
    }
    text.split(',').map(|t| parse_value(param, t.trim())).collect()
}

fn from_rational(param: Param, r: Rational64) -> Result<ScanValue> {
    Ok(match param {
        Param::S => ScanValue::S(r),
        Param::Q => ScanValue::Q(ExtendedExponent::new(r)?),
        Param::Lambda => {
            let l = hsm_core::exponents::rational_to_f64(r);
            if l <= 0.0 {
                bail!("lambda must be positive, got {r}");
            }
            ScanValue::Lambda(l)
        }
    })
}

pub fn parse_value(param: Param, text: &str) -> Result<ScanValue> {
    match param {
        Param::Q => Ok(ScanValue::Q(text.parse()?)),
        _ => from_rational(param, parse_rational(text)?),
    }
}

/// Scan values from the config sweeps for `param`, in order.
pub fn sweep_values(cfg: &SuiteConfig, param: Param) -> Result<Vec<ScanValue>> {
    let mut out = Vec::new();
    for (i, sw) in cfg.sweeps.iter().enumerate().filter(|(_, sw)| sw.param == param) {
        if let Some(r) = &sw.range {
            out.extend(parse_range(param, r)?);
        }
        for v in &sw.values {
            let text = match v {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(n) => n.to_string(),
                toml::Value::Float(x) => x.to_string(),
                other => bail!("sweeps[{i}]: unsupported value {other}"),
            };
            out.push(parse_value(param, &text)?);
        }
    }
    Ok(out)
}

/// Each `(field, case)` pair across the scan values; invalid points become verdict rows.
pub fn scan(cfg: &SuiteConfig, grid: &GridConfig, param: Param, values: &[ScanValue]) -> Result<Vec<Row>> {
    let grids = Grids::build(&cfg.cases, grid)?;
    let mut tasks = Vec::new();
    for f in 0..cfg.fields.len() {
        for c in 0..cfg.cases.len() {
            for v in 0..values.len() {
                tasks.push((f, c, v));
            }
        }
    }
    Ok(tasks
        .par_iter()
        .map(|&(f, c, v)| {
            let spec = &cfg.fields[f];
            let mut case = cfg.cases[c].clone();
            let mut lambda = 1.0;
            match &values[v] {
                ScanValue::S(s) => case.s = *s,
                ScanValue::Q(q) => case.q = *q,
                ScanValue::Lambda(l) => lambda = *l,
            }
            let outcome = parse_field(&spec.spec, case.n).and_then(|u| {
                let u = if lambda == 1.0 { u } else { u.dilate(lambda) };
                verify_case(&u, &case, grids.get(&case))
            });
            let mut row = Row::new(&spec.name, case, outcome);
            row.param = Some(param.name());
            row.value = Some(values[v].label());
            row
        })
        .collect())
}
