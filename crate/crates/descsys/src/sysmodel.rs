//! Descriptor-system data model, validation, rank-based
//! controllability/observability tests, and the on-disk JSON format.

use std::fmt;
use std::path::Path;

use serde_json::{Map, Value, json};

use crate::error::{Error, Result};
use crate::linalg::{C64, Mat};
use crate::pencil;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeDomain {
    Discrete,
    Continuous,
}

impl fmt::Display for TimeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeDomain::Discrete => write!(f, "discrete"),
            TimeDomain::Continuous => write!(f, "continuous"),
        }
    }
}

/// The quintuple (E, A, B, C, D): E x' = A x + B u, y = C x + D u,
/// where x' is the shifted state (discrete) or the derivative
/// (continuous).
#[derive(Clone, Debug)]
pub struct DescriptorSystem {
    pub e: Mat,
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub time_domain: TimeDomain,
}

impl DescriptorSystem {
    pub fn new(e: Mat, a: Mat, b: Mat, c: Mat, d: Mat, time_domain: TimeDomain) -> Result<Self> {
        let sys = DescriptorSystem { e, a, b, c, d, time_domain };
        let report = sys.validate();
        if let Some(msg) = report.first_error() {
            return Err(Error::DimensionMismatch(msg));
        }
        Ok(sys)
    }

    pub fn discrete(e: Mat, a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        Self::new(e, a, b, c, d, TimeDomain::Discrete)
    }

    /// Convenience constructor for scalar (n = m = 1) systems.
    pub fn scalar(e: f64, a: f64, b: f64, c: f64, d: f64) -> Self {
        DescriptorSystem {
            e: Mat::from_diag_real(&[e]),
            a: Mat::from_diag_real(&[a]),
            b: Mat::from_diag_real(&[b]),
            c: Mat::from_diag_real(&[c]),
            d: Mat::from_diag_real(&[d]),
            time_domain: TimeDomain::Discrete,
        }
    }

    /// Standard state-space system (E = I).
    pub fn standard(a: Mat, b: Mat, c: Mat, d: Mat, time_domain: TimeDomain) -> Result<Self> {
        let n = a.nrows();
        Self::new(Mat::identity(n), a, b, c, d, time_domain)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.a.nrows();
        let m = self.d.ncols();
        let mut dim_errors = Vec::new();
        if self.a.shape() != (n, n) {
            dim_errors.push(format!("A must be square, got {:?}", self.a.shape()));
        }
        if self.e.shape() != (n, n) {
            dim_errors.push(format!("E must be {n}x{n}, got {:?}", self.e.shape()));
        }
        if self.b.shape() != (n, m) {
            dim_errors.push(format!("B must be {n}x{m}, got {:?}", self.b.shape()));
        }
        if self.c.shape() != (m, n) {
            dim_errors.push(format!("C must be {m}x{n}, got {:?}", self.c.shape()));
        }
        if self.d.shape() != (m, m) {
            dim_errors.push(format!("D must be square {m}x{m}, got {:?}", self.d.shape()));
        }
        let non_finite = !(self.e.is_finite()
            && self.a.is_finite()
            && self.b.is_finite()
            && self.c.is_finite()
            && self.d.is_finite());
        let e_is_zero = self.e.norm_max() == 0.0;
        ValidationReport { dim_errors, non_finite, e_is_zero }
    }

    /// Checks the standing assumption: regular pencil, E != 0, index <= 1.
    /// Returns the violations found (empty means the assumption holds).
    pub fn assumption_violations(&self, tol_rank: f64) -> Vec<String> {
        let mut out = Vec::new();
        let rep = self.validate();
        if !rep.is_ok() {
            out.push("system is structurally invalid".into());
            return out;
        }
        if rep.e_is_zero {
            out.push("E = 0".into());
        }
        match pencil::analyze(&self.e, &self.a, tol_rank) {
            Ok(an) => {
                if !an.regular {
                    out.push("pencil (E, A) is not regular".into());
                } else if an.index.unwrap_or(0) > 1 {
                    out.push(format!("pencil index is {} (> 1)", an.index.unwrap_or(0)));
                }
            }
            Err(e) => out.push(format!("pencil analysis failed: {e}")),
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub dim_errors: Vec<String>,
    pub non_finite: bool,
    pub e_is_zero: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.dim_errors.is_empty() && !self.non_finite
    }

    fn first_error(&self) -> Option<String> {
        if let Some(e) = self.dim_errors.first() {
            return Some(e.clone());
        }
        if self.non_finite {
            return Some("non-finite entries".into());
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankProperty {
    C1,
    C2,
    O1,
    O2,
}

impl fmt::Display for RankProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankProperty::C1 => write!(f, "C1"),
            RankProperty::C2 => write!(f, "C2"),
            RankProperty::O1 => write!(f, "O1"),
            RankProperty::O2 => write!(f, "O2"),
        }
    }
}

/// Result of one of the (C1)/(C2)/(O1)/(O2) rank tests, with the points
/// at which the rank was evaluated.
#[derive(Clone, Debug)]
pub struct RankTestReport {
    pub property: RankProperty,
    pub holds: bool,
    /// Set when some decisive singular value sits in the
    /// [tol_rank, 10 tol_rank] band; reported, never silently rounded.
    pub marginal: bool,
    pub witnesses: Vec<(C64, usize)>,
}

fn rank_with_margin(m: &Mat, tol_rank: f64) -> (usize, bool) {
    let sv = m.singular_values();
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return (0, false);
    }
    let rank = sv.iter().filter(|&&s| s > tol_rank * smax).count();
    let marginal = sv.iter().any(|&s| s > tol_rank * smax && s <= 10.0 * tol_rank * smax);
    (rank, marginal)
}

/// (C1): rk [lambda E - A, B] = n for all lambda. The rank is constant
/// off the finite spectrum, so testing each spectrum point plus one
/// resolvent point is exact.
pub fn check_c1(sys: &DescriptorSystem, tol_rank: f64) -> Result<RankTestReport> {
    check_lambda_rank(sys, RankProperty::C1, tol_rank)
}

/// (O1): rk [lambda E^H - A^H, C^H] = n for all lambda.
pub fn check_o1(sys: &DescriptorSystem, tol_rank: f64) -> Result<RankTestReport> {
    check_lambda_rank(sys, RankProperty::O1, tol_rank)
}

fn check_lambda_rank(
    sys: &DescriptorSystem,
    property: RankProperty,
    tol_rank: f64,
) -> Result<RankTestReport> {
    let n = sys.state_dim();
    let analysis = pencil::analyze(&sys.e, &sys.a, tol_rank)?;
    if !analysis.regular {
        return Err(Error::IrregularPencil);
    }
    let (e, a, other) = match property {
        RankProperty::C1 => (sys.e.clone(), sys.a.clone(), sys.b.clone()),
        RankProperty::O1 => (sys.e.adjoint(), sys.a.adjoint(), sys.c.adjoint()),
        _ => unreachable!(),
    };
    let mut points: Vec<C64> = analysis.finite_spectrum.clone();
    points.push(pencil::resolvent_point(&analysis.finite_spectrum));
    let mut holds = true;
    let mut marginal = false;
    let mut witnesses = Vec::new();
    for lam in points {
        let pencil_part = &e.scale_c(lam) - &a;
        let stacked = Mat::hstack(&[&pencil_part, &other]);
        let (rank, m) = rank_with_margin(&stacked, tol_rank);
        marginal |= m;
        if rank < n {
            holds = false;
        }
        witnesses.push((lam, rank));
    }
    Ok(RankTestReport { property, holds, marginal, witnesses })
}

/// (C2): rk [E, A S_inf(E), B] = n, with S_inf(E) a kernel basis of E.
pub fn check_c2(sys: &DescriptorSystem, tol_rank: f64) -> Result<RankTestReport> {
    check_infinity_rank(sys, RankProperty::C2, tol_rank)
}

/// (O2): rk [E^H, A^H T_inf(E), C^H] = n, with T_inf(E) a kernel basis
/// of E^H.
pub fn check_o2(sys: &DescriptorSystem, tol_rank: f64) -> Result<RankTestReport> {
    check_infinity_rank(sys, RankProperty::O2, tol_rank)
}

fn check_infinity_rank(
    sys: &DescriptorSystem,
    property: RankProperty,
    tol_rank: f64,
) -> Result<RankTestReport> {
    // the single rank test is well defined for singular pencils too,
    // so regularity is not enforced here
    let n = sys.state_dim();
    let (e, a, other) = match property {
        RankProperty::C2 => (sys.e.clone(), sys.a.clone(), sys.b.clone()),
        RankProperty::O2 => (sys.e.adjoint(), sys.a.adjoint(), sys.c.adjoint()),
        _ => unreachable!(),
    };
    let kernel = e.null_space(tol_rank)?;
    let a_kernel = &a * &kernel;
    let stacked = Mat::hstack(&[&e, &a_kernel, &other]);
    let (rank, marginal) = rank_with_margin(&stacked, tol_rank);
    Ok(RankTestReport {
        property,
        holds: rank == n,
        marginal,
        witnesses: vec![(C64::new(0.0, 0.0), rank)],
    })
}

// ---------------------------------------------------------------------
// On-disk format: UTF-8 JSON, keys "E","A","B","C","D" as row-major
// nested arrays of numbers or [re, im] pairs, optional "time_domain".

fn parse_entry(v: &Value, ctx: &str) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(C64::new(
            x.as_f64().ok_or_else(|| Error::Format(format!("{ctx}: bad number")))?,
            0.0,
        )),
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0].as_f64().ok_or_else(|| Error::Format(format!("{ctx}: bad re part")))?;
            let im = pair[1].as_f64().ok_or_else(|| Error::Format(format!("{ctx}: bad im part")))?;
            Ok(C64::new(re, im))
        }
        _ => Err(Error::Format(format!(
            "{ctx}: entries must be numbers or two-element [re, im] arrays"
        ))),
    }
}

fn parse_matrix(v: &Value, key: &str) -> Result<Mat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Format(format!("key {key:?} must be an array of rows")))?;
    let mut data: Vec<Vec<C64>> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| Error::Format(format!("{key}[{i}] must be an array")))?;
        let mut out = Vec::with_capacity(cells.len());
        for (j, cell) in cells.iter().enumerate() {
            out.push(parse_entry(cell, &format!("{key}[{i}][{j}]"))?);
        }
        data.push(out);
    }
    if data.is_empty() {
        return Ok(Mat::zeros(0, 0));
    }
    Mat::from_rows(&data)
}

fn entry_json(z: C64) -> Value {
    if z.im == 0.0 { json!(z.re) } else { json!([z.re, z.im]) }
}

fn matrix_json(m: &Mat) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| entry_json(m.get(i, j))).collect()))
        .collect();
    Value::Array(rows)
}

/// Parses a system from JSON text. Unknown top-level keys produce
/// warnings, not errors.
pub fn from_json_str(text: &str) -> Result<(DescriptorSystem, Vec<String>)> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Format("top level must be a JSON object".into()))?;
    let mut warnings = Vec::new();
    for key in obj.keys() {
        if !matches!(key.as_str(), "E" | "A" | "B" | "C" | "D" | "time_domain") {
            warnings.push(format!("ignoring unknown top-level key {key:?}"));
        }
    }
    let need = |k: &str| -> Result<&Value> {
        obj.get(k).ok_or_else(|| Error::Format(format!("missing required key {k:?}")))
    };
    let e = parse_matrix(need("E")?, "E")?;
    let a = parse_matrix(need("A")?, "A")?;
    let b = parse_matrix(need("B")?, "B")?;
    let c = parse_matrix(need("C")?, "C")?;
    let d = parse_matrix(need("D")?, "D")?;
    let time_domain = match obj.get("time_domain") {
        None => TimeDomain::Discrete,
        Some(Value::String(s)) if s == "discrete" => TimeDomain::Discrete,
        Some(Value::String(s)) if s == "continuous" => TimeDomain::Continuous,
        Some(other) => {
            return Err(Error::Format(format!(
                "time_domain must be \"discrete\" or \"continuous\", got {other}"
            )));
        }
    };
    let sys = DescriptorSystem::new(e, a, b, c, d, time_domain)?;
    Ok((sys, warnings))
}

pub fn to_json_value(sys: &DescriptorSystem) -> Value {
    let mut map = Map::new();
    map.insert("E".into(), matrix_json(&sys.e));
    map.insert("A".into(), matrix_json(&sys.a));
    map.insert("B".into(), matrix_json(&sys.b));
    map.insert("C".into(), matrix_json(&sys.c));
    map.insert("D".into(), matrix_json(&sys.d));
    map.insert("time_domain".into(), json!(sys.time_domain.to_string()));
    Value::Object(map)
}

pub fn to_json_string(sys: &DescriptorSystem) -> String {
    serde_json::to_string_pretty(&to_json_value(sys)).expect("system serialization")
}

pub fn read_file(path: &Path) -> Result<(DescriptorSystem, Vec<String>)> {
    let text = std::fs::read_to_string(path)?;
    from_json_str(&text)
}

pub fn write_file(path: &Path, sys: &DescriptorSystem) -> Result<()> {
    std::fs::write(path, to_json_string(sys))?;
    Ok(())
}

/// FNV-1a over the system dimensions and raw entry bits; stable across
/// formatting differences in the source file.
pub fn system_hash(sys: &DescriptorSystem) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(&(sys.state_dim() as u64).to_le_bytes());
    eat(&(sys.input_dim() as u64).to_le_bytes());
    eat(&[matches!(sys.time_domain, TimeDomain::Continuous) as u8]);
    for m in [&sys.e, &sys.a, &sys.b, &sys.c, &sys.d] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m.get(i, j);
                eat(&z.re.to_bits().to_le_bytes());
                eat(&z.im.to_bits().to_le_bytes());
            }
        }
    }
    format!("{h:016x}")
}
