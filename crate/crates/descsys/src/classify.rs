//! Full per-system classification: structural facts, passivity and KYP
//! verdicts, realness grid checks, the pH property, and the implication
//! audit mirroring the relation charts between these properties.

use serde_json::{Map, Value, json};

use crate::Tolerances;
use crate::kyp::{self, LmiKind, LmiStatus, PassivityKind, SolveMode};
use crate::pencil;
use crate::ph;
use crate::sysmodel::{self, DescriptorSystem};
use crate::transfer::{self, RealnessKind};
use crate::{Error, Result};

/// Three-valued verdict with a note for unsupported/marginal cases.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Holds,
    Fails,
    Marginal(String),
    Unsupported(String),
}

impl Verdict {
    pub fn holds(&self) -> Option<bool> {
        match self {
            Verdict::Holds => Some(true),
            Verdict::Fails => Some(false),
            _ => None,
        }
    }

    fn from_bool(b: bool) -> Verdict {
        if b { Verdict::Holds } else { Verdict::Fails }
    }

    fn text(&self) -> String {
        match self {
            Verdict::Holds => "true".into(),
            Verdict::Fails => "false".into(),
            Verdict::Marginal(n) => format!("marginal: {n}"),
            Verdict::Unsupported(n) => format!("unsupported: {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeStatus {
    Ok,
    Violated,
    NotApplicable,
    /// A documented non-implication whose counterexample pattern this
    /// system reproduces.
    WitnessedNonImplication,
    /// A conditional edge whose premise is only grid evidence fired
    /// against its conclusion; the grid may have missed a realness
    /// violation, so this is not a verdict contradiction.
    GridInconclusive,
}

#[derive(Clone, Debug)]
pub struct ImplicationEdge {
    pub premise: &'static str,
    pub conclusion: &'static str,
    /// Unconditional edges are "blue"; side conditions make them
    /// "black"; "red" marks known non-implications.
    pub color: &'static str,
    pub side_condition: Option<&'static str>,
    pub status: EdgeStatus,
}

/// Numeric summary of one LMI certificate for the report schema.
#[derive(Clone, Debug)]
pub struct CertificateSummary {
    pub status: LmiStatus,
    pub t_star: f64,
    pub min_eig_w: f64,
    pub min_eig_x: f64,
    pub relative_min_eig_x: f64,
    pub trace_bound: f64,
    pub trace_bound_active: bool,
    pub note: Option<String>,
    /// Whether the LMI acted on the reduced standard system or the
    /// original quintuple.
    pub on_reduced: bool,
}

impl CertificateSummary {
    fn from_cert(c: &kyp::LmiCertificate, on_reduced: bool) -> CertificateSummary {
        CertificateSummary {
            status: c.status,
            t_star: c.t_star,
            min_eig_w: c.min_eig_w,
            min_eig_x: c.min_eig_x,
            relative_min_eig_x: c.relative_min_eig_x,
            trace_bound: c.trace_bound,
            trace_bound_active: c.trace_bound_active,
            note: c.infeasibility_note.clone(),
            on_reduced,
        }
    }

    fn json(&self) -> Value {
        json!({
            "status": match self.status {
                LmiStatus::Feasible => "feasible",
                LmiStatus::Infeasible => "infeasible",
                LmiStatus::Marginal => "marginal",
            },
            "t_star": finite_or_null(self.t_star),
            "min_eig_w": finite_or_null(self.min_eig_w),
            "min_eig_x": finite_or_null(self.min_eig_x),
            "relative_min_eig_x": finite_or_null(self.relative_min_eig_x),
            "trace_bound": self.trace_bound,
            "trace_bound_active": self.trace_bound_active,
            "note": self.note,
            "on_reduced_system": self.on_reduced,
        })
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() { json!(x) } else { Value::Null }
}

#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub regular: bool,
    pub index: Option<usize>,
    pub completely_causal: bool,
    pub c1: Verdict,
    pub c2: Verdict,
    pub o1: Verdict,
    pub o2: Verdict,
    pub stable: Verdict,
    pub asymptotically_stable: Verdict,
    pub d_ikyp: Verdict,
    pub d_skyp: Verdict,
    pub d_ipa: Verdict,
    pub d_spa: Verdict,
    pub d_pr_grid: Verdict,
    pub d_br_grid: Verdict,
    pub d_sph: Verdict,
    /// d-sKYP feasible but only with X = 0 (the forced-zero pattern).
    pub skyp_forced_zero: Option<bool>,
    pub gen_lyapunov: Verdict,
    pub assumption_violations: Vec<String>,
    pub implication_audit: Vec<ImplicationEdge>,
    pub notes: Vec<String>,
    /// The KYP rows refer to the reduced standard system when the index
    /// is at most one, and to the original quintuple otherwise.
    pub kyp_on_reduced: bool,
    pub certificates: Vec<(String, CertificateSummary)>,
}

fn rank_verdict(r: Result<sysmodel::RankTestReport>) -> Verdict {
    match r {
        Ok(rep) if rep.marginal => Verdict::Marginal(format!(
            "{} rank decision sits in the tolerance band",
            rep.property
        )),
        Ok(rep) => Verdict::from_bool(rep.holds),
        Err(e) => Verdict::Unsupported(e.to_string()),
    }
}

fn lmi_verdict(status: LmiStatus, note: Option<&String>) -> Verdict {
    match status {
        LmiStatus::Feasible => Verdict::Holds,
        LmiStatus::Infeasible => Verdict::Fails,
        LmiStatus::Marginal => {
            Verdict::Marginal(note.cloned().unwrap_or_else(|| "near the feasibility boundary".into()))
        }
    }
}

/// Runs the full battery on a discrete-time system.
pub fn classify(sys: &DescriptorSystem, tol: &Tolerances, jobs: usize) -> Result<ClassificationReport> {
    let analysis = pencil::analyze(&sys.e, &sys.a, tol.tol_rank)?;
    if !analysis.regular {
        return Err(Error::IrregularPencil);
    }
    let index = analysis.index;
    let causal = analysis.completely_causal;
    let mut notes = Vec::new();
    let assumption_violations = sys.assumption_violations(tol.tol_rank);

    let c1 = rank_verdict(sysmodel::check_c1(sys, tol.tol_rank));
    let c2 = rank_verdict(sysmodel::check_c2(sys, tol.tol_rank));
    let o1 = rank_verdict(sysmodel::check_o1(sys, tol.tol_rank));
    let o2 = rank_verdict(sysmodel::check_o2(sys, tol.tol_rank));

    let stab = ph::classify_stability(&sys.e, &sys.a, tol)?;
    let stable = Verdict::from_bool(stab.stable);
    let asymptotically_stable = Verdict::from_bool(stab.asymptotically_stable);

    let gen_lyap = kyp::gen_lyapunov_classify(&sys.e, &sys.a, tol)?;
    let gen_lyapunov = lmi_verdict(gen_lyap.status, None);
    if !gen_lyap.agree {
        notes.push(
            "generalized Lyapunov verdict disagrees with the spectral classification".into(),
        );
    }

    // KYP rows: on the reduced standard system when causal, otherwise
    // on the original quintuple (the only reading that stays defined)
    let kyp_on_reduced = causal;
    let mut certificates: Vec<(String, CertificateSummary)> = Vec::new();
    let (d_ikyp, d_skyp, skyp_forced_zero, d_ipa, d_spa, d_sph);
    if causal {
        let imp = kyp::check_passivity(sys, PassivityKind::Impedance, tol)?;
        let sca = kyp::check_passivity(sys, PassivityKind::Scattering, tol)?;
        certificates.push(("d-iKYP".into(), CertificateSummary::from_cert(&imp.certificate, true)));
        certificates.push(("d-sKYP".into(), CertificateSummary::from_cert(&sca.certificate, true)));
        d_ikyp = lmi_verdict(imp.certificate.status, imp.certificate.infeasibility_note.as_ref());
        d_skyp = lmi_verdict(sca.certificate.status, sca.certificate.infeasibility_note.as_ref());
        // passivity is equivalent to reduced-KYP feasibility
        d_ipa = d_ikyp.clone();
        d_spa = d_skyp.clone();
        let phv = ph::is_ph(sys, tol)?;
        certificates.push(("d-spH".into(), CertificateSummary::from_cert(&phv.certificate, true)));
        d_sph = match phv.certificate.status {
            LmiStatus::Feasible => Verdict::Holds,
            LmiStatus::Marginal => Verdict::Marginal(
                phv.certificate
                    .infeasibility_note
                    .clone()
                    .unwrap_or_else(|| "definiteness below tol_strict".into()),
            ),
            LmiStatus::Infeasible => Verdict::Fails,
        };
        skyp_forced_zero = if d_skyp == Verdict::Holds && d_sph != Verdict::Holds {
            let rss = pencil::reduce_system(sys, tol.tol_rank, tol.cond_max)?;
            let std_sys = DescriptorSystem::standard(
                rss.a, rss.b, rss.c, rss.d,
                crate::sysmodel::TimeDomain::Discrete,
            )?;
            let p = kyp::build_lmi(&std_sys, LmiKind::DiscreteScattering)?;
            Some(kyp::forced_zero(&p, tol)?)
        } else {
            Some(false)
        };
    } else {
        let note = format!(
            "index {} > 1: passivity and pH verdicts are undefined; KYP rows use the original quintuple",
            index.unwrap_or(0)
        );
        notes.push(note.clone());
        let pi = kyp::build_lmi(sys, LmiKind::DiscreteImpedance)?;
        let ps = kyp::build_lmi(sys, LmiKind::DiscreteScattering)?;
        let ci = kyp::solve_feasibility(&pi, SolveMode::Semidefinite, tol)?;
        let cs = kyp::solve_feasibility(&ps, SolveMode::Semidefinite, tol)?;
        certificates.push(("d-iKYP".into(), CertificateSummary::from_cert(&ci, false)));
        certificates.push(("d-sKYP".into(), CertificateSummary::from_cert(&cs, false)));
        d_ikyp = lmi_verdict(ci.status, ci.infeasibility_note.as_ref());
        d_skyp = lmi_verdict(cs.status, cs.infeasibility_note.as_ref());
        d_ipa = Verdict::Unsupported(note.clone());
        d_spa = Verdict::Unsupported(note.clone());
        d_sph = Verdict::Unsupported(note);
        skyp_forced_zero = None;
    }

    let grid = transfer::default_grid();
    let d_pr_grid = match transfer::check_realness(sys, RealnessKind::Positive, &grid, tol, jobs) {
        Ok(rep) => Verdict::from_bool(rep.holds_on_grid),
        Err(e) => Verdict::Unsupported(e.to_string()),
    };
    let d_br_grid = match transfer::check_realness(sys, RealnessKind::Bounded, &grid, tol, jobs) {
        Ok(rep) => Verdict::from_bool(rep.holds_on_grid),
        Err(e) => Verdict::Unsupported(e.to_string()),
    };

    certificates.push((
        "gen-lyapunov".into(),
        CertificateSummary {
            status: gen_lyap.status,
            t_star: f64::NAN,
            min_eig_w: f64::NAN,
            min_eig_x: f64::NAN,
            relative_min_eig_x: f64::NAN,
            trace_bound: tol.rho,
            trace_bound_active: false,
            note: None,
            on_reduced: false,
        },
    ));
    let mut report = ClassificationReport {
        regular: true,
        index,
        completely_causal: causal,
        c1,
        c2,
        o1,
        o2,
        stable,
        asymptotically_stable,
        d_ikyp,
        d_skyp,
        d_ipa,
        d_spa,
        d_pr_grid,
        d_br_grid,
        d_sph,
        skyp_forced_zero,
        gen_lyapunov,
        assumption_violations,
        implication_audit: Vec::new(),
        notes,
        kyp_on_reduced,
        certificates,
    };
    report.implication_audit = audit_implications(&report);
    Ok(report)
}

fn edge(
    premise: &'static str,
    conclusion: &'static str,
    color: &'static str,
    side: Option<&'static str>,
    p: Option<bool>,
    side_holds: Option<bool>,
    q: Option<bool>,
) -> ImplicationEdge {
    let grid_premise = premise.contains("(grid)");
    let status = match (p, q) {
        _ if side.is_some() && side_holds != Some(true) => EdgeStatus::NotApplicable,
        (Some(true), Some(false)) if grid_premise => EdgeStatus::GridInconclusive,
        (Some(true), Some(false)) => EdgeStatus::Violated,
        (Some(true), Some(true)) | (Some(false), _) => EdgeStatus::Ok,
        _ => EdgeStatus::NotApplicable,
    };
    ImplicationEdge { premise, conclusion, color, side_condition: side, status }
}

/// Checks every chart edge against the computed verdicts. Blue edges
/// are unconditional theorems and must never be violated; black edges
/// carry side conditions; red edges are non-implications whose
/// counterexample pattern is recorded when it appears.
pub fn audit_implications(r: &ClassificationReport) -> Vec<ImplicationEdge> {
    let sph = r.d_sph.holds();
    let skyp = r.d_skyp.holds();
    let spa = r.d_spa.holds();
    let br = r.d_br_grid.holds();
    let ikyp = r.d_ikyp.holds();
    let ipa = r.d_ipa.holds();
    let pr = r.d_pr_grid.holds();
    let c1 = r.c1.holds();
    let o1 = r.o1.holds();
    let mut edges = vec![
        // scattering chart
        edge("d-spH", "d-sKYP", "blue", None, sph, None, skyp),
        edge("d-sKYP", "d-sPa", "blue", None, skyp, None, spa),
        edge("d-sPa", "d-sKYP", "blue", None, spa, None, skyp),
        edge("d-sPa", "d-BR(grid)", "blue", None, spa, None, br),
        edge("d-sKYP", "d-spH", "black", Some("O1"), skyp, o1, sph),
        edge("d-BR(grid)", "d-sKYP", "black", Some("C1"), br, c1, skyp),
        edge("d-BR(grid)", "d-spH", "black", Some("C1 and O1"), br, both(c1, o1), sph),
        // impedance chart
        edge("d-iKYP", "d-iPa", "blue", None, ikyp, None, ipa),
        edge("d-iPa", "d-iKYP", "blue", None, ipa, None, ikyp),
        edge("d-iPa", "d-PR(grid)", "blue", None, ipa, None, pr),
        edge("d-PR(grid)", "d-iKYP", "black", Some("C1"), pr, c1, ikyp),
    ];
    // red non-implications: witnessed when premise holds, side fails,
    // conclusion fails
    let red = |premise: &'static str,
               conclusion: &'static str,
               p: Option<bool>,
               q: Option<bool>| ImplicationEdge {
        premise,
        conclusion,
        color: "red",
        side_condition: None,
        status: if p == Some(true) && q == Some(false) {
            EdgeStatus::WitnessedNonImplication
        } else {
            EdgeStatus::NotApplicable
        },
    };
    edges.push(red("d-sKYP", "d-spH", skyp, sph));
    edges.push(red("d-BR(grid)", "d-sPa", br, spa));
    edges.push(red("d-PR(grid)", "d-iKYP", pr, ikyp));
    edges
}

fn both(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x && y),
        _ => None,
    }
}

/// True when no blue (unconditional) edge is violated, and no
/// applicable black edge either.
pub fn audit_clean(edges: &[ImplicationEdge]) -> bool {
    edges.iter().all(|e| e.status != EdgeStatus::Violated)
}

pub fn report_json(sys: &DescriptorSystem, report: &ClassificationReport) -> Value {
    let mut verdicts = Map::new();
    verdicts.insert("regular".into(), json!(report.regular));
    verdicts.insert(
        "index".into(),
        report.index.map_or(json!("undefined (irregular)"), |i| json!(i)),
    );
    verdicts.insert("completely_causal".into(), json!(report.completely_causal));
    let rows: Vec<(&str, &Verdict)> = vec![
        ("C1", &report.c1),
        ("C2", &report.c2),
        ("O1", &report.o1),
        ("O2", &report.o2),
        ("stable", &report.stable),
        ("asymptotically_stable", &report.asymptotically_stable),
        ("d-iKYP", &report.d_ikyp),
        ("d-sKYP", &report.d_skyp),
        ("d-iPa", &report.d_ipa),
        ("d-sPa", &report.d_spa),
        ("d-PR(grid)", &report.d_pr_grid),
        ("d-BR(grid)", &report.d_br_grid),
        ("d-spH", &report.d_sph),
        ("gen-lyapunov", &report.gen_lyapunov),
    ];
    for (k, v) in rows {
        verdicts.insert(k.into(), json!(v.text()));
    }
    if let Some(fz) = report.skyp_forced_zero {
        verdicts.insert("d-sKYP_forced_zero".into(), json!(fz));
    }
    let audit: Vec<Value> = report
        .implication_audit
        .iter()
        .map(|e| {
            json!({
                "premise": e.premise,
                "conclusion": e.conclusion,
                "color": e.color,
                "side_condition": e.side_condition,
                "status": match e.status {
                    EdgeStatus::Ok => "ok",
                    EdgeStatus::Violated => "violated",
                    EdgeStatus::NotApplicable => "not-applicable",
                    EdgeStatus::WitnessedNonImplication => "witnessed-non-implication",
                    EdgeStatus::GridInconclusive => "grid-inconclusive",
                },
            })
        })
        .collect();
    let mut certificates = Map::new();
    for (name, cert) in &report.certificates {
        certificates.insert(name.clone(), cert.json());
    }
    json!({
        "schema": 1,
        "system_hash": sysmodel::system_hash(sys),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "verdicts": Value::Object(verdicts),
        "certificates": Value::Object(certificates),
        "assumption_violations": report.assumption_violations,
        "notes": report.notes,
        "implication_audit": audit,
    })
}

/// Plain-text table for the terminal.
pub fn report_table(report: &ClassificationReport) -> String {
    let mut out = String::new();
    let mut row = |k: &str, v: String| {
        out.push_str(&format!("{k:<24} {v}\n"));
    };
    row("regular", report.regular.to_string());
    row(
        "index",
        report.index.map_or("undefined (irregular)".into(), |i| i.to_string()),
    );
    row("completely_causal", report.completely_causal.to_string());
    row("C1", report.c1.text());
    row("C2", report.c2.text());
    row("O1", report.o1.text());
    row("O2", report.o2.text());
    row("stable", report.stable.text());
    row("asymptotically_stable", report.asymptotically_stable.text());
    row("d-iKYP", report.d_ikyp.text());
    row("d-sKYP", report.d_skyp.text());
    row("d-iPa", report.d_ipa.text());
    row("d-sPa", report.d_spa.text());
    row("d-PR(grid)", report.d_pr_grid.text());
    row("d-BR(grid)", report.d_br_grid.text());
    row("d-spH", report.d_sph.text());
    if let Some(fz) = report.skyp_forced_zero {
        row("d-sKYP forced X=0", fz.to_string());
    }
    row("gen-lyapunov", report.gen_lyapunov.text());
    if !report.assumption_violations.is_empty() {
        row("assumption", report.assumption_violations.join("; "));
    }
    for e in &report.implication_audit {
        if e.status == EdgeStatus::Violated {
            out.push_str(&format!(
                "VIOLATED EDGE: {} => {} ({})\n",
                e.premise, e.conclusion, e.color
            ));
        }
    }
    out
}
