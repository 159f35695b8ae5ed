//! The one record every command emits: a system label, the ground energy,
//! correlation measures, optional kick analysis, and solver diagnostics,
//! rendered as JSON, CSV, or plain text.

use kickci::{EntropyReport, KickReport, ScanRow};

use crate::jsonfmt::{fmt_float, Json};

pub const SCHEMA: &str = "kickci-report/1";

/// Column order is frozen; see docs/report_schema.md before touching it.
pub const CSV_COLUMNS: [&str; 38] = [
    "tag",
    "system",
    "dimension",
    "energy",
    "iterations",
    "residual",
    "s1",
    "s1_0",
    "s1_rel",
    "purity",
    "s_aa",
    "s0_aa",
    "s_aa_rel",
    "floor_aa",
    "s_ab",
    "s0_ab",
    "s_ab_rel",
    "floor_ab",
    "gap1",
    "gap2",
    "norm_aa",
    "norm_ab",
    "norm_total",
    "lambda",
    "mean_s",
    "kappa1",
    "kappa2",
    "kappa3",
    "sigma2_s",
    "s2_rdm",
    "s2_no",
    "zz_aa",
    "zz_ab",
    "p_exact",
    "p_order2",
    "p_exp",
    "slope",
    "points",
];

/// Text cells get RFC 4180 quoting when they would break the row; numeric
/// cells never need it.
fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub dimension: usize,
    pub iterations: usize,
    pub residual: f64,
}

/// Entropies both raw and relative to their closed-shell baselines. The
/// one-body baseline is ln Nα (equal occupations over Nα orbitals); the
/// pair baselines come with the report itself. The floors are the raw
/// slack of each pair entropy over 2 ln Nα, carried without a verdict
/// since the bound's additive constant depends on the state family.
#[derive(Debug, Clone)]
pub struct Entropies {
    pub rep: EntropyReport,
    pub s1_0: Option<f64>,
    na: usize,
}

impl Entropies {
    pub fn new(rep: EntropyReport, na: usize) -> Entropies {
        let s1_0 = if na >= 1 { Some((na as f64).ln()) } else { None };
        Entropies { rep, s1_0, na }
    }

    fn s1_rel(&self) -> Option<f64> {
        self.s1_0.map(|b| self.rep.s1 - b)
    }

    fn s_aa_rel(&self) -> Option<f64> {
        match (self.rep.s_aa, self.rep.s0_aa) {
            (Some(s), Some(b)) => Some(s - b),
            _ => None,
        }
    }

    fn s_ab_rel(&self) -> Option<f64> {
        match (self.rep.s_ab, self.rep.s0_ab) {
            (Some(s), Some(b)) => Some(s - b),
            _ => None,
        }
    }

    fn floor(&self, s: Option<f64>) -> Option<f64> {
        match (s, self.na) {
            (Some(s), na) if na >= 1 => Some(s - 2.0 * (na as f64).ln()),
            _ => None,
        }
    }

    fn floor_aa(&self) -> Option<f64> {
        self.floor(self.rep.s_aa)
    }

    fn floor_ab(&self) -> Option<f64> {
        self.floor(self.rep.s_ab)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Norms {
    pub aa: f64,
    pub ab: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct KickSection {
    pub lambda: f64,
    pub report: KickReport,
    pub rows: Vec<ScanRow>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub system: String,
    pub geometry: Option<String>,
    pub energy: Option<f64>,
    pub entropies: Option<Entropies>,
    pub norms: Option<Norms>,
    pub kick: Option<KickSection>,
    pub diagnostics: Diagnostics,
}

impl MeasureReport {
    pub fn to_json(&self) -> Json {
        let entropies = match &self.entropies {
            None => Json::Null,
            Some(e) => Json::obj([
                ("s1", Json::Num(e.rep.s1)),
                ("s1_0", Json::opt(e.s1_0)),
                ("s1_rel", Json::opt(e.s1_rel())),
                ("purity", Json::Num(e.rep.purity)),
                ("s_aa", Json::opt(e.rep.s_aa)),
                ("s0_aa", Json::opt(e.rep.s0_aa)),
                ("s_aa_rel", Json::opt(e.s_aa_rel())),
                ("floor_aa", Json::opt(e.floor_aa())),
                ("s_ab", Json::opt(e.rep.s_ab)),
                ("s0_ab", Json::opt(e.rep.s0_ab)),
                ("s_ab_rel", Json::opt(e.s_ab_rel())),
                ("floor_ab", Json::opt(e.floor_ab())),
                ("gap1", Json::opt(e.rep.gap1)),
                ("gap2", Json::opt(e.rep.gap2)),
            ]),
        };
        let norms = match &self.norms {
            None => Json::Null,
            Some(n) => Json::obj([
                ("aa", Json::Num(n.aa)),
                ("ab", Json::Num(n.ab)),
                ("total", Json::Num(n.total)),
            ]),
        };
        let kick = match &self.kick {
            None => Json::Null,
            Some(k) => {
                let rows: Vec<Json> = k
                    .rows
                    .iter()
                    .map(|r| {
                        Json::obj([
                            ("lambda", Json::Num(r.lambda)),
                            ("p_exact", Json::Num(r.p_exact)),
                            ("p_order2", Json::Num(r.p_order2)),
                            ("p_exp", Json::Num(r.p_exp)),
                            ("residual", Json::Num(r.residual)),
                        ])
                    })
                    .collect();
                Json::obj([
                    ("lambda", Json::Num(k.lambda)),
                    ("mean_s", Json::Num(k.report.mean_s)),
                    ("kappa1", Json::Num(k.report.s1m)),
                    ("kappa2", Json::Num(k.report.s2m)),
                    ("kappa3", Json::Num(k.report.s3m)),
                    ("sigma2_s", Json::Num(k.report.sigma2_s)),
                    ("s2_rdm", Json::Num(k.report.s2_rdm)),
                    ("s2_no", Json::Num(k.report.s2_no)),
                    ("zz_aa", Json::Num(k.report.zz_aa)),
                    ("zz_ab", Json::Num(k.report.zz_ab)),
                    ("p_exact", Json::Num(k.report.p_exact)),
                    ("p_order2", Json::Num(k.report.p_order2)),
                    ("p_exp", Json::Num(k.report.p_exp)),
                    ("scan", Json::Arr(rows)),
                    ("slope", Json::opt(k.slope)),
                ])
            }
        };
        Json::obj([
            ("schema", Json::Str(SCHEMA.to_string())),
            ("system", Json::Str(self.system.clone())),
            (
                "geometry",
                match &self.geometry {
                    Some(g) => Json::Str(g.clone()),
                    None => Json::Null,
                },
            ),
            ("energy", Json::opt(self.energy)),
            ("entropies", entropies),
            ("norms", norms),
            ("kick", kick),
            (
                "diagnostics",
                Json::obj([
                    ("dimension", Json::Int(self.diagnostics.dimension as i64)),
                    ("iterations", Json::Int(self.diagnostics.iterations as i64)),
                    ("residual", Json::Num(self.diagnostics.residual)),
                ]),
            ),
        ])
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        let e = self.entropies.as_ref();
        let rep = e.map(|e| &e.rep);
        let k = self.kick.as_ref();
        let kr = k.map(|k| &k.report);
        let cells: [String; 38] = [
            csv_cell(self.geometry.as_deref().unwrap_or_default()),
            csv_cell(&self.system),
            self.diagnostics.dimension.to_string(),
            f(self.energy),
            self.diagnostics.iterations.to_string(),
            fmt_float(self.diagnostics.residual),
            f(rep.map(|r| r.s1)),
            f(e.and_then(|e| e.s1_0)),
            f(e.and_then(|e| e.s1_rel())),
            f(rep.map(|r| r.purity)),
            f(rep.and_then(|r| r.s_aa)),
            f(rep.and_then(|r| r.s0_aa)),
            f(e.and_then(|e| e.s_aa_rel())),
            f(e.and_then(|e| e.floor_aa())),
            f(rep.and_then(|r| r.s_ab)),
            f(rep.and_then(|r| r.s0_ab)),
            f(e.and_then(|e| e.s_ab_rel())),
            f(e.and_then(|e| e.floor_ab())),
            f(rep.and_then(|r| r.gap1)),
            f(rep.and_then(|r| r.gap2)),
            f(self.norms.map(|n| n.aa)),
            f(self.norms.map(|n| n.ab)),
            f(self.norms.map(|n| n.total)),
            f(k.map(|k| k.lambda)),
            f(kr.map(|r| r.mean_s)),
            f(kr.map(|r| r.s1m)),
            f(kr.map(|r| r.s2m)),
            f(kr.map(|r| r.s3m)),
            f(kr.map(|r| r.sigma2_s)),
            f(kr.map(|r| r.s2_rdm)),
            f(kr.map(|r| r.s2_no)),
            f(kr.map(|r| r.zz_aa)),
            f(kr.map(|r| r.zz_ab)),
            f(kr.map(|r| r.p_exact)),
            f(kr.map(|r| r.p_order2)),
            f(kr.map(|r| r.p_exp)),
            f(k.and_then(|k| k.slope)),
            k.map(|k| k.rows.len().to_string()).unwrap_or_default(),
        ];
        cells.join(",")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k:<12} {v}\n"));
        if let Some(g) = &self.geometry {
            line("tag", g.clone());
        }
        line("system", self.system.clone());
        line("dimension", self.diagnostics.dimension.to_string());
        if let Some(e) = self.energy {
            line("energy", fmt_float(e));
        }
        line("iterations", self.diagnostics.iterations.to_string());
        line("residual", fmt_float(self.diagnostics.residual));
        if let Some(e) = &self.entropies {
            line("s1", fmt_float(e.rep.s1));
            if let Some(v) = e.s1_rel() {
                line("s1_rel", fmt_float(v));
            }
            line("purity", fmt_float(e.rep.purity));
            for (name, v) in [
                ("s_aa", e.rep.s_aa),
                ("s_aa_rel", e.s_aa_rel()),
                ("floor_aa", e.floor_aa()),
                ("s_ab", e.rep.s_ab),
                ("s_ab_rel", e.s_ab_rel()),
                ("floor_ab", e.floor_ab()),
                ("gap1", e.rep.gap1),
                ("gap2", e.rep.gap2),
            ] {
                if let Some(v) = v {
                    line(name, fmt_float(v));
                }
            }
        }
        if let Some(n) = &self.norms {
            line("norm_aa", fmt_float(n.aa));
            line("norm_ab", fmt_float(n.ab));
            line("norm_total", fmt_float(n.total));
        }
        if let Some(k) = &self.kick {
            line("lambda", fmt_float(k.lambda));
            line("mean_s", fmt_float(k.report.mean_s));
            line("kappa2", fmt_float(k.report.s2m));
            line("sigma2_s", fmt_float(k.report.sigma2_s));
            line("s2_rdm", fmt_float(k.report.s2_rdm));
            line("s2_no", fmt_float(k.report.s2_no));
            line("p_exact", fmt_float(k.report.p_exact));
            line("p_order2", fmt_float(k.report.p_order2));
            line("p_exp", fmt_float(k.report.p_exp));
            for r in &k.rows {
                line(
                    "scan",
                    format!(
                        "{} {} {}",
                        fmt_float(r.lambda),
                        fmt_float(r.p_exact),
                        fmt_float(r.residual)
                    ),
                );
            }
            if let Some(s) = k.slope {
                line("slope", fmt_float(s));
            }
        }
        out
    }
}
