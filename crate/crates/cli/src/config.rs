//! Run configuration: flat `section.key = value` lines, `#` comments, list
//! entries as repeated keys.
//!
//! ```text
//! domain.kind = plane
//! domain.R = 12
//! domain.n = 257
//! couplings.a = 1
//! couplings.b = -1
//! couplings.c = 0
//! couplings.d = 1
//! vortices.zero1 = 0.01, 0.02
//! vortices.pole2 = 1.5, -0.3, 2
//! solver.lambda = 10
//! output.dump = u1,B1
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use duovortex::background::{DEFAULT_COPIES, DEFAULT_LAMBDA};
use duovortex::diagnostics::DecayWindow;
use duovortex::oracle::RadialProblem;
use duovortex::{CouplingMatrix, DomainSpec, PhysicalCouplings, Sign, SolverOptions, Vortex, VortexConfiguration};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", match .line { Some(l) => format!("line {l}: {}", .message), None => .message.clone() })]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Couplings {
    Physical(PhysicalCouplings),
    Matrix(CouplingMatrix),
}

impl Couplings {
    pub fn matrix(&self) -> CouplingMatrix {
        match self {
            Couplings::Physical(pc) => pc.coupling_matrix(),
            Couplings::Matrix(cm) => *cm,
        }
    }

    pub fn physical(&self) -> Option<&PhysicalCouplings> {
        match self {
            Couplings::Physical(pc) => Some(pc),
            Couplings::Matrix(_) => None,
        }
    }
}

/// Field maps that can be written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DumpField {
    U1,
    U2,
    Q2,
    P2,
    B1,
    B2,
    Fhat,
    Ftilde,
    F1,
    F2,
    U01,
    U02,
}

impl DumpField {
    pub const ALL: [DumpField; 12] = [
        DumpField::U1,
        DumpField::U2,
        DumpField::Q2,
        DumpField::P2,
        DumpField::B1,
        DumpField::B2,
        DumpField::Fhat,
        DumpField::Ftilde,
        DumpField::F1,
        DumpField::F2,
        DumpField::U01,
        DumpField::U02,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DumpField::U1 => "u1",
            DumpField::U2 => "u2",
            DumpField::Q2 => "q2",
            DumpField::P2 => "p2",
            DumpField::B1 => "B1",
            DumpField::B2 => "B2",
            DumpField::Fhat => "Fhat",
            DumpField::Ftilde => "Ftilde",
            DumpField::F1 => "f1",
            DumpField::F2 => "f2",
            DumpField::U01 => "u01",
            DumpField::U02 => "u02",
        }
    }

    /// Maps that only exist for physical couplings.
    pub fn needs_physical(self) -> bool {
        matches!(
            self,
            DumpField::Q2 | DumpField::P2 | DumpField::B1 | DumpField::B2 | DumpField::Fhat | DumpField::Ftilde
        )
    }
}

impl FromStr for DumpField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        DumpField::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<&str> = DumpField::ALL.iter().map(|f| f.name()).collect();
            format!("unknown field `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Parses `u1,B1,...` into a sorted, de-duplicated list.
pub fn parse_dump_list(s: &str) -> Result<Vec<DumpField>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(item.parse()?);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub copies: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub force: bool,
    pub sign: Sign,
    pub window: Option<DecayWindow>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            lambda: DEFAULT_LAMBDA,
            copies: DEFAULT_COPIES,
            tol: o.tol_residual,
            max_iter: o.max_iter,
            force: false,
            sign: Sign::Upper,
            window: None,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { tol_residual: self.tol, max_iter: self.max_iter, force: self.force, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub radius: f64,
    pub nodes: usize,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { radius: RadialProblem::DEFAULT_RADIUS, nodes: RadialProblem::DEFAULT_NODES, r_lo: 0.1, r_hi: 8.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub dump: Vec<DumpField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub couplings: Couplings,
    pub vortices: VortexConfiguration,
    pub solver: SolverConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

const KEYS: &[&str] = &[
    "domain.kind",
    "domain.L1",
    "domain.L2",
    "domain.n1",
    "domain.n2",
    "domain.R",
    "domain.n",
    "couplings.a",
    "couplings.b",
    "couplings.c",
    "couplings.d",
    "couplings.a11",
    "couplings.a12",
    "couplings.a21",
    "couplings.a22",
    "vortices.zero1",
    "vortices.pole1",
    "vortices.zero2",
    "vortices.pole2",
    "solver.lambda",
    "solver.copies",
    "solver.tol",
    "solver.max_iter",
    "solver.force",
    "solver.sign",
    "solver.decay_r_lo",
    "solver.decay_r_hi",
    "oracle.R",
    "oracle.nodes",
    "oracle.r_lo",
    "oracle.r_hi",
    "output.dir",
    "output.dump",
];

fn repeatable(key: &str) -> bool {
    key.starts_with("vortices.") || key == "output.dump"
}

#[derive(Debug)]
struct Entry {
    line: usize,
    value: String,
}

struct Table {
    entries: BTreeMap<&'static str, Vec<Entry>>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&'static str, Vec<Entry>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::at(line, format!("expected `section.key = value`, got `{content}`")));
            };
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            };
            let list = entries.entry(known).or_default();
            if !list.is_empty() && !repeatable(known) {
                return Err(ConfigError::at(
                    line,
                    format!("duplicate key `{known}` (first set on line {})", list[0].line),
                ));
            }
            list.push(Entry { line, value: value.trim().to_string() });
        }
        Ok(Self { entries })
    }

    fn one(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key).and_then(|v| v.first())
    }

    fn all(&self, key: &str) -> &[Entry] {
        self.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.one(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(e.line, format!("invalid value `{}` for `{key}`", e.value))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::global(format!("missing required key `{key}`")))
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.one(key).map(|e| e.line)
    }

    /// Errors on the first present key from `keys`.
    fn forbid(&self, keys: &[&str], why: &str) -> Result<(), ConfigError> {
        for k in keys {
            if let Some(line) = self.line_of(k) {
                return Err(ConfigError::at(line, format!("`{k}` {why}")));
            }
        }
        Ok(())
    }
}

fn finite(key: &str, line: Option<usize>, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError { line, message: format!("`{key}` must be finite") })
    }
}

fn parse_domain(t: &Table) -> Result<DomainSpec, ConfigError> {
    let kind: String = t.require("domain.kind")?;
    let line = t.line_of("domain.kind");
    let built = match kind.as_str() {
        "torus" => {
            t.forbid(&["domain.R", "domain.n"], "is not used by a torus domain")?;
            let l1 = finite("domain.L1", t.line_of("domain.L1"), t.get_or("domain.L1", 2.0 * PI)?)?;
            let l2 = finite("domain.L2", t.line_of("domain.L2"), t.get_or("domain.L2", 2.0 * PI)?)?;
            DomainSpec::torus(l1, l2, t.get_or("domain.n1", 256)?, t.get_or("domain.n2", 256)?)
        }
        "plane" => {
            t.forbid(&["domain.L1", "domain.L2", "domain.n1", "domain.n2"], "is not used by a plane domain")?;
            let r = finite("domain.R", t.line_of("domain.R"), t.get_or("domain.R", 12.0)?)?;
            DomainSpec::plane(r, t.get_or("domain.n", 257)?)
        }
        other => {
            return Err(ConfigError { line, message: format!("domain.kind must be `torus` or `plane`, got `{other}`") })
        }
    };
    built.map_err(|e| ConfigError { line, message: e.to_string() })
}

fn parse_couplings(t: &Table) -> Result<Couplings, ConfigError> {
    const PHYS: [&str; 4] = ["couplings.a", "couplings.b", "couplings.c", "couplings.d"];
    const MAT: [&str; 4] = ["couplings.a11", "couplings.a12", "couplings.a21", "couplings.a22"];
    let phys = PHYS.iter().any(|k| t.has(k));
    let mat = MAT.iter().any(|k| t.has(k));
    let read = |keys: [&str; 4]| -> Result<[f64; 4], ConfigError> {
        let mut out = [0.0; 4];
        for (o, k) in out.iter_mut().zip(keys) {
            *o = finite(k, t.line_of(k), t.require(k)?)?;
        }
        Ok(out)
    };
    match (phys, mat) {
        (true, true) => {
            let line = MAT.iter().chain(&PHYS).filter_map(|k| t.line_of(k)).max();
            Err(ConfigError {
                line,
                message: "give either physical couplings (a, b, c, d) or a matrix (a11..a22), not both".into(),
            })
        }
        (false, false) => Err(ConfigError::global("missing couplings: set couplings.a..d or couplings.a11..a22")),
        (true, false) => {
            let [a, b, c, d] = read(PHYS)?;
            PhysicalCouplings::new(a, b, c, d)
                .map(Couplings::Physical)
                .map_err(|e| ConfigError { line: t.line_of("couplings.a"), message: e.to_string() })
        }
        (false, true) => {
            let [a11, a12, a21, a22] = read(MAT)?;
            CouplingMatrix::new(a11, a12, a21, a22)
                .map(Couplings::Matrix)
                .map_err(|e| ConfigError { line: t.line_of("couplings.a11"), message: e.to_string() })
        }
    }
}

fn parse_vortex(e: &Entry, key: &str) -> Result<Vortex, ConfigError> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    let bad = || ConfigError::at(e.line, format!("`{key}` expects `x, y` or `x, y, multiplicity`, got `{}`", e.value));
    if !(2..=3).contains(&parts.len()) {
        return Err(bad());
    }
    let x: f64 = parts[0].parse().map_err(|_| bad())?;
    let y: f64 = parts[1].parse().map_err(|_| bad())?;
    let m: u32 = match parts.get(2) {
        Some(s) => s.parse().map_err(|_| bad())?,
        None => 1,
    };
    if !(x.is_finite() && y.is_finite()) || m == 0 {
        return Err(bad());
    }
    Ok(Vortex::new(x, y, m))
}

fn parse_vortices(t: &Table) -> Result<VortexConfiguration, ConfigError> {
    let list =
        |key: &str| -> Result<Vec<Vortex>, ConfigError> { t.all(key).iter().map(|e| parse_vortex(e, key)).collect() };
    Ok(VortexConfiguration {
        zeros1: list("vortices.zero1")?,
        poles1: list("vortices.pole1")?,
        zeros2: list("vortices.zero2")?,
        poles2: list("vortices.pole2")?,
    })
}

fn parse_solver(t: &Table) -> Result<SolverConfig, ConfigError> {
    let d = SolverConfig::default();
    let positive = |key: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError { line: t.line_of(key), message: format!("`{key}` must be positive") })
        }
    };
    let sign = match t.get::<String>("solver.sign")?.as_deref() {
        None | Some("upper") => Sign::Upper,
        Some("lower") => Sign::Lower,
        Some(other) => {
            return Err(ConfigError {
                line: t.line_of("solver.sign"),
                message: format!("solver.sign must be `upper` or `lower`, got `{other}`"),
            })
        }
    };
    let window = match (t.get::<f64>("solver.decay_r_lo")?, t.get::<f64>("solver.decay_r_hi")?) {
        (None, None) => None,
        (Some(r_lo), Some(r_hi)) => Some(DecayWindow { r_lo, r_hi }),
        _ => {
            let line = t.line_of("solver.decay_r_lo").or(t.line_of("solver.decay_r_hi"));
            return Err(ConfigError { line, message: "set both solver.decay_r_lo and solver.decay_r_hi".into() });
        }
    };
    Ok(SolverConfig {
        lambda: positive("solver.lambda", t.get_or("solver.lambda", d.lambda)?)?,
        copies: t.get_or("solver.copies", d.copies)?,
        tol: positive("solver.tol", t.get_or("solver.tol", d.tol)?)?,
        max_iter: t.get_or("solver.max_iter", d.max_iter)?,
        force: t.get_or("solver.force", d.force)?,
        sign,
        window,
    })
}

fn parse_oracle(t: &Table) -> Result<OracleConfig, ConfigError> {
    let d = OracleConfig::default();
    let cfg = OracleConfig {
        radius: t.get_or("oracle.R", d.radius)?,
        nodes: t.get_or("oracle.nodes", d.nodes)?,
        r_lo: t.get_or("oracle.r_lo", d.r_lo)?,
        r_hi: t.get_or("oracle.r_hi", d.r_hi)?,
    };
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        return Err(ConfigError { line: t.line_of("oracle.R"), message: "`oracle.R` must be positive".into() });
    }
    if cfg.nodes < RadialProblem::MIN_NODES {
        return Err(ConfigError {
            line: t.line_of("oracle.nodes"),
            message: format!("`oracle.nodes` must be at least {}", RadialProblem::MIN_NODES),
        });
    }
    if !(0.0 <= cfg.r_lo && cfg.r_lo < cfg.r_hi && cfg.r_hi.is_finite()) {
        return Err(ConfigError {
            line: t.line_of("oracle.r_lo").or(t.line_of("oracle.r_hi")),
            message: "need 0 <= oracle.r_lo < oracle.r_hi".into(),
        });
    }
    Ok(cfg)
}

fn parse_output(t: &Table) -> Result<OutputConfig, ConfigError> {
    let mut dump = Vec::new();
    for e in t.all("output.dump") {
        dump.extend(parse_dump_list(&e.value).map_err(|m| ConfigError::at(e.line, m))?);
    }
    dump.sort();
    dump.dedup();
    Ok(OutputConfig { dir: t.get::<String>("output.dir")?.map(PathBuf::from), dump })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let t = Table::parse(text)?;
        let cfg = RunConfig {
            domain: parse_domain(&t)?,
            couplings: parse_couplings(&t)?,
            vortices: parse_vortices(&t)?,
            solver: parse_solver(&t)?,
            oracle: parse_oracle(&t)?,
            output: parse_output(&t)?,
        };
        if cfg.couplings.physical().is_none() {
            if let Some(f) = cfg.output.dump.iter().find(|f| f.needs_physical()) {
                return Err(ConfigError {
                    line: t.line_of("output.dump"),
                    message: format!("dumping `{}` requires physical couplings (a, b, c, d)", f.name()),
                });
            }
        }
        Ok(cfg)
    }

    /// Canonical text form; [`RunConfig::parse`] of it returns `self`.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match self.domain {
            DomainSpec::Torus { l1, l2, n1, n2 } => {
                kv("domain.kind", &"torus");
                kv("domain.L1", &l1);
                kv("domain.L2", &l2);
                kv("domain.n1", &n1);
                kv("domain.n2", &n2);
            }
            DomainSpec::Plane { half_width, n } => {
                kv("domain.kind", &"plane");
                kv("domain.R", &half_width);
                kv("domain.n", &n);
            }
        }
        match self.couplings {
            Couplings::Physical(pc) => {
                kv("couplings.a", &pc.a);
                kv("couplings.b", &pc.b);
                kv("couplings.c", &pc.c);
                kv("couplings.d", &pc.d);
            }
            Couplings::Matrix(cm) => {
                kv("couplings.a11", &cm.a11());
                kv("couplings.a12", &cm.a12());
                kv("couplings.a21", &cm.a21());
                kv("couplings.a22", &cm.a22());
            }
        }
        let vc = &self.vortices;
        for (key, list) in [
            ("vortices.zero1", &vc.zeros1),
            ("vortices.pole1", &vc.poles1),
            ("vortices.zero2", &vc.zeros2),
            ("vortices.pole2", &vc.poles2),
        ] {
            for v in list {
                kv(key, &format_args!("{}, {}, {}", v.x, v.y, v.multiplicity));
            }
        }
        let sv = &self.solver;
        kv("solver.lambda", &sv.lambda);
        kv("solver.copies", &sv.copies);
        kv("solver.tol", &sv.tol);
        kv("solver.max_iter", &sv.max_iter);
        kv("solver.force", &sv.force);
        kv("solver.sign", &if sv.sign == Sign::Upper { "upper" } else { "lower" });
        if let Some(w) = sv.window {
            kv("solver.decay_r_lo", &w.r_lo);
            kv("solver.decay_r_hi", &w.r_hi);
        }
        let o = &self.oracle;
        kv("oracle.R", &o.radius);
        kv("oracle.nodes", &o.nodes);
        kv("oracle.r_lo", &o.r_lo);
        kv("oracle.r_hi", &o.r_hi);
        if let Some(dir) = &self.output.dir {
            kv("output.dir", &dir.display());
        }
        if !self.output.dump.is_empty() {
            let names: Vec<&str> = self.output.dump.iter().map(|f| f.name()).collect();
            kv("output.dump", &names.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLANE: &str = "\
# single vortex
domain.kind = plane
domain.R = 12
domain.n = 257
couplings.a = 1
couplings.b = -1
couplings.c = 0
couplings.d = 1
vortices.zero1 = 0.01, 0.02
";

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::parse(PLANE).unwrap();
        assert_eq!(cfg.domain, DomainSpec::plane(12.0, 257).unwrap());
        assert_eq!(cfg.vortices.zeros1, vec![Vortex::at(0.01, 0.02)]);
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.couplings.matrix().entries(), [[8.0, -4.0], [-4.0, 4.0]]);
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "{PLANE}vortices.pole2 = -1.5, 0.25, 3\nsolver.sign = lower\nsolver.tol = 1e-11\noutput.dump = B1, u1\noutput.dump = u1\nsolver.decay_r_lo = 6\nsolver.decay_r_hi = 10\noutput.dir = /tmp/x y\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.output.dump, vec![DumpField::U1, DumpField::B1]);
        assert_eq!(RunConfig::parse(&cfg.echo()).unwrap(), cfg);

        let torus =
            "domain.kind = torus\ncouplings.a11 = 4\ncouplings.a12 = 2\ncouplings.a21 = 0.5\ncouplings.a22 = 3\n";
        let cfg = RunConfig::parse(torus).unwrap();
        assert_eq!(cfg.domain, DomainSpec::torus(2.0 * PI, 2.0 * PI, 256, 256).unwrap());
        assert_eq!(RunConfig::parse(&cfg.echo()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let both = format!("{PLANE}couplings.a11 = 4\n");
        assert_eq!(RunConfig::parse(&both).unwrap_err().line, Some(10));
        let cases = [
            ("domain.kind = plane\nfoo.bar = 1\n", Some(2)),
            ("domain.kind = plane\ndomain.kind = torus\n", Some(2)),
            ("domain.kind = plane\ndomain.n = many\n", Some(2)),
            ("domain.kind = disk\n", Some(1)),
            ("domain.kind = torus\ndomain.n1 = 7\n", Some(1)),
            ("domain.kind = plane\nno equals sign\n", Some(2)),
            ("domain.kind = plane\ndomain.L1 = 3\n", Some(2)),
        ];
        for (text, line) in cases {
            assert_eq!(RunConfig::parse(text).unwrap_err().line, line, "{text}");
        }
        let bad_vortex = format!("{PLANE}vortices.pole1 = 1, 2, 0\n");
        assert_eq!(RunConfig::parse(&bad_vortex).unwrap_err().line, Some(10));
        let missing = "domain.kind = plane\n";
        let err = RunConfig::parse(missing).unwrap_err();
        assert!(err.line.is_none() && err.message.contains("couplings"));
        assert!(err.to_string().starts_with("missing couplings"));
    }

    #[test]
    fn physical_dumps_need_physical_couplings() {
        let text = "domain.kind = plane\ncouplings.a11 = 4\ncouplings.a12 = 0\ncouplings.a21 = 0\ncouplings.a22 = 4\noutput.dump = B1\n";
        assert_eq!(RunConfig::parse(text).unwrap_err().line, Some(6));
        assert!(parse_dump_list("u1,zz").is_err());
    }
}
