//! `check`, `solve` and `oracle`: each returns its exit status and the text
//! printed to standard output.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use duovortex::diagnostics::{diagnose, DiagnosticsReport};
use duovortex::oracle::{compare_with_plane, solve_radial, RadialProblem};
use duovortex::{
    check_points, check_torus_feasibility, decay_rates, predicted_fluxes, DomainSpec, Error as CoreError, Problem,
    ScalarField, Sign, Solution,
};
use thiserror::Error;

use crate::config::{ConfigError, DumpField, RunConfig};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    ConfigError = 1,
    Infeasible = 2,
    NotConverged = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(CoreError),
    #[error("{0}")]
    Infeasible(CoreError),
    #[error("{path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    BadDump { path: PathBuf, message: String },
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Infeasible(_) => Status::Infeasible,
            _ => Status::ConfigError,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Infeasible { .. } => CliError::Infeasible(e),
            other => CliError::Invalid(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: Status,
    pub stdout: String,
}

/// Float with 17 significant digits, or `none`.
struct Num(Option<f64>);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.16e}"),
            None => f.write_str("none"),
        }
    }
}

fn num(v: f64) -> Num {
    Num(Some(v))
}

#[derive(Default)]
struct Doc(String);

impl Doc {
    fn kv(&mut self, key: &str, value: impl fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn cmd_check(cfg: &RunConfig, echo: bool) -> Result<Outcome, CliError> {
    check_points(&cfg.vortices, &cfg.domain)?;
    let mut doc = Doc::default();
    if echo {
        doc.0.push_str(&cfg.echo());
    }
    let cm = cfg.couplings.matrix();
    let pc = cfg.couplings.physical();
    let mut status = Status::Ok;
    doc.kv("domain", cfg.domain);
    match cfg.domain {
        DomainSpec::Torus { .. } => {
            let rep = check_torus_feasibility(&cm, &cfg.vortices, cfg.domain.area());
            doc.kv("feasibility_lhs1", num(rep.lhs1));
            doc.kv("feasibility_lhs2", num(rep.lhs2));
            doc.kv("feasibility_rhs", num(rep.rhs));
            doc.kv("feasible", rep.feasible);
            if !rep.feasible {
                status = Status::Infeasible;
            }
        }
        DomainSpec::Plane { .. } => doc.kv("feasible", "none"),
    }
    let rates = decay_rates(&cm, pc);
    doc.kv("lambda0", num(rates.lambda0));
    doc.kv("lambda1", num(rates.lambda1));
    doc.kv("sigma", Num(rates.sigma));
    doc.kv("decay_rate_linearized", num(rates.linearized_squared_rate()));
    let p = predicted_fluxes(&cm, &cfg.vortices, pc).oriented(cfg.solver.sign);
    doc.kv("predicted_T1", num(p.t1));
    doc.kv("predicted_T2", num(p.t2));
    doc.kv("predicted_chern1", Num(p.chern.map(|c| c[0])));
    doc.kv("predicted_chern2", Num(p.chern.map(|c| c[1])));
    doc.kv("predicted_charge1", Num(p.charge.map(|c| c[0])));
    doc.kv("predicted_charge2", Num(p.charge.map(|c| c[1])));
    doc.kv("energy_predicted", num(p.energy));
    Ok(Outcome { status, stdout: doc.0 })
}

/// Builds the problem for the configured branch. The lower branch is solved
/// as the zero/pole-swapped upper problem and negated afterwards.
pub fn build_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let vc = match cfg.solver.sign {
        Sign::Upper => cfg.vortices.clone(),
        Sign::Lower => cfg.vortices.swapped(),
    };
    Ok(Problem::build(
        cfg.couplings.matrix(),
        vc,
        cfg.domain,
        cfg.solver.lambda,
        cfg.solver.copies,
        cfg.solver.options(),
    )?)
}

/// Solution of the configured branch.
pub fn run_solver(cfg: &RunConfig, problem: &Problem) -> Solution {
    let sol = duovortex::solve(problem);
    match cfg.solver.sign {
        Sign::Upper => sol,
        Sign::Lower => sol.negated(),
    }
}

pub fn summary(cfg: &RunConfig, sol: &Solution, rep: &DiagnosticsReport) -> String {
    let mut doc = Doc::default();
    doc.kv("converged", sol.converged);
    doc.kv("iterations", sol.iterations);
    doc.kv("residual_sup", num(sol.residual_sup));
    doc.kv("J_value", num(sol.j_value));
    doc.kv("measured_T1", num(rep.measured[0]));
    doc.kv("measured_T2", num(rep.measured[1]));
    doc.kv("predicted_T1", num(rep.predicted.t1));
    doc.kv("predicted_T2", num(rep.predicted.t2));
    doc.kv("energy_topological", Num(rep.energy_topological));
    doc.kv("energy_predicted", num(rep.predicted.energy));
    doc.kv("chern1", Num(rep.chern.map(|c| c[0])));
    doc.kv("chern2", Num(rep.chern.map(|c| c[1])));
    doc.kv("decay_rate", Num(rep.decay.map(|d| d.rate)));
    doc.kv("lambda0", num(rep.rates.lambda0));
    doc.kv("lambda1", num(rep.rates.lambda1));
    doc.kv("sigma", Num(rep.rates.sigma));
    doc.kv("decay_rate_linearized", num(rep.rates.linearized_squared_rate()));
    doc.kv("charge1", Num(rep.charges.map(|c| c[0])));
    doc.kv("charge2", Num(rep.charges.map(|c| c[1])));
    doc.kv("termination", format_args!("{:?}", sol.termination));
    doc.kv("sign", if cfg.solver.sign == Sign::Upper { "upper" } else { "lower" });
    doc.0
}

/// Header `# nx ny x0 y0 hx hy`, then one comma-separated line per row.
pub fn format_dump(field: &ScalarField) -> String {
    let d = field.domain();
    let (nx, ny) = d.shape();
    let (x0, y0) = d.origin();
    let (hx, hy) = d.spacing();
    let mut s = format!("# {nx} {ny} {} {} {} {}\n", num(x0), num(y0), num(hx), num(hy));
    for j in 0..ny {
        for i in 0..nx {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", num(field.get(i, j)));
        }
        s.push('\n');
    }
    s
}

/// Reads a plane-domain dump written by [`format_dump`].
pub fn read_dump(path: &Path) -> Result<ScalarField, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |message: String| CliError::BadDump { path: path.to_path_buf(), message };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let fields: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
    if fields.len() != 6 {
        return Err(bad(format!("malformed header `{header}`")));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("malformed header `{header}`")));
    let parse_f64 = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("malformed header `{header}`")));
    let (nx, ny) = (parse_usize(fields[0])?, parse_usize(fields[1])?);
    let (x0, y0) = (parse_f64(fields[2])?, parse_f64(fields[3])?);
    if nx != ny || x0 != y0 || x0 >= 0.0 {
        return Err(bad("only square plane dumps can be compared".into()));
    }
    let domain = DomainSpec::plane(-x0, nx).map_err(|e| bad(e.to_string()))?;
    let mut values = Vec::with_capacity(nx * ny);
    for (row, line) in lines.enumerate() {
        for item in line.split(',') {
            let v: f64 = item.trim().parse().map_err(|_| bad(format!("row {}: invalid value `{item}`", row + 1)))?;
            values.push(v);
        }
    }
    ScalarField::new(domain, values).map_err(|e| bad(e.to_string()))
}

fn dump_field(field: DumpField, problem: &Problem, sol: &Solution, rep: &DiagnosticsReport, sign: Sign) -> ScalarField {
    let bd = problem.background();
    // the lower branch's background is the negated background of the swapped problem
    let oriented = |f: &ScalarField| match sign {
        Sign::Upper => f.clone(),
        Sign::Lower => f.map(|v| -v),
    };
    let maps = || rep.maps.as_ref().expect("physical maps checked at parse time");
    match field {
        DumpField::U1 => sol.u1.clone(),
        DumpField::U2 => sol.u2.clone(),
        DumpField::Q2 => maps().q2.clone(),
        DumpField::P2 => maps().p2.clone(),
        DumpField::B1 => maps().b1.clone(),
        DumpField::B2 => maps().b2.clone(),
        DumpField::Fhat => maps().fhat.clone(),
        DumpField::Ftilde => maps().ftilde.clone(),
        DumpField::F1 => oriented(&bd.f1),
        DumpField::F2 => oriented(&bd.f2),
        DumpField::U01 => oriented(&bd.u01),
        DumpField::U02 => oriented(&bd.u02),
    }
}

fn output_dir(cfg: &RunConfig) -> Result<Option<PathBuf>, CliError> {
    match &cfg.output.dir {
        None if !cfg.output.dump.is_empty() => Err(ConfigError {
            line: None,
            message: "field dumps need an output directory (--out or output.dir)".into(),
        }
        .into()),
        None => Ok(None),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            Ok(Some(dir.clone()))
        }
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = output_dir(cfg)?;
    let problem = build_problem(cfg)?;
    let sol = run_solver(cfg, &problem);
    let rep = diagnose(
        &sol,
        &cfg.couplings.matrix(),
        &cfg.vortices,
        cfg.couplings.physical(),
        cfg.solver.sign,
        cfg.solver.window,
    )?;
    let text = summary(cfg, &sol, &rep);
    if let Some(dir) = dir {
        let path = dir.join("summary.txt");
        fs::write(&path, &text).map_err(io_err(&path))?;
        for &f in &cfg.output.dump {
            let path = dir.join(format!("{}.csv", f.name()));
            let field = dump_field(f, &problem, &sol, &rep, cfg.solver.sign);
            fs::write(&path, format_dump(&field)).map_err(io_err(&path))?;
        }
    }
    let status = if sol.converged { Status::Ok } else { Status::NotConverged };
    Ok(Outcome { status, stdout: text })
}

/// Writes the radial profile; with `compare`, reads `u1.csv`/`u2.csv` from
/// that directory and reports the largest deviation over the oracle annulus.
pub fn cmd_oracle(cfg: &RunConfig, compare: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = output_dir(cfg)?;
    let o = &cfg.oracle;
    let (rp, center) = RadialProblem::from_configuration(cfg.couplings.matrix(), &cfg.vortices, o.radius, o.nodes)?;
    let rs = solve_radial(&rp)?;
    let mut doc = Doc::default();
    doc.kv("n1", rp.n1);
    doc.kv("n2", rp.n2);
    doc.kv("radius", num(rp.radius));
    doc.kv("nodes", rp.nodes);
    doc.kv("iterations", rs.iterations);
    doc.kv("residual_sup", num(rs.residual_sup));
    let [t1, t2] = rs.fluxes();
    doc.kv("measured_T1", num(t1));
    doc.kv("measured_T2", num(t2));
    if let Some(dir) = dir {
        let path = dir.join("radial_profile.txt");
        fs::write(&path, rs.to_table()).map_err(io_err(&path))?;
    }
    if let Some(src) = compare {
        let u1 = read_dump(&src.join("u1.csv"))?;
        let u2 = read_dump(&src.join("u2.csv"))?;
        if u1.domain() != u2.domain() {
            return Err(CliError::BadDump { path: src.to_path_buf(), message: "u1 and u2 grids differ".into() });
        }
        let diff = compare_with_plane(&rs, &u1, &u2, center, o.r_lo, o.r_hi)?;
        doc.kv("compare_r_lo", num(o.r_lo));
        doc.kv("compare_r_hi", num(o.r_hi));
        doc.kv("sup_diff", num(diff));
    }
    Ok(Outcome { status: Status::Ok, stdout: doc.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_use_seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(-std::f64::consts::PI).to_string(), "-3.1415926535897931e0");
        assert_eq!(Num(None).to_string(), "none");
        let x = 1.0 / 3.0;
        assert_eq!(num(x).to_string().parse::<f64>().unwrap(), x);
    }

    #[test]
    fn dump_round_trip() {
        let d = DomainSpec::plane(2.0, 5).unwrap();
        let f = ScalarField::from_fn(d, |x, y| x * 10.0 + y / 3.0);
        let text = format_dump(&f);
        assert!(text.starts_with("# 5 5 -2.0000000000000000e0 -2.0000000000000000e0 1.0000000000000000e0"));
        assert_eq!(text.lines().count(), 6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u1.csv");
        fs::write(&path, &text).unwrap();
        assert_eq!(read_dump(&path).unwrap(), f);
    }
}
