//! The `locp` command line: validate instance files, run dilations and
//! Radon-Nikodym computations on them, and generate seeded fixtures.
//!
//! Exit codes: 0 success, 1 a mathematical check failed, 2 bad input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cp_maps::{dominates, schur_map, verify_local_cc, verify_local_cp};
use crate::error::{Error, Result};
use crate::fixtures::{self, Limits};
use crate::flagspace::Flag;
use crate::hilbert_module::{map_from_commutant_pair, module_dilate, module_rn, verify_phi_map};
use crate::instance::{matrix_to_json, FlagRef, Instance, InstanceJson};
use crate::linalg::{frob, CMat};
use crate::local_algebra::{block_diagonal_algebra, LocalAlgebra};
use crate::radon_nikodym::{commutant_basis, derivative, map_from_derivative, sample_contraction_in_commutant};
use crate::report::CertificateReport;
use crate::stinespring::{dilate_minimal, verify_dilation};
use crate::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "locp", version, about = "Local CP maps: validation, dilations, Radon-Nikodym derivatives")]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Options {
    /// Relative tolerance for operator equality.
    #[arg(long, global = true, env = "LOCP_TOL_EQ")]
    pub tol_eq: Option<f64>,
    /// Relative tolerance for eigenvalue nonnegativity.
    #[arg(long, global = true, env = "LOCP_TOL_PSD")]
    pub tol_psd: Option<f64>,
    /// Relative cut for numerical rank.
    #[arg(long, global = true, env = "LOCP_TOL_RANK")]
    pub tol_rank: Option<f64>,
    #[arg(long, global = true, env = "LOCP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON result here (atomically) instead of only printing it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load an instance and run every structural and positivity check.
    Validate { path: PathBuf },
    /// Minimal dilation of a named map.
    Dilate {
        path: PathBuf,
        #[arg(long)]
        map: Option<String>,
    },
    /// Derivative of `psi` with respect to a dominating `phi`.
    Rn {
        path: PathBuf,
        #[arg(long, default_value = "phi")]
        phi: String,
        #[arg(long, default_value = "psi")]
        psi: String,
    },
    /// Module analogue: the pair `(|T|, |S|)` of `sub` relative to `dom`.
    ModuleRn {
        path: PathBuf,
        #[arg(long, default_value = "Phi")]
        dom: String,
        #[arg(long, default_value = "Psi")]
        sub: String,
    },
    /// Write a seeded fixture.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        /// Ambient dimension for `schur`.
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Schur,
    RandomCp,
    DominatedPair,
    ModulePair,
}

/// What a command produced: a JSON document, a human summary and a verdict.
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub pass: bool,
}

impl Outcome {
    fn from_report(json: Value, report: &CertificateReport) -> Self {
        Outcome { json, text: report.to_string(), pass: report.pass }
    }
}

impl Options {
    fn apply(&self, tol: &mut Tolerances) {
        if let Some(x) = self.tol_eq {
            tol.tau_eq = x;
        }
        if let Some(x) = self.tol_psd {
            tol.tau_psd = x;
        }
        if let Some(x) = self.tol_rank {
            tol.tau_rank = x;
        }
    }

    fn tolerances(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        self.apply(&mut tol);
        tol
    }
}

fn load(path: &Path, opts: &Options) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let mut json: InstanceJson = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    opts.apply(&mut json.tolerances);
    Instance::from_json(&json)
}

fn single_name<'a, T>(table: &'a std::collections::BTreeMap<String, T>, kind: &str) -> Result<&'a str> {
    let mut names = table.keys();
    match (names.next(), names.next()) {
        (Some(n), None) => Ok(n),
        _ => Err(Error::Param(format!("instance has {} {kind}s; pick one by name", table.len()))),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn validate(path: &Path, opts: &Options) -> Result<Outcome> {
    let inst = load(path, opts)?;
    let tol = inst.tolerances;
    let mut all = CertificateReport::new("validate");
    let mut entries = Vec::new();
    let mut text = String::new();
    for (name, map) in &inst.maps {
        let cp = verify_local_cp(map, &tol);
        let mut reports = vec![cp.clone()];
        if cp.pass {
            reports.push(verify_local_cc(map, &tol)?);
        }
        for r in reports {
            all.pass &= r.pass;
            text.push_str(&format!("map {name}: {r}"));
            entries.push(json!({"object": name, "report": to_value(&r)}));
        }
    }
    for (name, c) in &inst.inducing_maps {
        let r = verify_phi_map(c, &tol);
        all.pass &= r.pass;
        text.push_str(&format!("inducing map {name}: {r}"));
        entries.push(json!({"object": name, "report": to_value(&r)}));
    }
    text.push_str(&format!(
        "{} flags, {} algebras, {} maps, {} modules, {} inducing maps: {}\n",
        inst.flags.len(),
        inst.algebras.len(),
        inst.maps.len(),
        inst.modules.len(),
        inst.inducing_maps.len(),
        if all.pass { "PASS" } else { "FAIL" }
    ));
    Ok(Outcome { json: json!({"pass": all.pass, "reports": entries}), text, pass: all.pass })
}

pub fn dilate(path: &Path, map: Option<&str>, opts: &Options) -> Result<Outcome> {
    let inst = load(path, opts)?;
    let name = match map {
        Some(n) => n,
        None => single_name(&inst.maps, "map")?,
    };
    let tol = inst.tolerances;
    let rep = dilate_minimal(inst.map(name)?, &tol)?;
    let report = verify_dilation(&rep, &tol);
    let json = json!({
        "map": name,
        "r": rep.dim(),
        "dilation_dims": rep.dil_flag().dims(),
        "spectrum": rep.spectrum(),
        "v": matrix_to_json(rep.v()),
        "pi": rep.pi_ops().iter().map(|p| matrix_to_json(p.matrix())).collect::<Vec<_>>(),
        "report": to_value(&report),
    });
    let mut out = Outcome::from_report(json, &report);
    out.text = format!("map {name}: r = {}, dilation levels {:?}\n{}", rep.dim(), rep.dil_flag().dims(), out.text);
    Ok(out)
}

fn ground_truth_check(inst: &Instance, key: &str, value: &CMat, report: &mut CertificateReport) {
    if let Some(gt) = inst.ground_truth.get(key) {
        let err = if gt.shape() == value.shape() { frob(&(gt - value)) } else { f64::INFINITY };
        report.push_check(format!("ground_truth_{key}"), err, inst.tolerances.tau_roundtrip);
    }
}

pub fn rn(path: &Path, phi: &str, psi: &str, opts: &Options) -> Result<Outcome> {
    let inst = load(path, opts)?;
    let tol = inst.tolerances;
    let (phi_map, psi_map) = (inst.map(phi)?, inst.map(psi)?);
    let dom = dominates(phi_map, psi_map, &tol)?;
    if !dom.pass {
        let worst = dom.levels.iter().filter_map(|l| l.min_eig).fold(f64::INFINITY, f64::min);
        return Err(Error::Domination(format!(
            "worst Gram-Choi eigenvalue of {phi} - {psi} is {worst:.3e} ({})",
            dom.failures()
        )));
    }
    let rep = dilate_minimal(phi_map, &tol)?;
    let cert = derivative(&rep, psi_map, &tol)?;
    let mut report = CertificateReport::new("rn");
    report.push_check("reconstruction", cert.residual_reconstruction, tol.eq_bound(psi_map.scale()));
    report.push_check("commutant", cert.residual_commutant, tol.eq_bound(1.0));
    report.push_check("spectrum_low", -cert.spectrum_bounds.0, tol.tau_psd);
    report.push_check("spectrum_high", cert.spectrum_bounds.1 - 1.0, tol.tau_psd);
    ground_truth_check(&inst, "T", &cert.t_matrix, &mut report);
    let json = json!({"phi": phi, "psi": psi, "certificate": to_value(&cert), "report": to_value(&report)});
    Ok(Outcome::from_report(json, &report))
}

pub fn module_rn_cmd(path: &Path, dom: &str, sub: &str, opts: &Options) -> Result<Outcome> {
    let inst = load(path, opts)?;
    let tol = inst.tolerances;
    let mut res = module_rn(inst.inducing(dom)?, inst.inducing(sub)?, &tol)?;
    ground_truth_check(&inst, "T", &res.abs_t, &mut res.report);
    ground_truth_check(&inst, "S", &res.abs_s, &mut res.report);
    let json = json!({"dom": dom, "sub": sub, "result": to_value(&res)});
    Ok(Outcome::from_report(json, &res.report))
}

fn add_algebra(json: &mut InstanceJson, name: &str, flag_name: &str, alg: &LocalAlgebra) {
    let r = json.add_flag(flag_name, alg.domain());
    json.add_algebra(name, r, alg);
}

/// A Schur multiplier on `C^n`, acting on every operator that respects the
/// flag `C^2 ⊂ C^n` (or on all of `M_n` when `n <= 2`).
pub fn gen_schur(n: usize, seed: u64, tol: &Tolerances) -> Result<InstanceJson> {
    if n == 0 {
        return Err(Error::Param("--n must be positive".into()));
    }
    let dims = if n <= 2 { vec![n] } else { vec![2, n] };
    let flag = Flag::standard(n, dims)?;
    let alg = Arc::new(block_diagonal_algebra(&flag, tol)?);
    let a = fixtures::schur_symbol(&mut fixtures::rng(seed), n);
    let map = schur_map(&a, &flag, alg.clone(), tol)?;
    let mut json = InstanceJson { tolerances: *tol, ..Default::default() };
    add_algebra(&mut json, "A", "F", &alg);
    json.add_map("phi", "A", FlagRef::Named("F".into()), &map);
    json.ground_truth.insert("symbol".into(), matrix_to_json(&a));
    Ok(json)
}

pub fn gen_random_cp(seed: u64, tol: &Tolerances) -> Result<InstanceJson> {
    let f = fixtures::random_cp_fixture(seed, Limits::default(), tol)?;
    let mut json = InstanceJson { tolerances: *tol, ..Default::default() };
    add_algebra(&mut json, "A", "domain", &f.algebra);
    let target = json.add_flag("target", f.map.target());
    json.add_map("phi", "A", target, &f.map);
    Ok(json)
}

/// `phi` random, `psi = φ_T` for a `T` sampled in the commutant; `T` is
/// recorded as ground truth.
pub fn gen_dominated_pair(seed: u64, tol: &Tolerances) -> Result<InstanceJson> {
    let mut json = gen_random_cp(seed, tol)?;
    let inst = Instance::from_json(&json)?;
    let phi = inst.map("phi")?;
    let rep = dilate_minimal(phi, tol)?;
    let t = sample_contraction_in_commutant(&commutant_basis(&rep, tol), seed)?;
    let psi = map_from_derivative(&rep, &t, tol)?;
    json.add_map("psi", "A", FlagRef::Named("target".into()), &psi);
    json.ground_truth.insert("T".into(), matrix_to_json(&t));
    Ok(json)
}

/// An inducing map `Phi` and `Psi = Φ_{T⊕S}` for a sampled commutant pair,
/// with `T` and `S` recorded as ground truth.
pub fn gen_module_pair(seed: u64, tol: &Tolerances) -> Result<InstanceJson> {
    let f = fixtures::random_module_fixture(seed, tol)?;
    let mut json = InstanceJson { tolerances: *tol, ..Default::default() };
    add_algebra(&mut json, "A", "domain", &f.algebra);
    let target = json.add_flag("H", f.phi.target());
    json.add_map("phi", "A", target.clone(), &f.phi);
    let carrier = json.add_flag("carrier", f.module.carrier());
    json.add_module("E", "A", carrier, &f.module);
    let k = json.add_flag("K", f.inducing.target());
    json.add_inducing("Phi", "E", "phi", k.clone(), &f.inducing);

    // Re-read so that Psi is built from exactly what the file will contain.
    let inst = Instance::from_json(&json)?;
    let d = module_dilate(inst.inducing("Phi")?, tol)?;
    let (t, s) = fixtures::commutant_pair(&d, seed, tol)?;
    let sub = map_from_commutant_pair(&d, &t, &s, tol)?;
    json.add_map("psi", "A", target, sub.phi());
    json.add_inducing("Psi", "E", "psi", k, &sub);
    json.ground_truth.insert("T".into(), matrix_to_json(&t));
    json.ground_truth.insert("S".into(), matrix_to_json(&s));
    Ok(json)
}

pub fn gen(kind: GenKind, n: usize, seed: u64, tol: &Tolerances) -> Result<InstanceJson> {
    match kind {
        GenKind::Schur => gen_schur(n, seed, tol),
        GenKind::RandomCp => gen_random_cp(seed, tol),
        GenKind::DominatedPair => gen_dominated_pair(seed, tol),
        GenKind::ModulePair => gen_module_pair(seed, tol),
    }
}

/// Write through a temporary file in the same directory and rename it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file = path.file_name().ok_or_else(|| Error::Param(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", file.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        2
    } else {
        1
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Run a parsed command, printing to `stdout`/`stderr`; returns the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let opts = &cli.opts;
    let result = match &cli.command {
        Command::Validate { path } => validate(path, opts),
        Command::Dilate { path, map } => dilate(path, map.as_deref(), opts),
        Command::Rn { path, phi, psi } => rn(path, phi, psi, opts),
        Command::ModuleRn { path, dom, sub } => module_rn_cmd(path, dom, sub, opts),
        Command::Gen { kind, n } => {
            let written = gen(*kind, *n, opts.seed, &opts.tolerances()).and_then(|json| {
                let text = json.to_json_string();
                match &opts.out {
                    Some(p) => write_atomic(p, &text).map(|_| format!("wrote {}\n", p.display())),
                    None => Ok(text),
                }
            });
            return match written {
                Ok(msg) => {
                    let _ = stdout.write_all(msg.as_bytes());
                    0
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    exit_code(&e)
                }
            };
        }
    };
    match result {
        Ok(out) => {
            let doc = pretty(&out.json);
            if let Some(p) = &opts.out {
                if let Err(e) = write_atomic(p, &doc) {
                    let _ = writeln!(stderr, "error: {e}");
                    return exit_code(&e);
                }
            }
            let shown = match opts.format {
                Format::Json => doc,
                Format::Text => out.text,
            };
            let _ = stdout.write_all(shown.as_bytes());
            if out.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let cli = Cli::parse();
    run(&cli, &mut std::io::stdout(), &mut std::io::stderr())
}
