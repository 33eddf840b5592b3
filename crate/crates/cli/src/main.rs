use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use projmod::connection::{
    covariant_coordinate_commutator, curvature, dend_check, gauge_residual, gauge_transform,
    Connection, DerivativeEndomorphism, Gauge,
};
use projmod::idempotent::{is_idempotent, path_conjugator, retract_idempotent, similarity_witness};
use projmod::io;
use projmod::scenario::{self, Record, ScenarioConfig};
use projmod::{
    random, AlgebraElement, Backend, BackendConfig, BackendKind, Derivation, GroupElement,
    Idempotent, MatrixElement, ProjectiveModule,
};

#[derive(Parser)]
#[command(
    name = "projmod",
    version,
    about = "Projective modules, connections and extension cocycles over torus and matrix algebras"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Algebra backend used when no input file fixes one [default: torus].
    #[arg(long, global = true, value_enum)]
    backend: Option<Kind>,
    /// Torus dimension, or matrix size for the matrix backend.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Rotation angle of the noncommutative torus.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Band of sampled and random elements.
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Hard cap on stored Fourier degree.
    #[arg(long, global = true)]
    max_degree: Option<usize>,
    /// Tolerance for checks; also the backend tolerance of constructed data.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Input file.
    #[arg(long = "in", global = true)]
    input: Option<PathBuf>,
    /// Output file for produced data (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print reports as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum Kind {
    Torus,
    Nctorus,
    Matrix,
}

#[derive(Subcommand)]
enum Command {
    /// Idempotent checks, retraction, similarity witnesses and path lifting.
    Idem {
        #[command(subcommand)]
        op: IdemOp,
    },
    /// Connections on a module.
    Conn {
        #[command(subcommand)]
        op: ConnOp,
    },
    /// Lifts, factor systems and the extension bracket.
    Ext {
        #[arg(value_enum)]
        test: ExtTest,
        /// Module file; defaults to the standard module of the backend.
        #[arg(long)]
        module: Option<PathBuf>,
        /// Translation vectors, e.g. "0.05,0;0,0.07".
        #[arg(long)]
        translations: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Runs a named verification suite.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(scenario::SCENARIOS))]
        name: String,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Example generators.
    Gen {
        #[command(subcommand)]
        op: GenOp,
    },
}

#[derive(Subcommand)]
enum IdemOp {
    /// Reports `|p^2 - p|` for the matrix in --in.
    Check,
    /// Retracts the matrix in --in onto an idempotent.
    Retract,
    /// Similarity witness conjugating --target onto --in.
    Similar {
        #[arg(long)]
        target: PathBuf,
    },
    /// Conjugator along a path: a file {"path": [matrix, ...]} in --in, or
    /// the translates of the idempotent in --in by t v, 0 <= t <= 1.
    Path {
        #[arg(long)]
        translate: Option<String>,
        #[arg(long, default_value_t = 32)]
        steps: usize,
    },
}

#[derive(Subcommand)]
enum ConnOp {
    /// Writes the Levi-Civita connection of the module in --in.
    Levi,
    /// Gauge-transforms the connection in --in by a corner element.
    Gauge {
        /// Matrix file of g; a random `p + small` corner unit when absent.
        #[arg(long)]
        gauge: Option<PathBuf>,
    },
    /// Commutators of covariant coordinates with right multiplications.
    Covcoord,
    /// Checks derivative endomorphisms of the connection in --in.
    Dend,
    /// Curvature of the connection in --in.
    Curv {
        #[arg(long, default_value_t = 1)]
        i: usize,
        #[arg(long, default_value_t = 2)]
        j: usize,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum ExtTest {
    Cocycle,
    Assoc,
    Crossed,
    Bracket,
    Jacobi,
}

#[derive(Subcommand)]
enum GenOp {
    /// Bott projector of a degree-k map from the 2-torus to the sphere.
    Bott {
        #[arg(long, default_value_t = 1)]
        k: i64,
        #[arg(long)]
        band: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

impl Global {
    fn backend(&self) -> Result<Backend> {
        let mut cfg = match self.backend.unwrap_or(Kind::Torus) {
            Kind::Torus => (*BackendConfig::default_torus()).clone(),
            Kind::Nctorus => (*BackendConfig::default_nctorus()).clone(),
            Kind::Matrix => (*BackendConfig::default_matrix()).clone(),
        };
        if let Some(d) = self.dim {
            cfg.dim = d;
        }
        if let Some(t) = self.theta {
            cfg.theta = t;
        }
        if let Some(n) = self.degree {
            cfg.degree = n;
        }
        match self.max_degree {
            Some(m) => cfg.max_degree = m,
            None if self.degree.is_some() && cfg.kind != BackendKind::Matrix => {
                cfg.max_degree = cfg.max_degree.max(2 * cfg.degree)
            }
            None => {}
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        Ok(cfg.validated()?)
    }

    fn read_input(&self) -> Result<String> {
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| anyhow!("--in is required"))?;
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }

    fn emit_data(&self, value: &impl serde::Serialize) -> Result<()> {
        let text = io::to_string(value)?;
        match &self.out {
            Some(path) => {
                fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
            }
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }

    /// Prints a report: JSON with --json, else one line per record.
    fn emit_report(&self, report: &Value, lines: &[String]) -> Result<()> {
        if self.json {
            println!("{}", serde_json::to_string_pretty(report)?);
        } else {
            for l in lines {
                println!("{l}");
            }
        }
        Ok(())
    }
}

fn record_line(r: &Record) -> String {
    let status = if r.pass { "PASS" } else { "FAIL" };
    let mut line = format!(
        "{status} {:<32} max residual {:.3e} (tol {:.0e}, {} samples)",
        r.name, r.max_residual, r.tolerance, r.samples
    );
    if let Some(e) = &r.error {
        line.push_str(&format!(": {e}"));
    }
    line
}

/// Reads a matrix from a matrix, idempotent or module file.
fn load_matrix(text: &str, ctx: Option<&Backend>) -> Result<MatrixElement> {
    let v: Value = serde_json::from_str(text)?;
    if v.get("p").is_some() {
        let m: io::ModuleJson = serde_json::from_value(v)?;
        return Ok(io::module_from_json(&m)?.p().clone());
    }
    let m: io::MatrixJson = serde_json::from_value(v)?;
    Ok(io::matrix_from_json(&m, ctx)?)
}

fn load_module(text: &str) -> Result<ProjectiveModule> {
    let v: Value = serde_json::from_str(text)?;
    if v.get("module").is_some() {
        let c: io::ConnectionJson = serde_json::from_value(v)?;
        return Ok(io::connection_from_json(&c)?.module);
    }
    if v.get("p").is_some() {
        return Ok(io::module_from_json(&serde_json::from_value(v)?)?);
    }
    Ok(ProjectiveModule::new(Idempotent::new(load_matrix(
        text, None,
    )?)?))
}

/// A connection file, or a module file read as its Levi-Civita connection.
fn load_connection(text: &str) -> Result<Connection> {
    let v: Value = serde_json::from_str(text)?;
    if v.get("module").is_some() {
        return Ok(io::connection_from_json(&serde_json::from_value(v)?)?);
    }
    Ok(Connection::levi_civita(&load_module(text)?))
}

fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number '{x}'"))
        })
        .collect()
}

fn parse_translations(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .filter(|x| !x.trim().is_empty())
        .map(parse_vector)
        .collect()
}

fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Idem { op } => idem(g, op),
        Command::Conn { op } => conn(g, op),
        Command::Ext {
            test,
            module,
            translations,
            samples,
        } => ext(g, *test, module.as_ref(), translations.as_deref(), *samples),
        Command::Scenario { name, samples } => {
            let backend = if g.backend_flags_given() {
                Some(g.backend()?)
            } else {
                None
            };
            let cfg = ScenarioConfig {
                backend,
                seed: g.seed,
                samples: *samples,
            };
            let report = scenario::run_scenario(name, &cfg)?;
            let value = serde_json::to_value(&report)?;
            if let Some(path) = &g.out {
                fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?;
            }
            let mut lines = vec![format!(
                "scenario {name} ({:?} backend, seed {})",
                report.backend.kind, report.seed
            )];
            lines.extend(report.records.iter().map(record_line));
            lines.push(if report.pass {
                "all checks passed".into()
            } else {
                "some checks failed".into()
            });
            g.emit_report(&value, &lines)?;
            Ok(report.pass)
        }
        Command::Gen {
            op: GenOp::Bott { k, band },
        } => {
            let b = g.backend()?;
            if b.kind != BackendKind::Torus || b.dim != 2 {
                bail!("the Bott projector lives over the 2-torus backend");
            }
            let p = projmod::generate::gen_bott(&b, *k, band.unwrap_or(b.degree))?;
            g.emit_data(&io::module_to_json(&ProjectiveModule::new(p)))?;
            Ok(true)
        }
    }
}

impl Global {
    fn backend_flags_given(&self) -> bool {
        self.backend.is_some()
            || self.dim.is_some()
            || self.theta.is_some()
            || self.degree.is_some()
            || self.max_degree.is_some()
            || self.tol.is_some()
    }
}

fn idem(g: &Global, op: &IdemOp) -> Result<bool> {
    let text = g.read_input()?;
    let tol_ctx = |m: MatrixElement| -> Result<MatrixElement> {
        // --tol overrides the tolerance stored in the file
        Ok(match g.tol {
            Some(t) => {
                let b = (**m.backend()).clone().with_tol(t).validated()?;
                let entries = m
                    .entries()
                    .iter()
                    .map(|e| retag(e, &b))
                    .collect::<Result<Vec<_>>>()?;
                MatrixElement::from_entries(&b, m.n(), entries)?
            }
            None => m,
        })
    };
    match op {
        IdemOp::Check => {
            let m = tol_ctx(load_matrix(&text, None)?)?;
            let (ok, residual) = is_idempotent(&m);
            let report = json!({"test": "idempotent", "residual": residual, "tolerance": m.backend().tol, "pass": ok});
            g.emit_report(
                &report,
                &[format!(
                    "{} |p^2 - p| = {residual:.3e} (tol {:.0e})",
                    if ok { "PASS" } else { "FAIL" },
                    m.backend().tol
                )],
            )?;
            Ok(ok)
        }
        IdemOp::Retract => {
            let m = tol_ctx(load_matrix(&text, None)?)?;
            let p = retract_idempotent(&m)?;
            eprintln!("retracted to residual {:.3e}", p.residual());
            g.emit_data(&io::idempotent_to_json(&p))?;
            Ok(true)
        }
        IdemOp::Similar { target } => {
            let p = Idempotent::new(tol_ctx(load_matrix(&text, None)?)?)?;
            let qt = fs::read_to_string(target)
                .with_context(|| format!("reading {}", target.display()))?;
            let q = Idempotent::new(load_matrix(&qt, Some(p.backend()))?)?;
            let w = similarity_witness(&p, &q)?;
            let pass = w.residual <= p.backend().tol;
            eprintln!("witness residual |s q s^-1 - p| = {:.3e}", w.residual);
            if g.out.is_some() || !g.json {
                g.emit_data(&json!({"s": io::matrix_to_json(&w.s), "residual": w.residual}))?;
            } else {
                println!(
                    "{}",
                    json!({"test": "similarity", "residual": w.residual, "pass": pass})
                );
            }
            Ok(pass)
        }
        IdemOp::Path { translate, steps } => {
            let path: Vec<Idempotent> = match translate {
                Some(v) => {
                    let p = Idempotent::new(tol_ctx(load_matrix(&text, None)?)?)?;
                    let v = parse_vector(v)?;
                    (0..=*steps)
                        .map(|j| {
                            let t = j as f64 / *steps as f64;
                            let gt = GroupElement::translation(
                                p.backend(),
                                &v.iter().map(|x| x * t).collect::<Vec<_>>(),
                            )?;
                            Ok(Idempotent::new(gt.apply_matrix(p.matrix())?)?)
                        })
                        .collect::<Result<_>>()?
                }
                None => {
                    let v: Value = serde_json::from_str(&text)?;
                    let items = v
                        .get("path")
                        .and_then(|x| x.as_array())
                        .ok_or_else(|| anyhow!("path file needs a \"path\" array"))?;
                    let mut out: Vec<Idempotent> = Vec::new();
                    for item in items {
                        let m: io::MatrixJson = serde_json::from_value(item.clone())?;
                        let ctx = out.first().map(|p| p.backend().clone());
                        out.push(Idempotent::new(io::matrix_from_json(&m, ctx.as_ref())?)?);
                    }
                    out
                }
            };
            let pc = path_conjugator(&path)?;
            let tol = path[0].backend().tol * (path.len().saturating_sub(1)).max(1) as f64;
            let pass = pc.residual <= tol;
            eprintln!(
                "conjugator residual {:.3e} over {} steps",
                pc.residual,
                path.len() - 1
            );
            g.emit_data(&json!({"g": io::matrix_to_json(&pc.g), "residual": pc.residual}))?;
            Ok(pass)
        }
    }
}

fn retag(e: &AlgebraElement, b: &Backend) -> Result<AlgebraElement> {
    Ok(io::element_from_json(
        &io::ElementJson {
            backend: None,
            ..io::element_to_json(e)
        },
        Some(b),
    )?)
}

fn test_vectors(e: &ProjectiveModule, seed: u64, count: u64) -> Result<Vec<projmod::ModuleVector>> {
    let band = if e.backend().is_fourier() {
        e.backend().degree.min(4)
    } else {
        0
    };
    let mut vs = e.generators()?;
    for i in 0..count {
        let v = random::vector(e.backend(), e.n(), band, 1.0, &mut random::rng(seed, i))?;
        vs.push(e.project_vector(&v)?);
    }
    Ok(vs)
}

fn test_elements(b: &Backend, seed: u64, count: u64) -> Result<Vec<AlgebraElement>> {
    let band = if b.is_fourier() { b.degree.min(4) } else { 0 };
    (0..count)
        .map(|i| {
            Ok(random::element(
                b,
                band,
                1.0,
                &mut random::rng(seed, 1000 + i),
            )?)
        })
        .collect()
}

fn conn(g: &Global, op: &ConnOp) -> Result<bool> {
    match op {
        ConnOp::Levi => {
            let e = load_module(&g.read_input()?)?;
            g.emit_data(&io::connection_to_json(&Connection::levi_civita(&e)))?;
            Ok(true)
        }
        ConnOp::Gauge { gauge } => {
            let c = load_connection(&g.read_input()?)?;
            let e = c.module.clone();
            let gm = match gauge {
                Some(path) => load_matrix(&fs::read_to_string(path)?, Some(e.backend()))?,
                None => {
                    let band = if e.backend().is_fourier() {
                        e.backend().degree.min(4)
                    } else {
                        0
                    };
                    let h =
                        random::matrix(e.backend(), e.n(), band, 0.2, &mut random::rng(g.seed, 0))?;
                    e.p() + &e.p().mul3(&h, e.p())?
                }
            };
            let gauge = Gauge::new(&gm, &e)?;
            let out = gauge_transform(&c, &gauge)?;
            let vs = test_vectors(&e, g.seed, 20)?;
            let r = gauge_residual(&c, &out, &gauge, &vs)?;
            let tol = g.tol.unwrap_or(e.backend().tol);
            eprintln!(
                "|nabla'(s) - g^-1 nabla(g s)| = {r:.3e} on {} vectors",
                vs.len()
            );
            g.emit_data(&io::connection_to_json(&out))?;
            Ok(r <= tol)
        }
        ConnOp::Covcoord => {
            let (c, gens) = match &g.input {
                Some(_) => {
                    let c = load_connection(&g.read_input()?)?;
                    let gens = test_elements(c.module.backend(), g.seed, 4)?;
                    (c, gens)
                }
                None => {
                    let b = g.backend()?;
                    let e = ProjectiveModule::free(&b, 1)?;
                    let gens = if b.is_fourier() && b.dim == 2 {
                        [[1, 0], [-1, 0], [0, 1], [0, -1]]
                            .iter()
                            .map(|k| AlgebraElement::mode(&b, k, projmod::Complex64::new(1.0, 0.0)))
                            .collect::<projmod::Result<Vec<_>>>()?
                    } else {
                        test_elements(&b, g.seed, 4)?
                    };
                    (Connection::levi_civita(&e), gens)
                }
            };
            let vs = test_vectors(&c.module, g.seed, 4)?;
            let mut worst: f64 = 0.0;
            for a in &gens {
                worst = worst.max(covariant_coordinate_commutator(&c, a, &gens, &vs)?);
            }
            let tol = g.tol.unwrap_or(1e-9);
            let pass = worst <= tol;
            let report = json!({"test": "covcoord", "samples": gens.len(), "max_residual": worst, "tolerance": tol, "pass": pass});
            g.emit_report(
                &report,
                &[format!(
                    "{} max |[rho^(a), rho(b)] s| = {worst:.3e} (tol {tol:.0e})",
                    if pass { "PASS" } else { "FAIL" }
                )],
            )?;
            Ok(pass)
        }
        ConnOp::Dend => {
            let c = load_connection(&g.read_input()?)?;
            let e = c.module.clone();
            let gens = test_elements(e.backend(), g.seed, 3)?;
            let vs = test_vectors(&e, g.seed, 3)?;
            let tol = g.tol.unwrap_or(1e-10);
            let mut rows = Vec::new();
            for j in 0..e.backend().flow_dim() {
                let phi = DerivativeEndomorphism::from_connection(&c, &Derivation::Basis(j))?;
                rows.push((
                    format!("nabla_D{}", j + 1),
                    dend_check(&phi, &e, &gens, &vs, tol)?,
                ));
            }
            let rho = DerivativeEndomorphism::right_multiplication(&e, &gens[0]);
            rows.push((
                "right_multiplication".into(),
                dend_check(&rho, &e, &gens, &vs, tol)?,
            ));
            let pass = rows.iter().all(|(_, r)| r.pass);
            let report = json!({
                "test": "dend",
                "tolerance": tol,
                "pass": pass,
                "checks": rows.iter().map(|(n, r)| json!({"name": n, "relation": r.relation, "membership": r.membership, "pass": r.pass})).collect::<Vec<_>>(),
            });
            let lines: Vec<String> = rows
                .iter()
                .map(|(n, r)| {
                    format!(
                        "{} {n:<22} relation {:.3e} membership {:.3e}",
                        if r.pass { "PASS" } else { "FAIL" },
                        r.relation,
                        r.membership
                    )
                })
                .collect();
            g.emit_report(&report, &lines)?;
            Ok(pass)
        }
        ConnOp::Curv { i, j } => {
            let c = load_connection(&g.read_input()?)?;
            let m = c.module.backend().flow_dim();
            if *i == 0 || *j == 0 || *i > m || *j > m {
                bail!("derivation indices run from 1 to {m}");
            }
            let vs = test_vectors(&c.module, g.seed, 2)?;
            let az = test_elements(c.module.backend(), g.seed, vs.len() as u64)?;
            let tests: Vec<_> = vs.into_iter().zip(az).collect();
            let r = curvature(&c, i - 1, j - 1, &tests)?;
            let tol = g.tol.unwrap_or(1e-9);
            eprintln!("A-linearity residual {:.3e}", r.linearity);
            g.emit_data(
                &json!({"curvature": io::matrix_to_json(&r.matrix), "linearity": r.linearity}),
            )?;
            Ok(r.linearity <= tol)
        }
    }
}

fn ext(
    g: &Global,
    test: ExtTest,
    module: Option<&PathBuf>,
    translations: Option<&str>,
    samples: Option<usize>,
) -> Result<bool> {
    let e = match module {
        Some(path) => load_module(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?,
        None => scenario::standard_module(&g.backend()?, g.seed)?,
    };
    let trans = translations.map(parse_translations).transpose()?;
    let (suite, name) = match test {
        ExtTest::Cocycle => ("cocycle", "cocycle_identity"),
        ExtTest::Assoc => ("cocycle", "associativity"),
        ExtTest::Crossed => ("crossed", "crossed_law"),
        ExtTest::Bracket => ("bracket", "bracket_preservation"),
        ExtTest::Jacobi => ("bracket", "jacobi"),
    };
    let records = scenario::run_suite_on(suite, &e, trans.as_deref(), g.seed, samples)?;
    let r = records
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| anyhow!("suite {suite} has no check {name}"))?;
    let tol = g.tol.unwrap_or(r.tolerance);
    let pass = r.error.is_none() && r.max_residual <= tol;
    let report = json!({"test": name, "samples": r.samples, "max_residual": r.max_residual, "tolerance": tol, "pass": pass});
    let mut line = format!(
        "{} {name} max residual {:.3e} (tol {tol:.0e}, {} samples)",
        if pass { "PASS" } else { "FAIL" },
        r.max_residual,
        r.samples
    );
    if let Some(err) = &r.error {
        line.push_str(&format!(": {err}"));
    }
    g.emit_report(&report, &[line])?;
    Ok(pass)
}
