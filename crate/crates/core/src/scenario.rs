//! Named verification suites with JSON reports.
//!
//! Every suite draws its random inputs from per-sample ChaCha streams, so a
//! report depends only on the seed and the backend. Tolerances are fixed per
//! record; the oracle suite reruns everything on dense matrices with each
//! tolerance tightened to `ORACLE_TOL`.

use rayon::prelude::*;
use serde::Serialize;

use crate::automorphism::{Automorphism, GroupElement};
use crate::backend::{Backend, BackendConfig, BackendKind};
use crate::connection::{
    connection_distance, covariant_coordinate_commutator, dend_check, gamma_of_derivation,
    gamma_residuals, gauge_residual, gauge_transform, Connection, DerivativeEndomorphism, Gauge,
    OneForm,
};
use crate::derivation::Derivation;
use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::extension::{
    bracket_preservation_residual, cocycle_residual, crossed_law_residual, domega, jacobi_residual,
    t1se, ExtensionElement, FactorSystem,
};
use crate::generate::{gen_bott, random_projection};
use crate::idempotent::{
    corner_invert, normalize_iso_pair, path_conjugator, retract_idempotent, similarity_witness,
    stabilize_conjugator, Idempotent,
};
use crate::matrix::MatrixElement;
use crate::projective::{ModuleVector, ProjectiveModule};
use crate::random;

pub const SCENARIOS: [&str; 10] = [
    "prop11",
    "corner",
    "stabilize",
    "lemma44",
    "gauge",
    "covcoord",
    "cocycle",
    "bracket",
    "crossed",
    "oracle",
];

/// Ceiling applied to every tolerance when rerunning on dense matrices.
pub const ORACLE_TOL: f64 = 1e-10;

/// Translations of the cocycle suite.
pub const COCYCLE_TRANSLATIONS: [[f64; 2]; 3] = [[0.05, 0.0], [0.0, 0.07], [0.03, 0.04]];

/// One verified identity.
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub name: String,
    /// The identity being checked, in words.
    pub reference: String,
    pub samples: usize,
    /// `null` in JSON when a step failed before producing a residual.
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Record {
    pub fn new(name: &str, reference: &str, tolerance: f64, outcome: Result<Vec<f64>>) -> Record {
        match outcome {
            Ok(rs) => {
                let max = rs.iter().copied().fold(0.0, f64::max);
                let finite = rs.iter().all(|r| r.is_finite());
                Record {
                    name: name.into(),
                    reference: reference.into(),
                    samples: rs.len(),
                    max_residual: max,
                    tolerance,
                    pass: finite && max <= tolerance,
                    error: None,
                }
            }
            Err(e) => Record {
                name: name.into(),
                reference: reference.into(),
                samples: 0,
                max_residual: f64::INFINITY,
                tolerance,
                pass: false,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub backend: BackendConfig,
    pub seed: u64,
    pub pass: bool,
    pub records: Vec<Record>,
}

impl ScenarioReport {
    fn new(scenario: &str, backend: &Backend, seed: u64, mut records: Vec<Record>) -> Self {
        records.sort_by(|a, b| a.name.cmp(&b.name));
        ScenarioReport {
            scenario: scenario.into(),
            backend: (**backend).clone(),
            seed,
            pass: records.iter().all(|r| r.pass),
            records,
        }
    }
}

/// Run parameters. `backend: None` picks the standard backend of the suite.
#[derive(Clone, Debug, Default)]
pub struct ScenarioConfig {
    pub backend: Option<Backend>,
    pub seed: u64,
    /// Overrides every sample count, for quick runs.
    pub samples: Option<usize>,
}

/// Shared state of one suite run.
struct Suite {
    b: Backend,
    seed: u64,
    samples: Option<usize>,
    cap: f64,
}

impl Suite {
    fn tol(&self, t: f64) -> f64 {
        t.min(self.cap)
    }

    fn count(&self, standard: usize) -> usize {
        self.samples.unwrap_or(standard).max(1)
    }

    fn rng(&self, tag: u64, i: u64) -> rand_chacha::ChaCha8Rng {
        random::rng(self.seed, tag * 1_000_000 + i)
    }

    /// Band of random test data: the backend band, capped so products of
    /// samples with the standard idempotent stay well inside the degree cap.
    fn band(&self) -> usize {
        if self.b.is_fourier() {
            self.b.degree.min(4)
        } else {
            0
        }
    }

    fn record(&self, name: &str, reference: &str, tol: f64, outcome: Result<Vec<f64>>) -> Record {
        Record::new(name, reference, self.tol(tol), outcome)
    }

    fn element(&self, tag: u64, i: u64, norm: f64) -> Result<AlgebraElement> {
        random::element(&self.b, self.band(), norm, &mut self.rng(tag, i))
    }

    fn vectors(&self, e: &ProjectiveModule, tag: u64, count: usize) -> Result<Vec<ModuleVector>> {
        (0..count as u64)
            .map(|i| {
                let v = random::vector(&self.b, e.n(), self.band(), 1.0, &mut self.rng(tag, i))?;
                e.project_vector(&v)
            })
            .collect()
    }

    /// `p + p h p` with `|h| = small`.
    fn corner_unit(
        &self,
        e: &ProjectiveModule,
        tag: u64,
        i: u64,
        small: f64,
    ) -> Result<MatrixElement> {
        let h = random::matrix(&self.b, e.n(), self.band(), small, &mut self.rng(tag, i))?;
        let php = e.p().mul3(&h, e.p())?;
        Ok(e.p() + &php)
    }

    fn flow_vector(&self, tag: u64, i: u64) -> Vec<f64> {
        let mut r = self.rng(tag, i);
        (0..self.b.flow_dim())
            .map(|_| random::uniform(&mut r, -1.0, 1.0))
            .collect()
    }
}

/// The standard module of a backend: the degree-one Bott projector on the
/// 2-torus, a random rank-`d` projection in `M_2(M_d(C))` for matrices, and
/// the rank-one free summand `diag(1, 0)` elsewhere.
pub fn standard_module(b: &Backend, seed: u64) -> Result<ProjectiveModule> {
    let p = match b.kind {
        BackendKind::Torus if b.dim == 2 => gen_bott(b, 1, b.degree)?,
        BackendKind::Matrix => random_projection(b, 2, b.dim, &mut random::rng(seed, u64::MAX))?,
        _ => gen_bott(b, 0, b.degree.max(crate::generate::MIN_BOTT_BAND))?,
    };
    Ok(ProjectiveModule::new(p))
}

fn default_backend(name: &str) -> Backend {
    match name {
        "covcoord" => BackendConfig::default_nctorus(),
        "oracle" => BackendConfig::default_matrix(),
        _ => BackendConfig::default_torus(),
    }
}

pub fn run_scenario(name: &str, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    if !SCENARIOS.contains(&name) {
        return Err(Error::Format(format!(
            "unknown scenario '{name}', expected one of {}",
            SCENARIOS.join(", ")
        )));
    }
    let b = cfg.backend.clone().unwrap_or_else(|| default_backend(name));
    let suite = Suite {
        b: b.clone(),
        seed: cfg.seed,
        samples: cfg.samples,
        cap: f64::INFINITY,
    };
    let records = if name == "oracle" {
        if b.kind != BackendKind::Matrix {
            return Err(Error::Unsupported(
                "the oracle suite runs on the matrix backend".into(),
            ));
        }
        let oracle = Suite {
            cap: ORACLE_TOL,
            ..suite
        };
        let mut all = Vec::new();
        for sub in &SCENARIOS[..9] {
            for mut r in run_suite(sub, &oracle)? {
                r.name = format!("{sub}/{}", r.name);
                all.push(r);
            }
        }
        all
    } else {
        run_suite(name, &suite)?
    };
    Ok(ScenarioReport::new(name, &b, cfg.seed, records))
}

fn run_suite(name: &str, s: &Suite) -> Result<Vec<Record>> {
    run_suite_with(name, s, None, None)
}

fn run_suite_with(
    name: &str,
    s: &Suite,
    module: Option<&ProjectiveModule>,
    translations: Option<&[Vec<f64>]>,
) -> Result<Vec<Record>> {
    match name {
        "covcoord" => return Ok(covcoord(s)),
        "crossed" => return Ok(vec![crossed(s)]),
        _ => {}
    }
    let e = match module {
        Some(e) => e.clone(),
        None => standard_module(&s.b, s.seed)?,
    };
    Ok(match name {
        "prop11" => prop11(s, &e),
        "corner" => corner(s, &e),
        "stabilize" => stabilize(s, &e),
        "lemma44" => lemma44(s, &e),
        "gauge" => gauge(s, &e),
        "cocycle" => {
            let vs: Vec<Vec<f64>> = match translations {
                Some(t) => t.iter().map(|v| flow_shift(&s.b, v)).collect(),
                None => COCYCLE_TRANSLATIONS
                    .iter()
                    .map(|v| flow_shift(&s.b, v))
                    .collect(),
            };
            cocycle(s, &e, &vs)
        }
        "bracket" => bracket(s, &e),
        _ => unreachable!("checked against SCENARIOS"),
    })
}

/// Runs one suite (any scenario but `oracle`) on a given module, with the
/// cocycle suite's translations optionally replaced.
pub fn run_suite_on(
    name: &str,
    module: &ProjectiveModule,
    translations: Option<&[Vec<f64>]>,
    seed: u64,
    samples: Option<usize>,
) -> Result<Vec<Record>> {
    if !SCENARIOS[..9].contains(&name) {
        return Err(Error::Format(format!("unknown suite '{name}'")));
    }
    let s = Suite {
        b: module.backend().clone(),
        seed,
        samples,
        cap: f64::INFINITY,
    };
    let mut records = run_suite_with(name, &s, Some(module), translations)?;
    records.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(records)
}

/// A 2-vector as a shift of the backend's flow.
fn flow_shift(b: &Backend, v: &[f64]) -> Vec<f64> {
    (0..b.flow_dim())
        .map(|j| v.get(j).copied().unwrap_or(0.0))
        .collect()
}

fn par_samples<T: Send>(
    count: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..count as u64).into_par_iter().map(f).collect()
}

fn split2(r: Result<Vec<(f64, f64)>>) -> (Result<Vec<f64>>, Result<Vec<f64>>) {
    match r {
        Ok(v) => (
            Ok(v.iter().map(|x| x.0).collect()),
            Ok(v.iter().map(|x| x.1).collect()),
        ),
        Err(e) => (Err(e.clone()), Err(e)),
    }
}

/// Perturbed conjugates `q = u p u^{-1}` and their similarity witnesses.
fn prop11(s: &Suite, e: &ProjectiveModule) -> Vec<Record> {
    let p = e.idempotent();
    let n = s.count(100);
    let out = par_samples(n, |i| {
        let band = if s.b.is_fourier() { s.b.degree } else { 0 };
        let h = random::matrix(&s.b, e.n(), band, 0.1, &mut s.rng(1, i))?;
        let u = &MatrixElement::identity(&s.b, e.n()) + &h;
        let u_inv = u.invert()?;
        let q = retract_idempotent(&u.mul3(e.p(), &u_inv)?)?;
        let w = similarity_witness(p, &q)?;
        let intertwine = w.s.mul(q.matrix())?.dist(&e.p().mul(&w.s)?);
        Ok((w.residual, intertwine))
    });
    let (conj, inter) = split2(out);
    vec![
        s.record(
            "witness_conjugation",
            "s q s^-1 = p for q = u p u^-1",
            1e-8,
            conj,
        ),
        s.record("witness_intertwines", "s q = p s", 1e-12, inter),
    ]
}

/// Inversion in the corner algebra `p M_n(A) p`.
fn corner(s: &Suite, e: &ProjectiveModule) -> Vec<Record> {
    let p = e.idempotent();
    let out = par_samples(s.count(100), |i| {
        let a = s.corner_unit(e, 2, i, 0.3)?;
        let b = corner_invert(&a, p)?;
        let unit = a.mul(&b)?.dist(e.p());
        let back = corner_invert(&b, p)?.dist(&a);
        Ok((unit, back))
    });
    let (unit, back) = split2(out);
    vec![
        s.record("corner_inverse", "a corner_invert(a) = p", 1e-8, unit),
        s.record(
            "double_inverse",
            "corner_invert(corner_invert(a)) = a",
            1e-8,
            back,
        ),
    ]
}

/// Stabilization of the isomorphism between `p` and a translate of it,
/// with the isomorphism obtained by lifting the translation path.
fn stabilize(s: &Suite, e: &ProjectiveModule) -> Vec<Record> {
    let steps = 32;
    let run = || -> Result<(f64, f64, f64, f64)> {
        let v = flow_shift(&s.b, &[0.1, 0.0]);
        let path = (0..=steps)
            .map(|j| {
                let t = j as f64 / steps as f64;
                let g =
                    GroupElement::translation(&s.b, &v.iter().map(|x| x * t).collect::<Vec<_>>())?;
                Idempotent::new(g.apply_matrix(e.p())?)
            })
            .collect::<Result<Vec<_>>>()?;
        let q = path.last().expect("nonempty path").clone();
        let pc = path_conjugator(&path)?;
        // g p g^-1 = q, so x = g p and y = g^-1 form an isomorphism p -> q
        let x = pc.g.mul(e.p())?;
        let (xn, yn) = normalize_iso_pair(&x, &pc.g_inv, e.idempotent(), &q)?;
        let st = stabilize_conjugator(&xn, &yn, e.idempotent(), &q)?;
        let one = MatrixElement::identity(&s.b, 2 * e.n());
        let alpha = st.alpha.mul(&st.alpha)?.dist(&one);
        let beta = st.beta.mul(&st.beta)?.dist(&one);
        Ok((pc.residual, alpha, beta, st.residual))
    };
    let out = run();
    let pick = |f: fn(&(f64, f64, f64, f64)) -> f64| {
        out.as_ref().map(|t| vec![f(t)]).map_err(|e| e.clone())
    };
    vec![
        s.record(
            "path_conjugator",
            "g p g^-1 = translate of p along 32 steps",
            1e-9 * steps as f64,
            pick(|t| t.0),
        ),
        s.record("alpha_involution", "alpha^2 = 1", 1e-12, pick(|t| t.1)),
        s.record("beta_involution", "beta^2 = 1", 1e-12, pick(|t| t.2)),
        s.record(
            "stabilized_conjugation",
            "z q~ z^-1 = p~",
            1e-7,
            pick(|t| t.3),
        ),
    ]
}

/// A connection with a random corner offset, for checks that must hold for
/// every connection and not just Levi-Civita.
fn random_connection(s: &Suite, e: &ProjectiveModule, tag: u64) -> Result<Connection> {
    let values = (0..s.b.flow_dim() as u64)
        .map(|j| {
            let h = random::matrix(&s.b, e.n(), s.band(), 1.0, &mut s.rng(tag, j))?;
            e.p().mul3(&h, e.p())
        })
        .collect::<Result<Vec<_>>>()?;
    Connection::new(e, OneForm { values })
}

/// `gamma(D)` identities, membership, Leibniz and the two forms of the
/// Levi-Civita derivative, plus the derivative-endomorphism relation.
fn lemma44(s: &Suite, e: &ProjectiveModule) -> Vec<Record> {
    let m = s.b.flow_dim();
    let n = s.count(20);
    let p = e.idempotent();
    let gamma = (0..m)
        .map(|j| {
            let d = Derivation::Basis(j);
            let g = gamma_of_derivation(&d, p)?;
            let r = gamma_residuals(&g, &d.apply_matrix(e.p())?, p)?;
            Ok(r.commutator.max(r.inner).max(r.outer))
        })
        .collect::<Result<Vec<f64>>>();
    let lc = Connection::levi_civita(e);
    let setup = || -> Result<(Connection, Vec<ModuleVector>, Vec<AlgebraElement>)> {
        let rc = random_connection(s, e, 40)?;
        let vs = s.vectors(e, 41, n)?;
        let az = (0..n as u64)
            .map(|i| s.element(42, i, 1.0))
            .collect::<Result<Vec<_>>>()?;
        Ok((rc, vs, az))
    };
    let per_sample =
        |f: &(dyn Fn(&Connection, &Derivation, &ModuleVector, &AlgebraElement) -> Result<f64>
               + Sync)| {
            let (rc, vs, az) = setup()?;
            let jobs: Vec<(usize, usize)> =
                (0..m).flat_map(|j| (0..n).map(move |i| (j, i))).collect();
            jobs.par_iter()
                .map(|&(j, i)| {
                    let d = Derivation::Basis(j);
                    Ok(f(&lc, &d, &vs[i], &az[i])?.max(f(&rc, &d, &vs[i], &az[i])?))
                })
                .collect::<Result<Vec<f64>>>()
        };
    let escape = per_sample(&|c, d, v, _| c.escape_residual(d, v));
    let leibniz = per_sample(&|c, d, v, a| c.leibniz_residual(d, v, a));
    let forms = (|| {
        let vs = s.vectors(e, 41, n)?;
        let jobs: Vec<(usize, usize)> = (0..m).flat_map(|j| (0..n).map(move |i| (j, i))).collect();
        jobs.par_iter()
            .map(|&(j, i)| {
                let d = Derivation::Basis(j);
                Ok(lc
                    .covariant_derivative(&d, &vs[i])?
                    .dist(&lc.covariant_derivative_gamma_form(&d, &vs[i])?))
            })
            .collect::<Result<Vec<f64>>>()
    })();
    let dend = (|| {
        let vs = s.vectors(e, 43, 4)?;
        let gens = (0..4)
            .map(|i| s.element(44, i, 1.0))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::new();
        for j in 0..m {
            let d = Derivation::Basis(j);
            let nabla = DerivativeEndomorphism::from_connection(&lc, &d)?;
            let r = dend_check(&nabla, e, &gens, &vs, f64::INFINITY)?;
            out.push(r.relation.max(r.membership));
        }
        for a in &gens {
            let rho = DerivativeEndomorphism::right_multiplication(e, a);
            let r = dend_check(&rho, e, &gens, &vs, f64::INFINITY)?;
            out.push(r.relation.max(r.membership));
        }
        Ok(out)
    })();
    vec![
        s.record(
            "gamma_identities",
            "[p, gamma(D)] = D.p, p (D.p) p = 0, (1-p)(D.p)(1-p) = 0",
            1e-10,
            gamma,
        ),
        s.record("covariant_membership", "(1-p) nabla_D s = 0", 1e-9, escape),
        s.record(
            "leibniz",
            "nabla_D(s a) = nabla_D(s) a + s D(a)",
            1e-9,
            leibniz,
        ),
        s.record(
            "levi_civita_forms",
            "p D(s) = gamma(D) s + D(s) on E",
            1e-10,
            forms,
        ),
        s.record(
            "derivative_endomorphisms",
            "[phi, rho(a)] = rho(D a) for nabla_D and (rho(a), -ad a)",
            1e-10,
            dend,
        ),
    ]
}

/// Gauge transformations of a random connection and the right-action law.
fn gauge(s: &Suite, e: &ProjectiveModule) -> Vec<Record> {
    let n = s.count(20);
    let setup = || -> Result<(Connection, Vec<ModuleVector>)> {
        Ok((random_connection(s, e, 50)?, s.vectors(e, 51, 20)?))
    };
    let out = setup().and_then(|(c, vs)| {
        par_samples(n, |i| {
            let g = Gauge::new(&s.corner_unit(e, 52, i, 0.2)?, e)?;
            let h = Gauge::new(&s.corner_unit(e, 53, i, 0.2)?, e)?;
            let cg = gauge_transform(&c, &g)?;
            let op = gauge_residual(&c, &cg, &g, &vs)?;
            let cgh = gauge_transform(&cg, &h)?;
            let direct = gauge_transform(&c, &g.compose(&h)?)?;
            Ok((op, connection_distance(&cgh, &direct)))
        })
    });
    let (op, action) = split2(out);
    vec![
        s.record("gauge_operator", "nabla'(s) = g^-1 nabla(g s)", 1e-8, op),
        s.record("right_action", "(nabla^g)^h = nabla^(gh)", 1e-8, action),
    ]
}

/// Covariant coordinates commute with the right action on a free module.
fn covcoord(s: &Suite) -> Vec<Record> {
    let b = &s.b;
    let run = || -> Result<Vec<f64>> {
        let e = ProjectiveModule::free(b, 1)?;
        let c = Connection::levi_civita(&e);
        let gens: Vec<AlgebraElement> = if b.is_fourier() && b.dim == 2 {
            [[1, 0], [-1, 0], [0, 1], [0, -1]]
                .iter()
                .map(|k| AlgebraElement::mode(b, k, crate::Complex64::new(1.0, 0.0)))
                .collect::<Result<_>>()?
        } else {
            (0..4)
                .map(|i| s.element(60, i, 1.0))
                .collect::<Result<_>>()?
        };
        let mut vs = e.generators()?;
        vs.extend(s.vectors(&e, 61, 4)?);
        gens.par_iter()
            .map(|a| covariant_coordinate_commutator(&c, a, &gens, &vs))
            .collect()
    };
    vec![s.record(
        "covariant_coordinates",
        "[rho^(a), rho(b)] = 0",
        1e-9,
        run(),
    )]
}

fn cocycle(s: &Suite, e: &ProjectiveModule, translations: &[Vec<f64>]) -> Vec<Record> {
    let fs = FactorSystem::new(e);
    let k = translations.len();
    let elems = translations
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Ok((
                s.corner_unit(e, 70, i as u64, 0.2)?,
                GroupElement::translation(&s.b, v)?,
            ))
        })
        .collect::<Result<Vec<_>>>();
    let triples: Vec<(usize, usize, usize)> = (0..k)
        .flat_map(|a| (0..k).flat_map(move |b| (0..k).map(move |c| (a, b, c))))
        .collect();
    let assoc = elems.clone().and_then(|el| {
        triples
            .par_iter()
            .map(|&(a, b, c)| {
                let r1 = fs.associativity_residual(&el[a], &el[b], &el[c])?;
                let r2 = cocycle_residual(&fs, &el[a].1, &el[b].1, &el[c].1)?;
                Ok((r1, r2))
            })
            .collect::<Result<Vec<_>>>()
    });
    let (assoc, cocy) = split2(assoc);
    let norm = elems.clone().and_then(|el| {
        el.par_iter()
            .map(|(_, g)| fs.normalization_residual(g))
            .collect()
    });
    // every lift built while multiplying, checked on fresh samples
    let semi = assoc.as_ref().map_err(|e| e.clone()).and_then(|_| {
        let lifts: Vec<_> = {
            let mut gs: Vec<GroupElement> = Vec::new();
            if let Ok(el) = &elems {
                for (a, b, c) in &triples {
                    let (ga, gb, gc) = (&el[*a].1, &el[*b].1, &el[*c].1);
                    for g in [
                        ga.clone(),
                        ga.compose(gb)?,
                        gb.compose(gc)?,
                        ga.compose(gb)?.compose(gc)?,
                    ] {
                        if !gs.iter().any(|h| h.shift == g.shift) {
                            gs.push(g);
                        }
                    }
                }
            }
            gs
        };
        let vs = s.vectors(e, 71, 3)?;
        let az = (0..3)
            .map(|i| s.element(72, i, 1.0))
            .collect::<Result<Vec<_>>>()?;
        lifts
            .par_iter()
            .map(|g| {
                let l = fs.lift(g)?;
                let mut worst: f64 = 0.0;
                for (v, a) in vs.iter().zip(&az) {
                    worst = worst.max(l.semilinearity_residual(v, a)?);
                    let out = l.apply(v)?;
                    worst = worst.max(e.membership_residual(&out.v)?);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()
    });
    vec![
        s.record(
            "associativity",
            "((n,g)(n',g'))(n'',g'') = (n,g)((n',g')(n'',g''))",
            1e-8,
            assoc,
        ),
        s.record(
            "cocycle_identity",
            "omega(g,g') omega(gg',g'') = S(g)(omega(g',g'')) omega(g,g'g'')",
            1e-8,
            cocy,
        ),
        s.record("normalization", "omega(g,1) = omega(1,g) = p", 1e-12, norm),
        s.record(
            "lift_semilinearity",
            "S(g)(s a) = S(g)(s) g(a), S(g)(s) in E",
            1e-9,
            semi,
        ),
    ]
}

fn extension_element(
    s: &Suite,
    e: &ProjectiveModule,
    tag: u64,
    i: u64,
) -> Result<ExtensionElement> {
    let h = random::matrix(&s.b, e.n(), s.band(), 1.0, &mut s.rng(tag, i))?;
    Ok(ExtensionElement {
        phi: e.p().mul3(&h, e.p())?,
        x: Derivation::along(&s.flow_vector(tag + 1, i)),
    })
}

/// Bracket preservation, Jacobi and the properties of `D omega`.
fn bracket(s: &Suite, e: &ProjectiveModule) -> Vec<Record> {
    let n = s.count(20);
    let gens = e.generators();
    let pres = gens.clone().and_then(|vs| {
        par_samples(n, |i| {
            let u = extension_element(s, e, 80, 2 * i)?;
            let v = extension_element(s, e, 80, 2 * i + 1)?;
            bracket_preservation_residual(&u, &v, e, &vs)
        })
    });
    let jacobi = par_samples(n, |i| {
        let u = extension_element(s, e, 82, 3 * i)?;
        let v = extension_element(s, e, 82, 3 * i + 1)?;
        let w = extension_element(s, e, 82, 3 * i + 2)?;
        jacobi_residual(&u, &v, &w, e)
    });
    let dw = par_samples(n, |i| {
        let x = Derivation::along(&s.flow_vector(84, i));
        let y = Derivation::along(&s.flow_vector(85, i));
        let tests = vec![(
            s.vectors(e, 86 + 10 * i, 1)?.remove(0),
            s.element(87, i, 1.0)?,
        )];
        let xy = domega(&x, &y, e, &tests)?;
        let yx = domega(&y, &x, e, &[])?;
        Ok((xy.linearity, (&xy.matrix + &yx.matrix).norm()))
    });
    let (lin, anti) = split2(dw);
    let t1 = (|| {
        let vs = s.vectors(e, 88, 3)?;
        let az = (0..3)
            .map(|i| s.element(89, i, 1.0))
            .collect::<Result<Vec<_>>>()?;
        (0..s.b.flow_dim())
            .map(|j| {
                let r = dend_check(&t1se(&Derivation::Basis(j), e)?, e, &az, &vs, f64::INFINITY)?;
                Ok(r.relation.max(r.membership))
            })
            .collect::<Result<Vec<f64>>>()
    })();
    vec![
        s.record(
            "bracket_preservation",
            "[Gamma(u), Gamma(v)] = Gamma([u, v])",
            1e-8,
            pres,
        ),
        s.record("jacobi", "cyclic sum of [[u,v],w] = 0", 1e-7, jacobi),
        s.record(
            "domega_linearity",
            "D omega(x,y) commutes with rho(a)",
            1e-8,
            lin,
        ),
        s.record(
            "domega_antisymmetry",
            "D omega(x,y) + D omega(y,x) = 0",
            1e-12,
            anti,
        ),
        s.record("t1se_derivative", "[T(x), rho(a)] = rho(x a)", 1e-10, t1),
    ]
}

/// The crossed-homomorphism law for `psi = c_w o tau_v` at multiplier level.
fn crossed(s: &Suite) -> Record {
    let out = par_samples(s.count(50), |i| {
        let w = random::near_unit(&s.b, s.band(), 0.2, &mut s.rng(90, i))?;
        let psi = Automorphism::inner(&w)?.then_after(&Automorphism::Translation(
            s.flow_vector(91, i).iter().map(|x| 0.1 * x).collect(),
        ));
        let a = random::near_unit(&s.b, s.band(), 0.3, &mut s.rng(92, i))?;
        let c = random::near_unit(&s.b, s.band(), 0.3, &mut s.rng(93, i))?;
        crossed_law_residual(&psi, &a, &c)
    });
    s.record(
        "crossed_law",
        "m(ab) = a m(b) a^-1 m(a) for m(a) = a psi(a)^-1",
        1e-10,
        out,
    )
}
