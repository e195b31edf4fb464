//! One function per subcommand, each producing a JSON document and a CSV view.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use euler_spectra::contfrac::Segment;
use euler_spectra::euler_core::{conserved, fixed_point, integrate_euler_sampled, perturbation_growth_rate};
use euler_spectra::export::{self, Cx};
use euler_spectra::matrixop::{build, eigen_residual, tag_spectrum, SpectralTag};
use euler_spectra::subsystem::{growth_rate, integrate_sampled, udt_bound_check};
use euler_spectra::verify::{self, CriterionResult};
use euler_spectra::{
    canonical_label, classes_meeting_disk, classify_stability, essential_band, find_eigenvalues, truncated_spectrum,
    CFParams, ClassLabel, Error, FindOptions, ModeSet, OperatorKind, StabilityKind, StabilityVerdict, SubsystemSpec,
    VorticityField, WaveVector,
};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

pub struct Artifact {
    pub json: String,
    pub csv: String,
    /// Human-readable lines printed to stdout when the artifact goes to a file.
    pub table: Option<String>,
    /// False when a verification command found failures.
    pub passed: bool,
}

#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Core(Error),
    Numerical(String),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "{e}"),
            CommandError::Core(e) => write!(f, "{e}"),
            CommandError::Numerical(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for CommandError {}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

fn core<T, E: Into<Error>>(r: Result<T, E>) -> Result<T, CommandError> {
    r.map_err(|e| CommandError::Core(e.into()))
}

fn json<T: Serialize>(v: &T) -> Result<String, CommandError> {
    core(export::to_json(v))
}

#[derive(Serialize)]
struct ClassEntry {
    khat: WaveVector,
    parallel: bool,
    meets_open_disk: bool,
    meets_closed_disk: bool,
    verdict: StabilityVerdict,
}

#[derive(Serialize)]
struct ClassesReport {
    command: &'static str,
    p: WaveVector,
    meeting_disk: Vec<ClassEntry>,
    scan_radius: f64,
    scanned: Vec<ClassEntry>,
    counts: std::collections::BTreeMap<String, usize>,
}

fn class_entry(l: &ClassLabel) -> Result<ClassEntry, CommandError> {
    Ok(ClassEntry {
        khat: l.khat,
        parallel: l.parallel,
        meets_open_disk: !l.parallel && l.meets_open_disk(),
        meets_closed_disk: !l.parallel && !l.avoids_disk(),
        verdict: core(classify_stability(l))?,
    })
}

pub fn classes(cfg: &RunConfig) -> Result<Artifact, CommandError> {
    let p = cfg.p;
    let meeting: Vec<ClassEntry> = core(classes_meeting_disk(p))?
        .iter()
        .map(class_entry)
        .collect::<Result<_, _>>()?;
    let r = cfg.sizes.k_cutoff;
    let r2 = (r * r).floor() as i64;
    let ri = r.floor() as i64;
    let mut labels = BTreeSet::new();
    for a in -ri..=ri {
        for b in -ri..=ri {
            let k = WaveVector::new(a, b);
            if !k.is_zero() && k.norm_sq() <= r2 {
                labels.insert(core(canonical_label(k, p))?);
            }
        }
    }
    let scanned: Vec<ClassEntry> = labels.iter().map(class_entry).collect::<Result<_, _>>()?;
    let mut counts = std::collections::BTreeMap::new();
    for e in &scanned {
        *counts.entry(format!("{:?}", e.verdict.kind)).or_insert(0) += 1;
    }
    let mut csv = String::from("k1,k2,kind,sigma,meets_open_disk,meets_closed_disk\n");
    for e in &scanned {
        let sigma = e.verdict.sigma.map(|s| format!("{}", export::round_sig(s))).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{:?},{},{},{}",
            e.khat.k1, e.khat.k2, e.verdict.kind, sigma, e.meets_open_disk, e.meets_closed_disk
        );
    }
    let report = ClassesReport {
        command: "classes",
        p,
        meeting_disk: meeting,
        scan_radius: r,
        scanned,
        counts,
    };
    Ok(Artifact {
        json: json(&report)?,
        csv,
        table: None,
        passed: true,
    })
}

#[derive(Serialize)]
struct QuadrupleOut {
    representative: Cx,
    members: Vec<Cx>,
    /// `a λ̃` for each member: eigenvalues of the class operator.
    operator_eigenvalues: Vec<Cx>,
    residual: f64,
    segment: Segment,
}

#[derive(Serialize)]
struct EigsCfReport {
    command: &'static str,
    p: WaveVector,
    khat: WaveVector,
    gamma: Cx,
    a: f64,
    verdict: StabilityVerdict,
    quadruples: Vec<QuadrupleOut>,
}

fn class_params(cfg: &RunConfig) -> Result<(WaveVector, CFParams), CommandError> {
    let khat = cfg.require_khat()?;
    let params = core(CFParams::new(khat, cfg.p, cfg.gamma))?;
    Ok((khat, params))
}

pub fn eigs_cf(cfg: &RunConfig) -> Result<Artifact, CommandError> {
    let (khat, params) = class_params(cfg)?;
    let verdict = core(classify_stability(&core(canonical_label(khat, cfg.p))?))?;
    let quadruples = if verdict.kind == StabilityKind::ParallelTrivial {
        Vec::new()
    } else {
        let opts = FindOptions {
            grid: cfg.sizes.grid,
            tol: cfg.tolerances.root_tol,
            cf_tol: cfg.tolerances.cf_tol,
            ..FindOptions::default()
        };
        core(find_eigenvalues(&params, &opts))?
    };
    let mut csv = String::from("quadruple,re,im\n");
    for (i, q) in quadruples.iter().enumerate() {
        for m in &q.members {
            let _ = writeln!(csv, "{i},{},{}", export::round_sig(m.re), export::round_sig(m.im));
        }
    }
    let report = EigsCfReport {
        command: "eigs-cf",
        p: cfg.p,
        khat,
        gamma: cfg.gamma.into(),
        a: params.a,
        verdict,
        quadruples: quadruples
            .iter()
            .map(|q| QuadrupleOut {
                representative: q.representative.into(),
                members: q.members.iter().map(|&m| m.into()).collect(),
                operator_eigenvalues: q.members.iter().map(|&m| (params.a * m).into()).collect(),
                residual: q.residual,
                segment: q.segment,
            })
            .collect(),
    };
    Ok(Artifact {
        json: json(&report)?,
        csv,
        table: None,
        passed: true,
    })
}

#[derive(Serialize)]
struct EigOut {
    value: Cx,
    tag: SpectralTag,
    band_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
}

#[derive(Serialize)]
struct EigsMatrixReport {
    command: &'static str,
    p: WaveVector,
    khat: WaveVector,
    gamma: Cx,
    operator: OperatorKind,
    n: usize,
    b: f64,
    isolated: usize,
    eigenvalues: Vec<EigOut>,
}

pub fn eigs_matrix(cfg: &RunConfig) -> Result<Artifact, CommandError> {
    let (khat, params) = class_params(cfg)?;
    let op = core(build(cfg.operator, &params, cfg.sizes.n_matrix))?;
    let eigs = core(truncated_spectrum(&op))?;
    let tagged = tag_spectrum(&eigs, op.b);
    let mut out = Vec::with_capacity(tagged.len());
    for t in &tagged {
        let residual = (t.tag == SpectralTag::Isolated).then(|| eigen_residual(&op, t.value));
        if let Some(r) = residual {
            if r.is_nan() || r > cfg.tolerances.eig_residual {
                return Err(CommandError::Numerical(format!(
                    "eigenvalue {} has residual {r:e} above tolerances.eig_residual = {:e}",
                    t.value, cfg.tolerances.eig_residual
                )));
            }
        }
        out.push(EigOut {
            value: t.value.into(),
            tag: t.tag,
            band_distance: t.band_distance,
            residual,
        });
    }
    let report = EigsMatrixReport {
        command: "eigs-matrix",
        p: cfg.p,
        khat,
        gamma: cfg.gamma.into(),
        operator: cfg.operator,
        n: op.size,
        b: op.b,
        isolated: out.iter().filter(|e| e.tag == SpectralTag::Isolated).count(),
        eigenvalues: out,
    };
    Ok(Artifact {
        json: json(&report)?,
        csv: export::spectrum_csv(&tagged),
        table: None,
        passed: true,
    })
}

#[derive(Serialize)]
struct BandReport {
    command: &'static str,
    p: WaveVector,
    khat: WaveVector,
    gamma: Cx,
    lower: Cx,
    upper: Cx,
    width: f64,
}

pub fn band(cfg: &RunConfig) -> Result<Artifact, CommandError> {
    let (khat, params) = class_params(cfg)?;
    let b = essential_band(&params);
    let report = BandReport {
        command: "band",
        p: cfg.p,
        khat,
        gamma: cfg.gamma.into(),
        lower: b.lower.into(),
        upper: b.upper.into(),
        width: b.width,
    };
    Ok(Artifact {
        json: json(&report)?,
        csv: export::complex_csv(&[b.lower, b.upper]),
        table: None,
        passed: true,
    })
}

#[derive(Serialize)]
struct SimulateReport {
    command: &'static str,
    p: WaveVector,
    khat: WaveVector,
    gamma: Cx,
    n_min: i64,
    n_max: i64,
    dt: f64,
    steps: usize,
    seed: u64,
    #[serde(rename = "H_drift")]
    h_drift: f64,
    #[serde(rename = "I_drift")]
    i_drift: f64,
    enstrophy_ratio: f64,
    max_enstrophy_ratio: f64,
    growth_rate: Option<f64>,
    verdict: StabilityVerdict,
    udt_max_ratio: Option<f64>,
}

pub fn simulate(cfg: &RunConfig) -> Result<Artifact, CommandError> {
    let khat = cfg.require_khat()?;
    let w = cfg.sizes.n_window;
    let spec = core(SubsystemSpec::new(khat, cfg.p, cfg.gamma, -w, w))?;
    let s = &cfg.sim;
    let w0 = spec.random_state(s.seed, s.amplitude);
    let tr = core(integrate_sampled(&spec, &w0, s.dt, s.steps, s.every))?;
    let e = tr.enstrophy();
    let ratio = |j: f64| if e[0] > 0.0 { j / e[0] } else { 1.0 };
    let verdict = core(classify_stability(&core(canonical_label(khat, cfg.p))?))?;
    let udt_max_ratio = if verdict.kind == StabilityKind::StableUDT {
        Some(core(udt_bound_check(&spec, &tr))?.max_ratio)
    } else {
        None
    };
    let report = SimulateReport {
        command: "simulate",
        p: cfg.p,
        khat,
        gamma: cfg.gamma.into(),
        n_min: spec.n_min,
        n_max: spec.n_max,
        dt: s.dt,
        steps: s.steps,
        seed: s.seed,
        h_drift: tr.h_drift,
        i_drift: tr.i_drift,
        enstrophy_ratio: ratio(*e.last().unwrap_or(&e[0])),
        max_enstrophy_ratio: e.iter().map(|&j| ratio(j)).fold(0.0, f64::max),
        growth_rate: if e[0] > 0.0 { growth_rate(&tr).ok() } else { None },
        verdict,
        udt_max_ratio,
    };
    Ok(Artifact {
        json: json(&report)?,
        csv: export::trajectory_csv(&tr),
        table: None,
        passed: true,
    })
}

#[derive(Serialize)]
struct EulerReport {
    command: &'static str,
    p: WaveVector,
    gamma: Cx,
    cutoff: f64,
    modes: usize,
    dt: f64,
    steps: usize,
    seed: u64,
    perturbation: f64,
    energy: f64,
    enstrophy: f64,
    #[serde(rename = "E_drift")]
    e_drift: f64,
    #[serde(rename = "J_drift")]
    j_drift: f64,
    perturbation_growth_rate: Option<f64>,
}

pub fn euler_sim(cfg: &RunConfig) -> Result<Artifact, CommandError> {
    let modes = core(ModeSet::new(cfg.sizes.k_cutoff))?;
    let base = core(fixed_point(cfg.p, cfg.gamma, &modes))?;
    let s = &cfg.sim;
    let noise = VorticityField::random(&modes, s.seed, s.amplitude);
    let mut f0 = base.clone();
    for (c, n) in f0.coeffs.iter_mut().zip(&noise.coeffs) {
        *c += n;
    }
    let tr = core(integrate_euler_sampled(&f0, s.dt, s.steps, s.every))?;
    let c0 = conserved(&f0, cfg.p);
    let grows = s.amplitude > 0.0 && tr.fields.len() >= 3;
    let report = EulerReport {
        command: "euler-sim",
        p: cfg.p,
        gamma: cfg.gamma.into(),
        cutoff: modes.cutoff,
        modes: modes.len(),
        dt: s.dt,
        steps: s.steps,
        seed: s.seed,
        perturbation: s.amplitude,
        energy: c0.energy,
        enstrophy: c0.enstrophy,
        e_drift: tr.energy_drift,
        j_drift: tr.enstrophy_drift,
        perturbation_growth_rate: if grows { perturbation_growth_rate(&tr, &base).ok() } else { None },
    };
    Ok(Artifact {
        json: json(&report)?,
        csv: export::field_csv(tr.last()),
        table: None,
        passed: true,
    })
}

#[derive(Serialize)]
struct CriterionOut {
    id: u8,
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    passed: bool,
    criteria: Vec<CriterionOut>,
}

pub fn verify(only: Option<u8>) -> Result<Artifact, CommandError> {
    let results: Vec<CriterionResult> = match only {
        Some(id) => vec![verify::run_criterion(id)
            .ok_or_else(|| ConfigError(format!("no acceptance criterion {id} (valid: 1-{})", verify::CRITERIA.len())))?],
        None => verify::run_acceptance(),
    };
    let passed = results.iter().all(|r| r.passed);
    let mut table = String::new();
    let mut csv = String::from("id,name,passed,elapsed_s\n");
    for r in &results {
        let _ = writeln!(table, "{r}");
        let _ = writeln!(csv, "{},{},{},{:.3}", r.id, r.name, r.passed, r.elapsed_s);
    }
    let n_pass = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(table, "{n_pass} of {} criteria passed", results.len());
    // Timings vary between runs and stay out of the JSON.
    let criteria = results
        .into_iter()
        .map(|r| CriterionOut {
            id: r.id,
            name: r.name,
            passed: r.passed,
            detail: r.detail,
        })
        .collect();
    let report = VerifyReport {
        command: "verify",
        passed,
        criteria,
    };
    Ok(Artifact {
        json: json(&report)?,
        csv,
        table: Some(table),
        passed,
    })
}
