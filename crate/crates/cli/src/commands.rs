use std::path::Path;

use naimark_core::applications::estimate::{
    estimate_from_frequencies, estimate_state, trace_distance, Estimate, EstimationProblem, Method,
};
use naimark_core::applications::merge::{merge_double_dilation, merge_halfsum, povm_report};
use naimark_core::bridge::{
    joint_distribution, sample_outcomes, unregularize_probabilities, QuantumState,
};
use naimark_core::dilation::{
    build_dilation, trace_product, verify_invariants, verify_trace_preservation, DilationSpace,
    RegularizedPovm,
};
use naimark_core::fixtures::{
    ket0, ket1, ket_minus, ket_plus, pauli_x, pauli_y, pauli_z, tetrahedral_povm,
};
use naimark_core::model::{verify_born_preservation, ModelBasis};
use naimark_core::operator::frobenius_distance;
use naimark_core::{Observable, Report, Tolerances};

use crate::format::{
    read_json, write_json, CountsFile, FormatError, InputsDigest, OperatorFile, ReportFile,
};
use crate::{Command, Common, MergeMode, MethodArg};

const INVARIANT_TOL: f64 = 1e-12;
const CHECK_TOL: f64 = 1e-10;
const MARGINAL_TOL: f64 = 1e-12;
const EM_TRACE_DISTANCE: f64 = 0.05;
const ISOMETRY_SAMPLES: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Core(#[from] naimark_core::Error),
    #[error("{0}")]
    Usage(String),
}

/// A finished command: its report and the digest of what it read.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub digest: String,
}

impl Outcome {
    pub fn report_file(&self) -> ReportFile {
        ReportFile::new(&self.report, self.digest.clone())
    }
}

pub fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Validate { common, .. }
        | Command::Dilate { common, .. }
        | Command::Verify { common, .. }
        | Command::Sample { common, .. }
        | Command::Merge { common, .. }
        | Command::Estimate { common, .. }
        | Command::Demo { common, .. } => common,
    }
}

pub fn run(cmd: &Command) -> Result<Outcome, CliError> {
    let mut digest = InputsDigest::new();
    let report = match cmd {
        Command::Validate { file, common } => {
            digest.bytes(b"validate");
            let family = load_family(file, &mut digest)?;
            povm_report(&family, common.tol.unwrap_or(Tolerances::default().povm))?
        }
        Command::Dilate {
            file,
            common,
            dilation,
        } => {
            digest.bytes(
                format!("dilate margin={} seed={}", dilation.margin, common.seed).as_bytes(),
            );
            let family = load_family(file, &mut digest)?;
            let p = RegularizedPovm::prepare(&family, dilation.margin)?;
            let d = build_dilation(&p)?;
            let mut report = Report::new("dilate");
            describe(&mut report, &p, &d);
            report.extend(verify_invariants(
                &d,
                ISOMETRY_SAMPLES,
                common.seed,
                common.tol.unwrap_or(INVARIANT_TOL),
            )?);
            report
        }
        Command::Verify {
            file,
            state,
            observables,
            common,
            dilation,
        } => {
            digest.bytes(
                format!("verify margin={} seed={}", dilation.margin, common.seed).as_bytes(),
            );
            let family = load_family(file, &mut digest)?;
            let rho = match state {
                Some(path) => load_state(path, &mut digest)?,
                None => QuantumState::maximally_mixed(family[0].dim()),
            };
            let obs = match observables {
                Some(path) => load_family(path, &mut digest)?,
                None => family.clone(),
            };
            verify(&family, &rho, &obs, dilation.margin, common)?
        }
        Command::Sample {
            file,
            state,
            n,
            counts,
            common,
            dilation,
        } => {
            digest.bytes(
                format!(
                    "sample margin={} seed={} n={n}",
                    dilation.margin, common.seed
                )
                .as_bytes(),
            );
            let family = load_family(file, &mut digest)?;
            let rho = load_state(state, &mut digest)?;
            let p = RegularizedPovm::prepare(&family, dilation.margin)?;
            let d = build_dilation(&p)?;
            let (report, drawn) = sample(&p, &d, &rho, *n, common.seed)?;
            if let Some(path) = counts {
                let file = CountsFile {
                    counts: drawn,
                    seed: Some(common.seed),
                };
                write_json(path, &file.to_value())?;
            }
            report
        }
        Command::Merge {
            p,
            q,
            mode,
            state,
            merged,
            common,
            dilation,
        } => {
            digest.bytes(format!("merge {mode:?} margin={}", dilation.margin).as_bytes());
            let (p_names, p_family) = load_named(p, &mut digest)?;
            let (q_names, q_family) = load_named(q, &mut digest)?;
            let rho = match state {
                Some(path) => Some(load_state(path, &mut digest)?),
                None => None,
            };
            match mode {
                MergeMode::Halfsum => {
                    let (report, out) = halfsum(&p_family, &q_family, rho.as_ref(), common.tol)?;
                    if let Some(path) = merged {
                        let names = p_names.into_iter().chain(q_names);
                        let file = OperatorFile::new(
                            names
                                .zip(&out)
                                .map(|(name, o)| crate::format::NamedOperator {
                                    name: format!("half_{name}"),
                                    matrix: o.matrix().clone(),
                                })
                                .collect(),
                            Some("half-sum merge".into()),
                        );
                        write_json(path, &file.to_value())?;
                    }
                    report
                }
                MergeMode::Double => {
                    let m = p_family[0].dim();
                    let mut probes = vec![QuantumState::maximally_mixed(m)];
                    probes.extend(rho);
                    merge_double_dilation(
                        &p_family,
                        &q_family,
                        dilation.margin,
                        &probes,
                        common.tol.unwrap_or(CHECK_TOL),
                    )?
                    .report
                }
            }
        }
        Command::Estimate {
            file,
            counts,
            method,
            max_iters,
            truth,
            estimate,
            common,
            dilation,
        } => {
            digest.bytes(
                format!(
                    "estimate {method:?} margin={} max_iters={max_iters} tol={:?}",
                    dilation.margin, common.tol
                )
                .as_bytes(),
            );
            let family = load_family(file, &mut digest)?;
            let (bytes, value) = read_json(counts)?;
            digest.bytes(&bytes);
            let counts = CountsFile::from_value(&value, &counts.display().to_string())?;
            let truth = match truth {
                Some(path) => Some(load_state(path, &mut digest)?),
                None => None,
            };
            let p = RegularizedPovm::prepare(&family, dilation.margin)?;
            let problem = EstimationProblem {
                povm: p,
                counts: counts.counts,
                method: match method {
                    MethodArg::Linear => Method::LinearInversion,
                    MethodArg::Em => Method::Em,
                },
                max_iters: *max_iters,
                tol: common.tol.unwrap_or(CHECK_TOL),
            };
            let est = estimate_state(&problem)?;
            if let Some(path) = estimate {
                let file = OperatorFile::from_observables(
                    "rho",
                    [est.state.rho()],
                    Some("estimated state".into()),
                );
                write_json(path, &file.to_value())?;
            }
            estimation_report("estimate", &est, truth.as_ref())?
        }
        Command::Demo {
            n,
            common,
            dilation,
        } => {
            digest.bytes(
                format!("demo margin={} seed={} n={n}", dilation.margin, common.seed).as_bytes(),
            );
            demo(*n, common, dilation.margin)?
        }
    };
    Ok(Outcome {
        report,
        digest: digest.finish(),
    })
}

fn load_named(
    path: &Path,
    digest: &mut InputsDigest,
) -> Result<(Vec<String>, Vec<Observable>), CliError> {
    let (bytes, value) = read_json(path)?;
    digest.bytes(&bytes);
    let name = path.display().to_string();
    let file = OperatorFile::from_value(&value, &name)?;
    let observables = file.observables(&name)?;
    Ok((
        file.operators.into_iter().map(|o| o.name).collect(),
        observables,
    ))
}

fn load_family(path: &Path, digest: &mut InputsDigest) -> Result<Vec<Observable>, CliError> {
    Ok(load_named(path, digest)?.1)
}
fn load_state(path: &Path, digest: &mut InputsDigest) -> Result<QuantumState, CliError> {
    let ops = load_family(path, digest)?;
    if ops.len() != 1 {
        return Err(CliError::Usage(format!(
            "{}: a state file holds exactly one operator, found {}",
            path.display(),
            ops.len()
        )));
    }
    let op = ops.into_iter().next().expect("length checked");
    QuantumState::new(op).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn describe(report: &mut Report, p: &RegularizedPovm, d: &DilationSpace) {
    report
        .info("m", p.m() as f64)
        .info("k", p.k() as f64)
        .info("shift", p.shift())
        .info("n", d.n() as f64)
        .info("completed", if p.completed() { 1.0 } else { 0.0 });
}

fn verify(
    family: &[Observable],
    rho: &QuantumState,
    obs: &[Observable],
    margin: f64,
    common: &Common,
) -> Result<Report, CliError> {
    let tol = common.tol.unwrap_or(CHECK_TOL);
    let p = RegularizedPovm::prepare(family, margin)?;
    let d = build_dilation(&p)?;
    let mut report = Report::new("verify");
    describe(&mut report, &p, &d);
    report.extend(verify_invariants(
        &d,
        ISOMETRY_SAMPLES,
        common.seed,
        common.tol.unwrap_or(INVARIANT_TOL),
    )?);
    report.extend(verify_trace_preservation(obs, &p, &d, tol)?);

    let mb = ModelBasis::new(&d)?;
    let mut component = 0.0_f64;
    for u0 in p.originals() {
        let born = verify_born_preservation(rho.rho(), u0, &d, &mb, tol)?;
        component = component.max(born.value("component_vs_base").unwrap_or(f64::NAN));
    }
    report.bounded("born_preservation.component_vs_base", component, tol);

    let jd = joint_distribution(rho, &d)?;
    let total: f64 = jd.probs().iter().sum();
    let q = unregularize_probabilities(&jd, &p)?;
    let unreg = q
        .iter()
        .zip(p.originals())
        .map(|(qi, b)| (qi - trace_product(rho.rho().matrix(), b.matrix()).re).abs())
        .fold(0.0, f64::max);
    report
        .bounded(
            "distribution.normalization",
            (total - 1.0).abs(),
            MARGINAL_TOL.max(tol),
        )
        .bounded("distribution.unregularized_deviation", unreg, tol);
    Ok(report)
}

fn sample(
    p: &RegularizedPovm,
    d: &DilationSpace,
    rho: &QuantumState,
    n: u64,
    seed: u64,
) -> Result<(Report, Vec<u64>), CliError> {
    let jd = joint_distribution(rho, d)?;
    let counts = sample_outcomes(&jd, n, seed);
    let mut report = Report::new("sample");
    report
        .info("n", n as f64)
        .info("seed", seed as f64)
        .info("shift", p.shift());
    let mut worst = 0.0_f64;
    for (i, (count, prob)) in counts.iter().zip(jd.probs()).enumerate() {
        report
            .info(format!("count_{i}"), *count as f64)
            .info(format!("probability_{i}"), *prob);
        let sd = (prob * (1.0 - prob) / n.max(1) as f64).sqrt();
        if sd > 0.0 {
            worst = worst.max(((*count as f64 / n as f64) - prob).abs() / sd);
        }
    }
    report.info("max_standardized_deviation", worst);
    Ok((report, counts))
}

fn halfsum(
    p: &[Observable],
    q: &[Observable],
    rho: Option<&QuantumState>,
    tol: Option<f64>,
) -> Result<(Report, Vec<Observable>), CliError> {
    let merged = merge_halfsum(p, q, Tolerances::default().povm)?;
    let mut report = Report::new("merge_halfsum");
    report.info("elements", merged.len() as f64);
    report.extend(povm_report(
        &merged,
        tol.unwrap_or(2.0 * Tolerances::default().povm),
    )?);
    if let Some(rho) = rho {
        for (i, b) in merged.iter().enumerate() {
            let raw = trace_product(rho.rho().matrix(), b.matrix()).re;
            report
                .info(format!("probability_{i}"), raw)
                .info(format!("rescaled_probability_{i}"), 2.0 * raw);
        }
    }
    Ok((report, merged))
}

fn estimation_report(
    name: &str,
    est: &Estimate,
    truth: Option<&QuantumState>,
) -> Result<Report, CliError> {
    let diag = &est.diagnostics;
    let max_drop = diag
        .log_likelihood
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);
    let rho = est.state.rho();
    let min = rho.spectrum()?.min();
    let mut report = Report::new(name);
    report
        .info("iterations", diag.iterations as f64)
        .info("converged", if diag.converged { 1.0 } else { 0.0 })
        .info("diluted_steps", diag.diluted_steps as f64)
        .info(
            "probability_floored",
            if diag.probability_floored { 1.0 } else { 0.0 },
        )
        .info(
            "informationally_complete",
            if diag.informationally_complete {
                1.0
            } else {
                0.0
            },
        )
        .info("rank", diag.rank as f64)
        .info("clipped_mass", diag.clipped_mass)
        .info(
            "final_log_likelihood",
            diag.log_likelihood.last().copied().unwrap_or(f64::NAN),
        )
        .bounded("max_log_likelihood_drop", max_drop, 1e-12)
        .bounded("trace_deviation", (rho.trace() - 1.0).abs(), CHECK_TOL)
        .bounded("negativity", (-min).max(0.0), CHECK_TOL);
    if let Some(truth) = truth {
        report
            .info("trace_distance", trace_distance(&est.state, truth)?)
            .info(
                "frobenius_distance",
                frobenius_distance(rho.matrix(), truth.rho().matrix()),
            );
    }
    Ok(report)
}

/// Tetrahedral POVM on `|0⟩⟨0|`: dilate, verify, sample, estimate, merge.
fn demo(n: u64, common: &Common, margin: f64) -> Result<Report, CliError> {
    let tol = common.tol.unwrap_or(CHECK_TOL);
    let family = tetrahedral_povm();
    let rho0 = QuantumState::new(ket0())?;
    let p = RegularizedPovm::prepare(&family, margin)?;
    let d = build_dilation(&p)?;

    let mut report = Report::new("demo");
    describe(&mut report, &p, &d);
    report.extend(verify_invariants(
        &d,
        ISOMETRY_SAMPLES,
        common.seed,
        common.tol.unwrap_or(INVARIANT_TOL),
    )?);
    let probes = [pauli_x(), pauli_y(), pauli_z(), rho0.rho().clone()];
    report.extend(verify_trace_preservation(&probes, &p, &d, tol)?);
    let mb = ModelBasis::new(&d)?;
    report.extend(verify_born_preservation(
        rho0.rho(),
        &pauli_z(),
        &d,
        &mb,
        tol,
    )?);

    let jd = joint_distribution(&rho0, &d)?;
    let q = unregularize_probabilities(&jd, &p)?;
    let s = 1.0 / 3f64.sqrt();
    let closed = [1.0, -1.0, -1.0, 1.0].map(|sign| 0.25 * (1.0 + sign * s));
    let marginal = q
        .iter()
        .zip(closed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.bounded(
        "marginals.closed_form_deviation",
        marginal,
        common.tol.unwrap_or(MARGINAL_TOL),
    );

    let (sampled, counts) = sample(&p, &d, &rho0, n, common.seed)?;
    report.extend(sampled);

    let exact = estimate_from_frequencies(&p, jd.probs(), Method::LinearInversion, 0, 0.0)?;
    report.bounded(
        "linear_inversion.frobenius_error",
        frobenius_distance(exact.state.rho().matrix(), rho0.rho().matrix()),
        tol,
    );
    let em = estimate_state(&EstimationProblem {
        povm: p.clone(),
        counts,
        method: Method::Em,
        max_iters: 10_000,
        tol,
    })?;
    report.extend(estimation_report("em", &em, Some(&rho0))?);
    report.bounded(
        "em.trace_distance_bound",
        trace_distance(&em.state, &rho0)?,
        EM_TRACE_DISTANCE,
    );

    let z = [ket0(), ket1()];
    let x = [ket_plus(), ket_minus()];
    let (merged, _) = halfsum(&z, &x, Some(&rho0), common.tol)?;
    report.extend(merged);
    let double = merge_double_dilation(
        &z,
        &x,
        margin,
        &[rho0.clone(), QuantumState::new(ket_plus())?],
        tol,
    )?;
    report.extend(double.report);
    Ok(report)
}
