//! Command-line front end: load states from JSON, run convertibility
//! decisions, reproduce the counterexample models, and print
//! microcanonical states.
//!
//! Exit codes are part of the contract so batch studies can script against
//! them: 0 = yes / reproduced, 1 = no / failed assertion, 2 = unknown,
//! 3 = no microcanonical state (half disk), 64 = parse or model error,
//! 65 = unsupported model specification, 70 = internal path disagreement.

mod wire;

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use microtherm_core::audit::{
    check_half_disk_nonuniqueness, check_permutability_square_bit,
    check_strong_symmetry_square_bit, check_transitivity, AuditReport, CheckStatus,
};
use microtherm_core::convertibility::{
    counterexample_report, noisy_convertible, rare_convertible, unital_convertible, Answer,
    ConvertibilityVerdict,
};
use microtherm_core::duality::{entanglement_entropy, locc_convertible, schmidt, DualityError};
use microtherm_core::microcanonical::{invariant_distribution_report, microcanonical_state};
use microtherm_core::models::{Factor, TheoryModel};
use microtherm_core::numerics::Tolerance;

const EXIT_YES: i32 = 0;
const EXIT_NO: i32 = 1;
const EXIT_UNKNOWN: i32 = 2;
const EXIT_NO_MICROCANONICAL: i32 = 3;
const EXIT_PARSE: i32 = 64;
const EXIT_UNSUPPORTED_MODEL: i32 = 65;
const EXIT_PATH_DISAGREEMENT: i32 = 70;

#[derive(Parser)]
#[command(
    name = "microtherm",
    about = "Finite theory models, resource theories of purity, and the entanglement-thermodynamics duality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized construction (never wall-clock).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override for the equality tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether rho converts to sigma under the chosen relation.
    Convert {
        #[arg(long, value_enum)]
        relation: RelationArg,
        rho: PathBuf,
        sigma: PathBuf,
        /// Where to write the witness channel; defaults to a sidecar next
        /// to the rho file.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Reproduce the separating examples and axiom checks.
    Counterexamples {
        #[arg(long, value_enum, default_value_t = WhichArg::All)]
        which: WhichArg,
    },
    /// Decide LOCC convertibility of two pure bipartite states and report
    /// all three duality clauses.
    Duality { phi: PathBuf, psi: PathBuf },
    /// Print the microcanonical state of a model, or the non-uniqueness
    /// report for the half disk.
    Microcanonical {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Dimension for classical and quantum models.
        #[arg(long)]
        d: Option<usize>,
        /// Sector dimension for the doubled quantum model.
        #[arg(long)]
        sector_dim: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RelationArg {
    Rare,
    Noisy,
    Unital,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WhichArg {
    Dqt,
    SquareBit,
    HalfDisk,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Classical,
    Quantum,
    Dqt,
    SquareBit,
    HalfDisk,
}

fn main() {
    let cli = Cli::parse();
    let mut tolerance = Tolerance::default();
    if let Some(tol) = cli.tol {
        tolerance.eq_tol = tol;
    }
    let code = match &cli.command {
        Command::Convert {
            relation,
            rho,
            sigma,
            witness_out,
        } => cmd_convert(*relation, rho, sigma, witness_out.as_deref(), &tolerance, cli.format),
        Command::Counterexamples { which } => {
            cmd_counterexamples(*which, cli.seed, &tolerance, cli.format)
        }
        Command::Duality { phi, psi } => cmd_duality(phi, psi, &tolerance, cli.format),
        Command::Microcanonical {
            model,
            d,
            sector_dim,
        } => cmd_microcanonical(*model, *d, *sector_dim, cli.format),
    };
    std::process::exit(code);
}

fn emit<T: Serialize>(value: &T, text: String, format: Format) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("serializable report")
        ),
        Format::Text => println!("{text}"),
    }
}

#[derive(Serialize)]
struct ConvertReport {
    relation: microtherm_core::convertibility::Relation,
    answer: Answer,
    witness: Option<String>,
    obstruction: Option<String>,
}

fn cmd_convert(
    relation: RelationArg,
    rho_path: &Path,
    sigma_path: &Path,
    witness_out: Option<&Path>,
    tol: &Tolerance,
    format: Format,
) -> i32 {
    let parsed = (|| -> Result<_> {
        let rho = wire::read_state(rho_path)?;
        let sigma = wire::read_state(sigma_path)?;
        Ok((rho, sigma))
    })();
    let (rho, sigma) = match parsed {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_PARSE;
        }
    };
    let decided: Result<ConvertibilityVerdict, _> = match relation {
        RelationArg::Rare => rare_convertible(&rho, &sigma, tol),
        RelationArg::Noisy => noisy_convertible(&rho, &sigma, tol),
        RelationArg::Unital => unital_convertible(&rho, &sigma, tol),
    };
    let verdict = match decided {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_PARSE;
        }
    };
    let witness_path = match &verdict.witness {
        Some(witness) => {
            let path = witness_out.map(Path::to_path_buf).unwrap_or_else(|| {
                let stem = rho_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "witness".into());
                rho_path.with_file_name(format!("{stem}_witness.json"))
            });
            match std::fs::write(
                &path,
                serde_json::to_string_pretty(witness).expect("serializable witness"),
            ) {
                Ok(()) => Some(path.display().to_string()),
                Err(e) => {
                    eprintln!("error: cannot write witness file: {e}");
                    return EXIT_PARSE;
                }
            }
        }
        None => None,
    };
    let report = ConvertReport {
        relation: verdict.relation,
        answer: verdict.answer,
        witness: witness_path,
        obstruction: verdict.obstruction,
    };
    let text = format!(
        "{:?}: {:?}{}{}",
        report.relation,
        report.answer,
        report
            .witness
            .as_ref()
            .map(|w| format!("\nwitness: {w}"))
            .unwrap_or_default(),
        report
            .obstruction
            .as_ref()
            .map(|o| format!("\nobstruction: {o}"))
            .unwrap_or_default(),
    );
    emit(&report, text, format);
    match report.answer {
        Answer::Yes => EXIT_YES,
        Answer::No => EXIT_NO,
        Answer::Unknown => EXIT_UNKNOWN,
    }
}

#[derive(Serialize)]
struct CounterexamplesReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    dqt: Option<microtherm_core::convertibility::CounterexampleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    square_bit: Option<AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    half_disk: Option<AuditReport>,
    failures: Vec<String>,
}

fn cmd_counterexamples(which: WhichArg, seed: u64, tol: &Tolerance, format: Format) -> i32 {
    let mut report = CounterexamplesReport {
        dqt: None,
        square_bit: None,
        half_disk: None,
        failures: Vec::new(),
    };
    let mut text = String::new();

    if matches!(which, WhichArg::Dqt | WhichArg::All) {
        match counterexample_report(tol) {
            Ok(dqt) => {
                if !dqt.reproduced {
                    report
                        .failures
                        .push("doubled-qubit separation did not reproduce".into());
                }
                text.push_str(&format!(
                    "doubled qubit: spectra {:?} / {:?}, sector masses {:?} vs {:?}\n\
                     unital: {:?} forward, {:?} backward; rare: {:?}; noisy: {:?}\n",
                    dqt.rho_spectrum,
                    dqt.sigma_spectrum,
                    dqt.rho_sector_mass,
                    dqt.sigma_sector_mass,
                    dqt.unital_forward,
                    dqt.unital_backward,
                    dqt.rare_forward,
                    dqt.noisy_forward,
                ));
                report.dqt = Some(dqt);
            }
            Err(e) => report.failures.push(format!("doubled-qubit report: {e}")),
        }
    }

    if matches!(which, WhichArg::SquareBit | WhichArg::All) {
        let mut audit = AuditReport::default();
        let permutability = check_permutability_square_bit();
        let strong = check_strong_symmetry_square_bit();
        if permutability.status != CheckStatus::Pass {
            report.failures.push("square-bit permutability did not pass".into());
        }
        if strong.status != CheckStatus::Fail {
            report
                .failures
                .push("square-bit strong symmetry unexpectedly held".into());
        }
        audit.push(permutability);
        audit.push(strong);
        text.push_str(&audit.text_table());
        report.square_bit = Some(audit);
    }

    if matches!(which, WhichArg::HalfDisk | WhichArg::All) {
        let mut audit = AuditReport::default();
        let nonuniqueness = check_half_disk_nonuniqueness();
        let transitivity = check_transitivity(&TheoryModel::half_disk(), 10, seed);
        if nonuniqueness.status != CheckStatus::Pass {
            report
                .failures
                .push("half-disk invariant witnesses did not verify".into());
        }
        if transitivity.status != CheckStatus::Fail {
            report
                .failures
                .push("half-disk transitivity unexpectedly held".into());
        }
        audit.push(nonuniqueness);
        audit.push(transitivity);
        text.push_str(&audit.text_table());
        report.half_disk = Some(audit);
    }

    let code = if report.failures.is_empty() {
        EXIT_YES
    } else {
        eprintln!("failed: {}", report.failures[0]);
        EXIT_NO
    };
    emit(&report, text, format);
    code
}

#[derive(Serialize)]
struct DualityReport {
    schmidt_phi: Vec<f64>,
    schmidt_psi: Vec<f64>,
    entropy_phi: f64,
    entropy_psi: f64,
    clause_schmidt_majorisation: bool,
    clause_a_marginal_rare: bool,
    clause_b_marginal_rare: bool,
    convertible: bool,
}

fn cmd_duality(phi_path: &Path, psi_path: &Path, tol: &Tolerance, format: Format) -> i32 {
    let parsed = (|| -> Result<_> {
        let phi = wire::read_bipartite(phi_path)?;
        let psi = wire::read_bipartite(psi_path)?;
        Ok((phi, psi))
    })();
    let (phi, psi) = match parsed {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_PARSE;
        }
    };
    let outcome = (|| -> Result<DualityReport, DualityError> {
        let schmidt_phi = schmidt(&phi, tol)?;
        let schmidt_psi = schmidt(&psi, tol)?;
        // clauses 1 and 2 are cross-checked inside locc_convertible
        let convertible = locc_convertible(&phi, &psi, tol)?;
        let b_phi = phi.marginal_state(Factor::Right)?;
        let b_psi = psi.marginal_state(Factor::Right)?;
        let clause_b = rare_convertible(&b_psi, &b_phi, tol)?.answer == Answer::Yes;
        Ok(DualityReport {
            schmidt_phi: schmidt_phi.0.trimmed(tol.psd_tol),
            schmidt_psi: schmidt_psi.0.trimmed(tol.psd_tol),
            entropy_phi: entanglement_entropy(&phi, tol)?,
            entropy_psi: entanglement_entropy(&psi, tol)?,
            clause_schmidt_majorisation: convertible,
            clause_a_marginal_rare: convertible,
            clause_b_marginal_rare: clause_b,
            convertible,
        })
    })();
    match outcome {
        Ok(report) => {
            let agree = report.clause_schmidt_majorisation == report.clause_b_marginal_rare;
            let text = format!(
                "schmidt(phi) = {:?}, schmidt(psi) = {:?}\n\
                 entanglement entropies: {:.6} -> {:.6}\n\
                 clauses (schmidt, A-marginal, B-marginal): {} {} {}\n\
                 convertible: {}",
                report.schmidt_phi,
                report.schmidt_psi,
                report.entropy_phi,
                report.entropy_psi,
                report.clause_schmidt_majorisation,
                report.clause_a_marginal_rare,
                report.clause_b_marginal_rare,
                report.convertible
            );
            emit(&report, text, format);
            if agree {
                EXIT_YES
            } else {
                eprintln!("error: duality clauses disagree");
                EXIT_PATH_DISAGREEMENT
            }
        }
        Err(DualityError::PathDisagreement {
            schmidt_path,
            marginal_path,
        }) => {
            eprintln!(
                "error: internal path disagreement (schmidt {schmidt_path}, marginal {marginal_path})"
            );
            EXIT_PATH_DISAGREEMENT
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_PARSE
        }
    }
}

fn cmd_microcanonical(
    model_arg: ModelArg,
    d: Option<usize>,
    sector_dim: Option<usize>,
    format: Format,
) -> i32 {
    let model = match (model_arg, d, sector_dim) {
        (ModelArg::Classical, Some(d), _) if d >= 1 => TheoryModel::classical(d),
        (ModelArg::Quantum, Some(d), _) if d >= 1 => TheoryModel::quantum(d),
        (ModelArg::Dqt, _, Some(s)) if s >= 1 => TheoryModel::doubled_quantum(s),
        (ModelArg::SquareBit, _, _) => TheoryModel::square_bit(),
        (ModelArg::HalfDisk, _, _) => TheoryModel::half_disk(),
        _ => {
            eprintln!(
                "error: classical/quantum need --d, the doubled model needs --sector-dim"
            );
            return EXIT_UNSUPPORTED_MODEL;
        }
    };
    match microcanonical_state(&model) {
        Ok(chi) => {
            let wire = match wire::WireState::from_state(&chi) {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_PARSE;
                }
            };
            let text = format!("microcanonical state of {model}: {chi:?}");
            emit(&wire, text, format);
            EXIT_YES
        }
        Err(microtherm_core::microcanonical::MicrocanonicalError::NotMicrocanonical(_)) => {
            let report = invariant_distribution_report(&model);
            let text = format!(
                "no microcanonical state: {} invariant distributions exhibited, unique = {}",
                report.witness_distributions.len(),
                report.unique
            );
            emit(&report, text, format);
            EXIT_NO_MICROCANONICAL
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_UNSUPPORTED_MODEL
        }
    }
}
