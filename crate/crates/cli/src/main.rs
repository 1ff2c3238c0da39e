//! Single binary exposing the toolkit: classification, inductive families,
//! witness and Waring constructions, density sampling, word-map witnesses,
//! finite-field image enumeration, and the end-to-end counterexample
//! verifier.
//!
//! Every command prints one JSON document to stdout with a stable schema
//! (`"schema": "trimat/1"`), echoes the seed it ran with, and digests its
//! inputs so downstream scripts can tell reruns from new data.  Identical
//! arguments and inputs produce byte-identical output regardless of thread
//! count: all randomness is seeded and all parallel reductions are
//! order-independent.
//!
//! Exit codes: 0 when every verified/consistent flag in the payload is true,
//! 1 for computation failures (with a JSON error object), 2 for usage
//! errors.

mod counterexample;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use trimat_core::arith::FieldSpec;
use trimat_core::classify::{generic_evaluation, order};
use trimat_core::inductive::{extract_family, support_index, FamilyKey};
use trimat_core::ncpoly::{GroupWord, NcPolynomial};
use trimat_core::oracle::{enumerate_image, sample_image, SampleStats, DEFAULT_BUDGET};
use trimat_core::utm::{Stratum, UTMatrix};
use trimat_core::witness::{
    waring_decompose, witness, witness_order0, word_witness, WitnessResult,
};

#[derive(Parser)]
#[command(
    name = "trimat",
    version,
    about = "Polynomial maps on upper triangular matrix algebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized choice; echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel enumeration (falls back to TRIMAT_THREADS,
    /// then to the machine's parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write the JSON document to this file.
    #[arg(long, global = true, value_name = "FILE")]
    json_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Order of a polynomial: the largest t with p vanishing on T_t.
    Classify {
        /// Polynomial expression, e.g. "(x1*x2-x2*x1)^2".
        #[arg(long)]
        poly: String,
        /// Field to parse coefficients in (Q, C, or Fq:p).
        #[arg(long, default_value = "Q")]
        field: String,
        /// Largest dimension probed (default: degree + 1).
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Inductive coefficient family of p on T_m.
    Inductive {
        #[arg(long)]
        poly: String,
        /// Dimension of the triangular algebra.
        #[arg(long)]
        m: usize,
        /// Restrict output to one key, written "r1<r2<...;(g1,g2,...)".
        #[arg(long)]
        key: Option<String>,
        #[arg(long, default_value = "Q")]
        field: String,
    },
    /// Construct matrices u with p(u) equal to a target read from JSON.
    Witness {
        #[arg(long)]
        poly: String,
        /// Target matrix file, as written by the matrix JSON form.
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
    },
    /// Write a stratum target as a short sum of image values of p.
    Waring {
        #[arg(long)]
        poly: String,
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
    },
    /// Randomized image sampling: order-0 witness density or stratum
    /// histogram.
    Density {
        #[arg(long)]
        poly: String,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "C")]
        field: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Preimage of an invertible target under a group word.
    WordWitness {
        /// Group word expression, e.g. "x1^2" or "x1*x2*x1^-1*x2^-1".
        #[arg(long)]
        word: String,
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
    },
    /// Exhaustive image of p on T_m(F_q), with stratum comparison.
    ImageEnum {
        #[arg(long)]
        poly: String,
        #[arg(long)]
        m: usize,
        /// Prime modulus of the coefficient field.
        #[arg(long)]
        q: u64,
        /// Evaluation budget for the exhaustive scan.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Sample this many random tuples instead of enumerating.
        #[arg(long)]
        sample: Option<usize>,
        /// Include the full member list in the output.
        #[arg(long)]
        dump: bool,
    },
    /// Re-run the T_5 non-image analysis end to end.
    VerifyCounterexample {
        /// Number of random finite-field pairs sampled.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    let seed = cli.seed;
    let name = command_name(&cli.command);
    let (document, ok) = match dispatch(cli.command, seed) {
        Ok((payload, ok)) => {
            let mut doc = Map::new();
            doc.insert("schema".into(), json!("trimat/1"));
            doc.insert("command".into(), json!(name));
            doc.insert("seed".into(), json!(seed));
            for (k, v) in payload {
                doc.insert(k, v);
            }
            (Value::Object(doc), ok)
        }
        Err(message) => {
            eprintln!("trimat {name}: {message}");
            let doc = json!({
                "schema": "trimat/1",
                "command": name,
                "seed": seed,
                "error": { "message": message },
            });
            (doc, false)
        }
    };
    let rendered = format!(
        "{}\n",
        serde_json::to_string_pretty(&document).expect("JSON document serializes")
    );
    print!("{rendered}");
    if let Some(path) = cli.json_out {
        if let Err(e) = fs::write(&path, rendered) {
            eprintln!("trimat: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(if ok { 0 } else { 1 })
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Classify { .. } => "classify",
        Command::Inductive { .. } => "inductive",
        Command::Witness { .. } => "witness",
        Command::Waring { .. } => "waring",
        Command::Density { .. } => "density",
        Command::WordWitness { .. } => "word-witness",
        Command::ImageEnum { .. } => "image-enum",
        Command::VerifyCounterexample { .. } => "verify-counterexample",
    }
}

fn configure_threads(flag: Option<usize>) {
    let requested = flag.or_else(|| {
        std::env::var("TRIMAT_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = requested {
        // Ignore the error from a pool that is already running: threads can
        // only be pinned once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// Hex SHA-256 over the labeled inputs, so payloads carry a fingerprint of
/// exactly what they were computed from.
fn inputs_digest(parts: &[(&str, &str)]) -> String {
    let mut hasher = Sha256::new();
    for (label, value) in parts {
        hasher.update(label.as_bytes());
        hasher.update(b"=");
        hasher.update(value.as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

type Payload = (Map<String, Value>, bool);

fn dispatch(command: Command, seed: u64) -> Result<Payload, String> {
    match command {
        Command::Classify { poly, field, cap } => run_classify(&poly, &field, cap),
        Command::Inductive { poly, m, key, field } => run_inductive(&poly, m, key.as_deref(), &field),
        Command::Witness { poly, target } => run_witness(&poly, &target, seed),
        Command::Waring { poly, target } => run_waring(&poly, &target, seed),
        Command::Density {
            poly,
            m,
            field,
            trials,
        } => run_density(&poly, m, &field, trials, seed),
        Command::WordWitness { word, target } => run_word_witness(&word, &target),
        Command::ImageEnum {
            poly,
            m,
            q,
            budget,
            sample,
            dump,
        } => run_image_enum(&poly, m, q, budget, sample, dump, seed),
        Command::VerifyCounterexample { samples } => counterexample::run(seed, samples),
    }
}

fn run_classify(poly: &str, field: &str, cap: Option<usize>) -> Result<Payload, String> {
    let spec = FieldSpec::parse(field).map_err(|e| e.to_string())?;
    let p = NcPolynomial::parse(poly, spec).map_err(|e| e.to_string())?;
    let report = order(&p, cap).map_err(|e| e.to_string())?;
    let mut payload = Map::new();
    payload.insert(
        "inputs_digest".into(),
        json!(inputs_digest(&[
            ("poly", poly),
            ("field", field),
            ("cap", &format!("{cap:?}")),
        ])),
    );
    payload.insert("order".into(), json!(report.order));
    payload.insert(
        "witness_position".into(),
        json!([report.witness_position.0, report.witness_position.1]),
    );
    payload.insert(
        "witness_entry".into(),
        json!(report.witness_entry.to_string()),
    );
    payload.insert("nvars".into(), json!(p.nvars()));
    payload.insert("degree".into(), json!(p.degree()));
    Ok((payload, true))
}

/// Parse "r1<r2<...;(g1,g2,...)" into a family key.
fn parse_family_key(text: &str) -> Result<FamilyKey, String> {
    let (chain_text, slots_text) = text
        .split_once(';')
        .ok_or_else(|| format!("key {text:?} must look like \"1<2<4;(1,2)\""))?;
    let chain: Vec<usize> = chain_text
        .split('<')
        .map(|s| s.trim().parse().map_err(|_| format!("bad row in {text:?}")))
        .collect::<Result<_, _>>()?;
    let inner = slots_text
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| format!("slots in {text:?} must be parenthesized"))?;
    let slots: Vec<usize> = inner
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad slot in {text:?}")))
        .collect::<Result<_, _>>()?;
    if chain.len() != slots.len() + 1 {
        return Err(format!(
            "key {text:?}: a chain of {} rows needs {} slots",
            chain.len(),
            chain.len().saturating_sub(1)
        ));
    }
    Ok(FamilyKey { chain, slots })
}

fn run_inductive(
    poly: &str,
    m: usize,
    key: Option<&str>,
    field: &str,
) -> Result<Payload, String> {
    let spec = FieldSpec::parse(field).map_err(|e| e.to_string())?;
    let p = NcPolynomial::parse(poly, spec).map_err(|e| e.to_string())?;
    if m < 1 {
        return Err("dimension m must be at least 1".into());
    }
    let family = extract_family(&p, m);
    let mut payload = Map::new();
    payload.insert(
        "inputs_digest".into(),
        json!(inputs_digest(&[
            ("poly", poly),
            ("m", &m.to_string()),
            ("key", &format!("{key:?}")),
            ("field", field),
        ])),
    );
    payload.insert("m".into(), json!(m));
    payload.insert("nvars".into(), json!(family.nvars()));
    match key {
        Some(text) => {
            let parsed = parse_family_key(text)?;
            let coefficient = family
                .coefficient(&parsed)
                .map(|q| q.to_string())
                .unwrap_or_else(|| "0".into());
            payload.insert("chain".into(), json!(parsed.chain));
            payload.insert("slots".into(), json!(parsed.slots));
            payload.insert("coefficient".into(), json!(coefficient));
        }
        None => {
            let keys: Vec<Value> = family
                .iter()
                .map(|(k, q)| {
                    json!({
                        "chain": k.chain,
                        "slots": k.slots,
                        "coefficient": q.to_string(),
                    })
                })
                .collect();
            payload.insert("nonzero_coefficients".into(), json!(family.len()));
            payload.insert("family".into(), json!(keys));
        }
    }
    Ok((payload, true))
}

fn read_target(path: &PathBuf) -> Result<(UTMatrix<trimat_core::arith::FieldElement>, FieldSpec, String), String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read target {}: {e}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| format!("target is not JSON: {e}"))?;
    let (x, field) = UTMatrix::from_json(&value).map_err(|e| e.to_string())?;
    Ok((x, field, text))
}

fn witness_payload(result: &WitnessResult, field: &FieldSpec) -> Vec<(String, Value)> {
    vec![
        ("branch".into(), json!(result.branch.name())),
        ("verified".into(), json!(result.verified)),
        ("residual".into(), json!(result.residual)),
        (
            "u".into(),
            json!(result.u.iter().map(|ui| ui.to_json(field)).collect::<Vec<_>>()),
        ),
    ]
}

fn run_witness(poly: &str, target: &PathBuf, seed: u64) -> Result<Payload, String> {
    let (x, field, raw) = read_target(target)?;
    let p = NcPolynomial::parse(poly, field).map_err(|e| e.to_string())?;
    let mut payload = Map::new();
    payload.insert(
        "inputs_digest".into(),
        json!(inputs_digest(&[("poly", poly), ("target", &raw)])),
    );
    // Order zero (nonzero on scalars) goes to the diagonalization solver;
    // positive order to the stratum constructions.
    let order_zero = !generic_evaluation(&p, 1).1.is_zero_matrix();
    let result = if order_zero {
        payload.insert("order".into(), json!(0));
        witness_order0(&p, &x, &field).map_err(|e| e.to_string())?
    } else {
        let report = order(&p, None).map_err(|e| e.to_string())?;
        payload.insert("order".into(), json!(report.order));
        witness(&p, &x, &report, seed).map_err(|e| e.to_string())?
    };
    let ok = result.verified;
    for (k, v) in witness_payload(&result, &field) {
        payload.insert(k, v);
    }
    Ok((payload, ok))
}

fn run_waring(poly: &str, target: &PathBuf, seed: u64) -> Result<Payload, String> {
    let (x, field, raw) = read_target(target)?;
    let p = NcPolynomial::parse(poly, field).map_err(|e| e.to_string())?;
    let report = order(&p, None).map_err(|e| e.to_string())?;
    let support = support_index(&p, report.order).map_err(|e| e.to_string())?;
    let decomposition =
        waring_decompose(&p, &x, &report, &support, seed).map_err(|e| e.to_string())?;
    let mut payload = Map::new();
    payload.insert(
        "inputs_digest".into(),
        json!(inputs_digest(&[("poly", poly), ("target", &raw)])),
    );
    payload.insert("order".into(), json!(report.order));
    payload.insert("d".into(), json!(decomposition.d()));
    let ok = decomposition.summands.iter().all(|(_, w)| w.verified);
    let summands: Vec<Value> = decomposition
        .summands
        .iter()
        .map(|(xa, w)| {
            let mut entry = Map::new();
            entry.insert("target".into(), xa.to_json(&field));
            for (k, v) in witness_payload(w, &field) {
                entry.insert(k, v);
            }
            Value::Object(entry)
        })
        .collect();
    payload.insert("summands".into(), json!(summands));
    payload.insert("verified".into(), json!(ok));
    Ok((payload, ok))
}

fn run_density(
    poly: &str,
    m: usize,
    field: &str,
    trials: usize,
    seed: u64,
) -> Result<Payload, String> {
    let spec = FieldSpec::parse(field).map_err(|e| e.to_string())?;
    let p = NcPolynomial::parse(poly, spec).map_err(|e| e.to_string())?;
    if trials == 0 {
        return Err("at least one trial is required".into());
    }
    let stats = sample_image(&p, m, &spec, trials, seed);
    let mut payload = Map::new();
    payload.insert(
        "inputs_digest".into(),
        json!(inputs_digest(&[
            ("poly", poly),
            ("m", &m.to_string()),
            ("field", field),
            ("trials", &trials.to_string()),
        ])),
    );
    let ok = match stats {
        SampleStats::Order0 {
            trials,
            successes,
            max_residual,
        } => {
            payload.insert("mode".into(), json!("order0-density"));
            payload.insert("trials".into(), json!(trials));
            payload.insert("successes".into(), json!(successes));
            payload.insert(
                "success_rate".into(),
                json!(successes as f64 / trials as f64),
            );
            payload.insert("max_residual".into(), json!(max_residual));
            successes == trials
        }
        SampleStats::PositiveOrder {
            trials,
            level_histogram,
        } => {
            payload.insert("mode".into(), json!("stratum-histogram"));
            payload.insert("trials".into(), json!(trials));
            let histogram: Map<String, Value> = level_histogram
                .iter()
                .map(|(level, count)| (level.to_string(), json!(count)))
                .collect();
            payload.insert("level_histogram".into(), json!(histogram));
            true
        }
    };
    payload.insert("all_succeeded".into(), json!(ok));
    Ok((payload, ok))
}

fn run_word_witness(word: &str, target: &PathBuf) -> Result<Payload, String> {
    let (x, field, raw) = read_target(target)?;
    let w = GroupWord::parse(word).map_err(|e| e.to_string())?;
    let result = word_witness(&w, &x, &field).map_err(|e| e.to_string())?;
    let mut payload = Map::new();
    payload.insert(
        "inputs_digest".into(),
        json!(inputs_digest(&[("word", word), ("target", &raw)])),
    );
    let ok = result.verified;
    for (k, v) in witness_payload(&result, &field) {
        payload.insert(k, v);
    }
    Ok((payload, ok))
}

fn run_image_enum(
    poly: &str,
    m: usize,
    q: u64,
    budget: u64,
    sample: Option<usize>,
    dump: bool,
    seed: u64,
) -> Result<Payload, String> {
    let spec = FieldSpec::parse(&format!("Fq:{q}")).map_err(|e| e.to_string())?;
    let p = NcPolynomial::parse(poly, spec).map_err(|e| e.to_string())?;
    let mut payload = Map::new();
    payload.insert(
        "inputs_digest".into(),
        json!(inputs_digest(&[
            ("poly", poly),
            ("m", &m.to_string()),
            ("q", &q.to_string()),
            ("budget", &budget.to_string()),
            ("sample", &format!("{sample:?}")),
        ])),
    );
    payload.insert("m".into(), json!(m));
    payload.insert("q".into(), json!(q));
    payload.insert("finite_field_evidence".into(), json!(true));

    if let Some(trials) = sample {
        if trials == 0 {
            return Err("at least one sample trial is required".into());
        }
        let stats = sample_image(&p, m, &spec, trials, seed);
        payload.insert("mode".into(), json!("sample"));
        match stats {
            SampleStats::PositiveOrder {
                trials,
                level_histogram,
            } => {
                payload.insert("trials".into(), json!(trials));
                let histogram: Map<String, Value> = level_histogram
                    .iter()
                    .map(|(level, count)| (level.to_string(), json!(count)))
                    .collect();
                payload.insert("level_histogram".into(), json!(histogram));
            }
            SampleStats::Order0 {
                trials,
                successes,
                max_residual,
            } => {
                payload.insert("trials".into(), json!(trials));
                payload.insert("successes".into(), json!(successes));
                payload.insert("max_residual".into(), json!(max_residual));
            }
        }
        return Ok((payload, true));
    }

    let image = enumerate_image(&p, m, q, budget).map_err(|e| e.to_string())?;
    payload.insert("mode".into(), json!("exhaustive"));
    payload.insert("cardinality".into(), json!(image.cardinality()));
    payload.insert("evaluation_count".into(), json!(image.evaluation_count()));

    // The containment of the image in the predicted stratum is
    // characteristic-free, so it is checked against the order over Q.
    let p_rational =
        NcPolynomial::parse(poly, FieldSpec::Rational).map_err(|e| e.to_string())?;
    let report = order(&p_rational, None).map_err(|e| e.to_string())?;
    let t = report.order;
    payload.insert("order_over_rationals".into(), json!(t));
    let level = (t as i64 - 1).min(m as i64 - 1);
    let stratum = Stratum::new(m, level).map_err(|e| e.to_string())?;
    let contained = image.members().all(|y| stratum.contains(&y));
    let stratum_size = (q as u128).pow(stratum.free_positions().len() as u32);
    let equals = contained && u128::from(image.cardinality()) == stratum_size;
    payload.insert("contained_in_predicted_stratum".into(), json!(contained));
    payload.insert("equals_predicted_stratum".into(), json!(equals));
    if dump {
        let field = FieldSpec::Prime(q);
        let members: Vec<Value> = image.members().map(|y| y.to_json(&field)).collect();
        payload.insert("members".into(), json!(members));
    }
    Ok((payload, contained))
}
