use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hedonic_core::bounds::{check_dominance_lemmas, Formula, MIN_DOMINANCE_TRIALS};
use hedonic_core::experiments::{
    parse_campaign_config, results_to_csv, results_to_json, run_campaign, CampaignOverrides, ExportFormat,
};
use hedonic_core::io::{game_to_json, partition_to_json, read_game, read_partition, read_text, write_text};
use hedonic_core::oracle;
use hedonic_core::stability::{check, evaluate_all, implied_concepts, Concept};
use hedonic_core::three_stage::run_three_stage;
use hedonic_core::{sample_game, AlgoConfig, Error, SeedSpec, UtilityDistribution};
use serde_json::json;

const EXIT_INPUT: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hedonic-lab",
    version,
    about = "Experiments on random additively separable hedonic games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random game and write it as JSON.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "uniform:-1:1")]
        dist: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a partition against one concept or all of them.
    Check {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        /// Concept name, or `all`.
        #[arg(long, default_value = "all")]
        concept: String,
        /// Exit with status 3 if any checked concept fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run the three-stage algorithm on a game file or a sampled game.
    RunAlg {
        #[arg(long, conflicts_with = "n")]
        game: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "uniform:-1:1")]
        dist: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        algo: AlgoFlags,
        /// Combined JSON (partition, report, concepts); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the partition alone, in the partition file format.
        #[arg(long)]
        out_partition: Option<PathBuf>,
        /// Also write the stage report alone.
        #[arg(long)]
        out_report: Option<PathBuf>,
    },
    /// Exhaustively search for a stable partition.
    Oracle {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        concept: String,
        /// Print the number of stable partitions instead of a witness.
        #[arg(long)]
        count: bool,
        #[arg(long, default_value_t = oracle::DEFAULT_LIMIT)]
        limit: usize,
    },
    /// Evaluate a closed-form bound, or run the dominance checks.
    Bounds {
        #[arg(long, required_unless_present = "verify_lemmas")]
        formula: Option<String>,
        /// Comma-separated `key=value` pairs.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        verify_lemmas: bool,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = MIN_DOMINANCE_TRIALS)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a Monte Carlo campaign and export the result table.
    Mc {
        /// Key-value campaign file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        kind: Option<String>,
        /// Comma-separated agent counts.
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        concepts: Option<String>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        algo: AlgoFlags,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

#[derive(Args, Default)]
struct AlgoFlags {
    /// Campaign-style key-value file with algorithm keys.
    #[arg(long = "algo-config")]
    algo_config: Option<PathBuf>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    compat: Option<f64>,
    /// `log:BASE:SCALE`, `default` or a fixed size.
    #[arg(long)]
    clique_size: Option<String>,
    /// `default` or a fixed number.
    #[arg(long)]
    remainder_cap: Option<String>,
}

impl AlgoFlags {
    fn overrides(&self) -> anyhow::Result<CampaignOverrides> {
        let mut o = CampaignOverrides::default();
        let mut set = |k: &str, v: Option<String>| -> anyhow::Result<()> {
            if let Some(v) = v {
                o.set(k, &v)?;
            }
            Ok(())
        };
        set("groups", self.groups.map(|v| v.to_string()))?;
        set("tau", self.tau.map(|v| v.to_string()))?;
        set("compat", self.compat.map(|v| v.to_string()))?;
        set("clique_size", self.clique_size.clone())?;
        set("remainder_cap", self.remainder_cap.clone())?;
        Ok(o)
    }

    fn config(&self) -> anyhow::Result<AlgoConfig> {
        let layered = match &self.algo_config {
            Some(path) => parse_campaign_config(&read_text(path)?)?,
            None => CampaignOverrides::default(),
        }
        .layer(self.overrides()?);
        let mut cfg = AlgoConfig::asymptotic();
        if let Some(g) = layered.groups {
            cfg.groups = g;
        }
        if let Some(t) = layered.tau {
            cfg.tau = t;
        }
        if let Some(c) = layered.compat {
            cfg.compat = c;
        }
        if let Some(s) = layered.clique_size {
            cfg.clique_size = s;
        }
        if let Some(r) = layered.remainder_cap {
            cfg.remainder_cap = r;
        }
        if let Some(r) = layered.merge_rate {
            cfg.merge_rate = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_text(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn concepts_arg(raw: &str) -> anyhow::Result<Vec<Concept>> {
    if raw.trim().eq_ignore_ascii_case("all") {
        return Ok(Concept::ALL.to_vec());
    }
    raw.split(',').map(|s| Ok(s.parse::<Concept>()?)).collect()
}

/// Returns `true` when a violation was detected.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Sample {
            n,
            dist,
            seed,
            stream,
            out,
        } => {
            let dist: UtilityDistribution = dist.parse()?;
            let game = sample_game(
                n,
                dist,
                SeedSpec {
                    master_seed: seed,
                    stream_index: stream,
                },
            )?;
            emit(out.as_deref(), &game_to_json(&game))?;
            Ok(false)
        }
        Command::Check {
            game,
            partition,
            concept,
            strict,
        } => {
            let game = read_game(&game)?;
            let partition = read_partition(&partition, game.n())?;
            let concepts = concepts_arg(&concept)?;
            let mut verdicts = serde_json::Map::new();
            let mut all_stable = true;
            for c in &concepts {
                let v = check(&game, &partition, *c)?;
                all_stable &= v.stable;
                verdicts.insert(c.name().into(), serde_json::to_value(v)?);
            }
            let broken = implied_concepts(&evaluate_all(&game, &partition)?.to_map())?;
            let report = json!({
                "verdicts": verdicts,
                "lattice_violations": broken.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
            });
            emit(None, &serde_json::to_string_pretty(&report)?)?;
            Ok(!broken.is_empty() || (strict && !all_stable))
        }
        Command::RunAlg {
            game,
            n,
            dist,
            seed,
            algo,
            out,
            out_partition,
            out_report,
        } => {
            let game = match (game, n) {
                (Some(path), _) => read_game(&path)?,
                (None, Some(n)) => sample_game(n, dist.parse()?, SeedSpec::new(seed))?,
                (None, None) => return Err(Error::InvalidInput("either --game or --n is required".into()).into()),
            };
            let cfg = algo.config()?;
            let output = run_three_stage(&game, &cfg)?;
            let flags = evaluate_all(&game, &output.partition)?;
            let report = json!({
                "partition": serde_json::from_str::<serde_json::Value>(&partition_to_json(&output.partition))?,
                "report": output.report,
                "concepts": flags.to_map().iter().map(|(c, v)| (c.name().to_string(), serde_json::Value::Bool(*v))).collect::<serde_json::Map<_, _>>(),
            });
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            if let Some(path) = out_partition {
                write_text(&path, &partition_to_json(&output.partition))?;
            }
            if let Some(path) = out_report {
                write_text(&path, &(serde_json::to_string_pretty(&output.report)? + "\n"))?;
            }
            Ok(false)
        }
        Command::Oracle {
            game,
            concept,
            count,
            limit,
        } => {
            let game = read_game(&game)?;
            let concept: Concept = concept.parse()?;
            if count {
                let c = oracle::count_stable_with_limit(&game, concept, limit)?;
                emit(None, &c.to_string())?;
            } else {
                match oracle::exists_stable_with_limit(&game, concept, limit)? {
                    Some(p) => emit(None, &partition_to_json(&p))?,
                    None => emit(None, &format!("no {concept} partition exists"))?,
                }
            }
            Ok(false)
        }
        Command::Bounds {
            formula,
            params,
            verify_lemmas,
            m,
            k,
            trials,
            seed,
        } => {
            if verify_lemmas {
                let report = check_dominance_lemmas(m, k, trials, SeedSpec::new(seed))?;
                emit(None, &serde_json::to_string_pretty(&report)?)?;
                return Ok(!report.passed());
            }
            let formula = Formula::parse(formula.as_deref().unwrap_or_default(), &params)?;
            let value = formula.eval()?;
            emit(None, &format!("{} = {}", value.description, value.value))?;
            Ok(false)
        }
        Command::Mc {
            config,
            kind,
            n,
            trials,
            dist,
            seed,
            concepts,
            k,
            threads,
            algo,
            out,
            format,
        } => {
            let base = match &config {
                Some(path) => parse_campaign_config(&read_text(path)?).with_context(|| path.display().to_string())?,
                None => CampaignOverrides::default(),
            };
            let mut flags = CampaignOverrides::default();
            let pairs = [
                ("kind", kind),
                ("n", n),
                ("trials", trials.map(|v| v.to_string())),
                ("dist", dist),
                ("seed", seed.map(|v| v.to_string())),
                ("concepts", concepts),
                ("k", k),
                ("threads", threads.map(|v| v.to_string())),
            ];
            for (key, value) in pairs {
                if let Some(v) = value {
                    flags.set(key, &v)?;
                }
            }
            let campaign = base.layer(algo.overrides()?).layer(flags).into_campaign()?;
            let format: ExportFormat = format.parse()?;
            let result = run_campaign(&campaign)?;
            let text = match format {
                ExportFormat::Csv => results_to_csv(&result.table)?,
                ExportFormat::Json => results_to_json(&result.table),
            };
            emit(out.as_deref(), &text)?;
            for v in &result.violations {
                eprintln!("violation: {v}");
            }
            Ok(!result.violations.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            // Unreadable files count as bad input too: every failure here traces back to arguments.
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
