//! Command-line surface of the matching engine.
//!
//! Exit codes: 0 on success / all checks passing, 1 when verification or
//! probing finds counterexamples (they are printed as JSON), 2 on usage,
//! IO or validation errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hiermatch_core::aggregate::{choose_aggregate, AuditLevel, RuleVariant};
use hiermatch_core::category::SeatPool;
use hiermatch_core::contract::Contract;
use hiermatch_core::cop::{run_cop, CopOptions, ProposalOrder};
use hiermatch_core::instance::{Instance, TiebreakPolicy, ValidateOptions, Validated};
use hiermatch_core::io::{
    self, aggregate_fill_report, load_instance, load_outcome, matching_from_file, outcome_to_file,
    save_outcome, to_canonical_json, Provenance,
};
use hiermatch_core::monitor::{check_log_invariants, monitor_offer_process};
use hiermatch_core::oracles::{
    check_fairness, check_justified_envy, check_stability, fuzz_choice_properties,
    probe_strategyproofness, AuditReport, CopMechanism, FuzzParams, HierarchicalRule, ProbeError,
};
use hiermatch_core::sampler::{generate_raw_instance, InstanceParams, PoolParams};

#[derive(Parser)]
#[command(
    name = "hiermatch",
    version,
    about = "Reservation matching: hierarchical horizontal quotas, vertical categories, cumulative offers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instance document and report every violated constraint.
    Validate {
        instance: PathBuf,
        /// Break score ties by lexicographic id instead of rejecting them.
        #[arg(long, value_parser = ["reject", "id"], default_value = "reject")]
        tiebreak: String,
    },
    /// Run one institution's aggregate choice over all acceptable contracts
    /// and print the full selection trace.
    Choose {
        instance: PathBuf,
        #[arg(long)]
        institution: String,
        /// Refill vacant OBC seats by open competition at the end.
        #[arg(long)]
        transfer: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the full matching via the cumulative offer mechanism.
    Match {
        instance: PathBuf,
        #[arg(long)]
        transfer: bool,
        /// Proposal order: `id` or `random:<seed>`.
        #[arg(long, default_value = "id")]
        order: String,
        /// Record the complete offer-process log in the outcome.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit an outcome document against its instance.
    Verify {
        instance: PathBuf,
        outcome: PathBuf,
        /// Enumerate blocking sets of up to three contracts (small instances
        /// only) instead of singletons.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Fuzz the choice-rule axioms and probe strategy-proofness.
    Probe {
        instance: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on mechanism re-runs during misreport enumeration.
        #[arg(long, default_value_t = 2_000_000)]
        cap: u64,
    },
    /// Generate a random valid instance.
    Gen {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        individuals: u32,
        #[arg(long, default_value_t = 2)]
        institutions: u32,
        #[arg(long, default_value_t = 3)]
        types: u32,
        #[arg(long, default_value_t = 4)]
        max_capacity: u32,
        #[arg(long, default_value_t = 2)]
        max_quota: u32,
        #[arg(long, default_value_t = 0.5)]
        untyped_share: f64,
    },
}

fn default_seed() -> u64 {
    std::env::var("HIERMATCH_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path, tiebreak: TiebreakPolicy) -> Result<Validated, String> {
    let opts = ValidateOptions { tiebreak };
    load_instance(path, &opts).map_err(|e| match e {
        io::LoadError::Validation { path, errors } => {
            let lines: Vec<String> = errors.iter().map(|e| format!("  {e}")).collect();
            format!("{path}: invalid instance\n{}", lines.join("\n"))
        }
        other => other.to_string(),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<bool, String> {
    match command {
        Command::Validate { instance, tiebreak } => {
            let policy = if tiebreak == "id" {
                TiebreakPolicy::ById
            } else {
                TiebreakPolicy::Reject
            };
            let validated = load(&instance, policy)?;
            for note in &validated.tiebreaks {
                println!(
                    "note: tie at {} (score {}) resolved by id: {}",
                    note.institution,
                    note.score,
                    note.resolved_order.join(" > ")
                );
            }
            for warning in &validated.warnings {
                println!("warning: {}: {}", warning.code, warning.message);
            }
            println!(
                "ok: {} individuals, {} institutions, {} horizontal types",
                validated.instance.n_individuals(),
                validated.instance.n_institutions(),
                validated.instance.forest.len()
            );
            Ok(true)
        }

        Command::Choose {
            instance,
            institution,
            transfer,
            out,
        } => {
            let validated = load(&instance, TiebreakPolicy::Reject)?;
            let inst = &validated.instance;
            let s = inst
                .institution_by_name(&institution)
                .ok_or_else(|| format!("unknown institution `{institution}`"))?;
            let variant = if transfer {
                RuleVariant::Transfer
            } else {
                RuleVariant::Plain
            };
            let offered: Vec<Contract> = inst
                .acceptable_universe()
                .into_iter()
                .filter(|c| c.institution == s)
                .collect();
            let outcome = choose_aggregate(inst, s, &offered, variant, AuditLevel::Full)
                .map_err(|e| e.to_string())?;
            let report = choose_report(inst, s, &offered, &outcome, variant);
            emit(out.as_deref(), &to_canonical_json(&report))?;
            Ok(true)
        }

        Command::Match {
            instance,
            transfer,
            order,
            log,
            out,
        } => {
            let validated = load(&instance, TiebreakPolicy::Reject)?;
            let inst = &validated.instance;
            let variant = if transfer {
                RuleVariant::Transfer
            } else {
                RuleVariant::Plain
            };
            let (proposal_order, seed) = parse_order(&order)?;
            let opts = CopOptions::new(variant)
                .with_order(proposal_order)
                .with_log(log);
            let outcome = run_cop(inst, &opts).map_err(|e| e.to_string())?;
            let provenance = Provenance {
                command: "match".into(),
                variant: Some(variant.as_str().into()),
                order: Some(order.clone()),
                seed,
                flags: [("log".to_string(), log.to_string())].into_iter().collect(),
            };
            let file = outcome_to_file(inst, &outcome, variant, provenance);
            match out {
                Some(path) => {
                    save_outcome(&path, &file).map_err(|e| e.to_string())?;
                    println!(
                        "matched {} of {} individuals; outcome written to {}",
                        file.matching.len(),
                        inst.n_individuals(),
                        path.display()
                    );
                }
                None => print!("{}", to_canonical_json(&file)),
            }
            Ok(true)
        }

        Command::Verify {
            instance,
            outcome,
            exhaustive,
        } => {
            let validated = load(&instance, TiebreakPolicy::Reject)?;
            let inst = &validated.instance;
            let file = load_outcome(&outcome).map_err(|e| e.to_string())?;
            let matching = matching_from_file(inst, &file).map_err(|e| e.to_string())?;
            let variant = file
                .provenance
                .variant
                .as_deref()
                .and_then(RuleVariant::parse)
                .unwrap_or(RuleVariant::Plain);

            let mut reports: Vec<AuditReport> = Vec::new();
            reports.push(
                check_stability(inst, &matching, variant, exhaustive).map_err(|e| e.to_string())?,
            );
            reports.push(check_justified_envy(inst, &matching));

            // fill reports must reproduce from the matching alone
            let (expected_fills, _) = io::fill_reports(inst, &matching, variant);
            let mut fill_report = AuditReport::new("fill-report-consistency");
            if expected_fills != file.fill_reports {
                fill_report.push(
                    "recorded fill reports disagree with recomputation",
                    json!({
                        "expected": expected_fills,
                        "recorded": file.fill_reports,
                    }),
                );
            }
            reports.push(fill_report);

            if let Some(log_file) = &file.offer_log {
                let log = io::file_to_log(inst, log_file).map_err(|e| e.to_string())?;
                check_log_invariants(inst, &log).map_err(|e| e.to_string())?;
                let mut monitor_report = AuditReport::new("offer-process-conditions");
                for v in monitor_offer_process(inst, &log).map_err(|e| e.to_string())? {
                    monitor_report.push(
                        format!(
                            "condition ({}) violated at {} stage {} step {}",
                            v.condition,
                            inst.institution(v.institution).name,
                            v.stage,
                            v.step
                        ),
                        json!({ "detail": v.detail }),
                    );
                }
                reports.push(monitor_report);

                // fairness of every final cumulative choice
                let mut fairness = AuditReport::new("fair-choice");
                for s in inst.institution_ids() {
                    let evals = &log.evals[s.idx()];
                    if evals.is_empty() {
                        continue;
                    }
                    let offered: Vec<Contract> = evals.iter().map(|e| e.proposed).collect();
                    let held = log.final_held[s.idx()].clone();
                    fairness.merge(check_fairness(inst, s, &offered, &held));
                }
                reports.push(fairness);
            }

            Ok(print_reports(&reports))
        }

        Command::Probe {
            instance,
            trials,
            seed,
            cap,
        } => {
            let validated = load(&instance, TiebreakPolicy::Reject)?;
            let inst = &validated.instance;
            let seed = seed.unwrap_or_else(default_seed);
            let mut reports: Vec<AuditReport> = Vec::new();

            let fuzz = FuzzParams {
                pool: PoolParams {
                    max_types: (inst.forest.len() as u32).max(2),
                    ..PoolParams::default()
                },
                trials,
                seed,
            };
            reports.push(fuzz_choice_properties(&HierarchicalRule, &fuzz));
            reports.push(fairness_fuzz(inst, trials, seed));

            for variant in [RuleVariant::Plain, RuleVariant::Transfer] {
                let mech = CopMechanism { variant };
                match probe_strategyproofness(inst, &mech, cap) {
                    Ok(report) => reports.push(report),
                    Err(ProbeError::EnumerationCapExceeded { needed, cap }) => {
                        println!(
                            "[SKIP] strategy-proofness[{}]: {needed} runs exceed the cap of {cap}",
                            mech_name(variant)
                        );
                    }
                }
            }
            Ok(print_reports(&reports))
        }

        Command::Gen {
            seed,
            out,
            individuals,
            institutions,
            types,
            max_capacity,
            max_quota,
            untyped_share,
        } => {
            let seed = seed.unwrap_or_else(default_seed);
            let params = InstanceParams {
                individuals,
                institutions,
                max_types: types,
                max_capacity,
                max_quota,
                untyped_share,
                ..InstanceParams::default()
            };
            let mut raw = generate_raw_instance(&params, seed).map_err(|e| e.to_string())?;
            raw.generator = Some(json!({
                "command": "gen",
                "seed": seed,
                "individuals": individuals,
                "institutions": institutions,
                "types": types,
                "max_capacity": max_capacity,
                "max_quota": max_quota,
                "untyped_share": untyped_share,
            }));
            std::fs::write(&out, to_canonical_json(&raw))
                .map_err(|e| format!("{}: {e}", out.display()))?;
            println!("wrote {} (seed {seed})", out.display());
            Ok(true)
        }
    }
}

fn mech_name(variant: RuleVariant) -> &'static str {
    match variant {
        RuleVariant::Plain => "cumulative-offer",
        RuleVariant::Transfer => "cumulative-offer-transfer",
    }
}

fn parse_order(order: &str) -> Result<(ProposalOrder, Option<u64>), String> {
    if order == "id" {
        return Ok((ProposalOrder::ById, None));
    }
    if order == "random" {
        let seed = default_seed();
        return Ok((ProposalOrder::Random(seed), Some(seed)));
    }
    if let Some(seed) = order.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| format!("invalid seed in `--order {order}`"))?;
        return Ok((ProposalOrder::Random(seed), Some(seed)));
    }
    Err(format!(
        "invalid `--order {order}`: expected `id` or `random:<seed>`"
    ))
}

fn choose_report(
    instance: &Instance,
    s: hiermatch_core::ids::InstitutionId,
    offered: &[Contract],
    outcome: &hiermatch_core::aggregate::AggregateOutcome,
    variant: RuleVariant,
) -> serde_json::Value {
    let seat_pool_of = |c: &Contract| -> SeatPool {
        outcome
            .snapshots
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .find(|snap| snap.chosen.contains(c))
            .map(|snap| snap.pool)
            .unwrap_or(SeatPool::Vertical(c.category))
    };
    let traces: Vec<serde_json::Value> = outcome
        .traces
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|(pool, trace)| {
            json!({
                "pool": pool.as_str(),
                "levels": trace
                    .levels
                    .iter()
                    .map(|level| json!({
                        "level": level.level,
                        "selections": level
                            .selections
                            .iter()
                            .map(|sel| json!({
                                "type": instance.forest.name(sel.htype),
                                "quota_remaining": sel.quota_remaining,
                                "quota_applied": sel.quota_applied,
                                "clamped": sel.clamped,
                                "selected": sel
                                    .selected
                                    .iter()
                                    .map(|i| instance.individual(*i).name.clone())
                                    .collect::<Vec<_>>(),
                            }))
                            .collect::<Vec<_>>(),
                    }))
                    .collect::<Vec<_>>(),
                "merit_phase": trace
                    .merit_phase
                    .iter()
                    .map(|i| instance.individual(*i).name.clone())
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "institution": instance.institution(s).name,
        "variant": variant.as_str(),
        "offered": offered.len(),
        "chosen": outcome
            .chosen
            .iter()
            .map(|c| json!({
                "individual": instance.individual(c.individual).name,
                "category": c.category.as_str(),
                "seat_pool": seat_pool_of(c).as_str(),
            }))
            .collect::<Vec<_>>(),
        "fill_report": aggregate_fill_report(instance, s, outcome),
        "traces": traces,
    })
}

fn fairness_fuzz(instance: &Instance, trials: u32, seed: u64) -> AuditReport {
    let mut report = AuditReport::new("aggregate-fairness");
    let acceptable = instance.acceptable_universe();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00FA_1235);
    for _ in 0..trials.min(2000) {
        for s in instance.institution_ids() {
            let offered: Vec<Contract> = acceptable
                .iter()
                .copied()
                .filter(|c| c.institution == s && rng.random_bool(0.6))
                .collect();
            for variant in [RuleVariant::Plain, RuleVariant::Transfer] {
                let outcome = choose_aggregate(instance, s, &offered, variant, AuditLevel::Fast)
                    .expect("valid offer sets");
                report.merge(check_fairness(instance, s, &offered, &outcome.chosen));
            }
        }
    }
    report
}

fn print_reports(reports: &[AuditReport]) -> bool {
    let mut all_pass = true;
    for report in reports {
        if report.passed() {
            println!("[PASS] {}", report.property);
        } else {
            all_pass = false;
            println!(
                "[FAIL] {} ({} counterexample(s))",
                report.property,
                report.counterexamples.len()
            );
            print!(
                "{}",
                to_canonical_json(&json!({
                    "property": report.property,
                    "counterexamples": report.counterexamples,
                }))
            );
        }
    }
    all_pass
}
