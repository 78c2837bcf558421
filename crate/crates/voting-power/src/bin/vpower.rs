//! Command-line front end: every analysis as a reproducible command.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 validation failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::One;

use voting_power::data::{builtin_dataset, load_dataset, Dataset, Year, BUILTIN_DATASETS};
use voting_power::engine::{
    brute_force_banzhaf_scores, brute_force_shapley, compute_index, shapley_shubik, IndexKind,
};
use voting_power::game::{member_threshold, QuotaRule, Threshold, VotingGame};
use voting_power::scenario::{
    blocking_correction_delta, change_matrix, exit_support_summary, BudgetModel, ExitOptions,
    ExitScenario,
};
use voting_power::table::{
    emit_blocking_analysis, emit_change_matrix, emit_exit_report, emit_power_vector,
    emit_support_summary, percent_string, OutputFormat,
};

#[derive(Parser)]
#[command(
    name = "vpower",
    about = "Exact voting-power analysis for weighted voting bodies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Builtin dataset name (eu28, eu27_postbrexit, eu27_precroatia,
    /// eec1958) or a path to a CSV file
    #[arg(long, default_value = "eu28")]
    dataset: String,
    /// Population year: 2015, 2020, or 2030
    #[arg(long, default_value = "2015")]
    year: String,
    /// Power index: ss, banzhaf, banzhaf-score, or banzhaf-value
    #[arg(long, default_value = "ss")]
    index: String,
    /// Apply the four-member blocking-minority rule
    #[arg(long)]
    blocking_minority: bool,
    /// Budget model: renormalized or cumulative
    #[arg(long, default_value = "renormalized")]
    budget_model: String,
    /// Output format: markdown, csv, or json
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Power indices for a dataset's voting game
    Compute(Common),
    /// One member leaving: indices before/after, budget-adjusted change
    Exit {
        #[command(flatten)]
        common: Common,
        /// Code of the departing member
        #[arg(long)]
        leaver: String,
        /// Members that already left, in order (budget chains)
        #[arg(long = "also-departed", value_delimiter = ',')]
        also_departed: Vec<String>,
        /// Post-exit absolute quota for fixed-weight games
        #[arg(long)]
        quota: Option<u64>,
    },
    /// Change matrix over every possible single leaver
    Matrix(Common),
    /// Blocking-minority analysis: disarmed coalitions and index shifts
    Blockers(Common),
    /// Per-leaver support summary: who gains, and do the winners reach
    /// the baseline thresholds
    Summary(Common),
    /// Self-check: engine vs brute-force oracle, plus dataset integrity
    Validate,
    /// Regenerate every reference table and figure dataset
    Reproduce {
        /// Target directory
        #[arg(long, default_value = "paper-tables")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/version through the error path too
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Compute(common) => {
            let ctx = Context::from_common(&common)?;
            let game = ctx
                .dataset
                .game(&ctx.dataset.codes(), ctx.year, ctx.blocking, None)
                .map_err(|e| e.to_string())?;
            let vector = compute_index(&game, ctx.index).map_err(|e| e.to_string())?;
            ctx.write(&emit_power_vector(&vector, ctx.format))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Exit {
            common,
            leaver,
            also_departed,
            quota,
        } => {
            let ctx = Context::from_common(&common)?;
            let baseline: Vec<String> = ctx
                .dataset
                .codes()
                .into_iter()
                .filter(|c| !also_departed.contains(c))
                .collect();
            let scenario = ExitScenario {
                baseline,
                already_departed: also_departed,
                leaver,
                options: ExitOptions {
                    year: ctx.year,
                    index_kind: ctx.index,
                    budget_model: ctx.budget_model,
                    blocking_rule: ctx.blocking,
                    quota_override: quota,
                },
            };
            let report = scenario.run(&ctx.dataset).map_err(|e| e.to_string())?;
            ctx.write(&emit_exit_report(&report, ctx.format))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Matrix(common) => {
            let ctx = Context::from_common(&common)?;
            let matrix = ctx.matrix()?;
            ctx.write(&emit_change_matrix(&matrix, ctx.format))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Blockers(common) => {
            let ctx = Context::from_common(&common)?;
            let analysis = blocking_correction_delta(&ctx.dataset, &ctx.dataset.codes(), ctx.year)
                .map_err(|e| e.to_string())?;
            ctx.write(&emit_blocking_analysis(&analysis, ctx.format))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Summary(common) => {
            let ctx = Context::from_common(&common)?;
            let matrix = ctx.matrix()?;
            let summary = exit_support_summary(&ctx.dataset, &matrix).map_err(|e| e.to_string())?;
            ctx.write(&emit_support_summary(&summary, ctx.format))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => validate(),
        Command::Reproduce { out_dir } => {
            reproduce(&out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

struct Context {
    dataset: Dataset,
    year: Year,
    index: IndexKind,
    blocking: bool,
    budget_model: BudgetModel,
    format: OutputFormat,
    out: Option<PathBuf>,
}

impl Context {
    fn from_common(common: &Common) -> Result<Context, String> {
        let dataset = resolve_dataset(&common.dataset)?;
        for warning in dataset.warnings() {
            eprintln!("warning: {}: {warning}", dataset.name);
        }
        let index = match common.index.as_str() {
            "ss" | "shapley-shubik" => IndexKind::ShapleyShubik,
            "banzhaf" => IndexKind::BanzhafNormalized,
            "banzhaf-score" => IndexKind::BanzhafRawScore,
            "banzhaf-value" => IndexKind::BanzhafValue,
            other => return Err(format!("unknown index {other:?}")),
        };
        Ok(Context {
            dataset,
            year: common.year.parse().map_err(|e| format!("{e}"))?,
            index,
            blocking: common.blocking_minority,
            budget_model: common.budget_model.parse().map_err(|e| format!("{e}"))?,
            format: common.format.parse().map_err(|e| format!("{e}"))?,
            out: common.out.clone(),
        })
    }

    fn matrix(&self) -> Result<voting_power::ChangeMatrix, String> {
        let options = ExitOptions {
            year: self.year,
            index_kind: self.index,
            budget_model: self.budget_model,
            blocking_rule: self.blocking,
            quota_override: None,
        };
        change_matrix(&self.dataset, &self.dataset.codes(), &[], &options)
            .map_err(|e| e.to_string())
    }

    fn write(&self, text: &str) -> Result<(), String> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| format!("cannot write {}: {e}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// Builtin name, literal path, or `$VPOWER_DATA_DIR/<name>.csv`.
fn resolve_dataset(selector: &str) -> Result<Dataset, String> {
    if BUILTIN_DATASETS.contains(&selector) {
        return builtin_dataset(selector).map_err(|e| e.to_string());
    }
    let direct = Path::new(selector);
    if direct.exists() {
        return load_dataset(direct).map_err(|e| format!("{selector}: {e}"));
    }
    if let Ok(dir) = std::env::var("VPOWER_DATA_DIR") {
        let candidate = Path::new(&dir).join(format!("{selector}.csv"));
        if candidate.exists() {
            return load_dataset(&candidate).map_err(|e| format!("{}: {e}", candidate.display()));
        }
    }
    Err(format!(
        "unknown dataset {selector:?}: not a builtin ({}), not a file, \
         and not found under $VPOWER_DATA_DIR",
        BUILTIN_DATASETS.join(", ")
    ))
}

/// Deterministic xorshift for the oracle battery (no external RNG needed).
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

fn validate() -> Result<ExitCode, String> {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        if ok {
            println!("ok   {name}");
        } else {
            println!("FAIL {name}: {detail}");
            failures += 1;
        }
    };

    // builtin dataset integrity
    let eu28 = builtin_dataset("eu28").map_err(|e| e.to_string())?;
    check(
        "eu28 population total (2015)",
        eu28.population_total(Year::Y2015) == 5082,
        format!("got {}", eu28.population_total(Year::Y2015)),
    );
    let de = eu28.member("DE").map_err(|e| e.to_string())?;
    check(
        "eu28 Germany row",
        de.population(Year::Y2015) == 807
            && de.contribution_share == num_rational::Ratio::new(2008, 10_000),
        format!(
            "pop {} share {}",
            de.population(Year::Y2015),
            de.contribution_share
        ),
    );

    // member thresholds
    let q = num_rational::Ratio::new(55u64, 100);
    for (n, want) in [(28usize, 16usize), (27, 15), (26, 15), (25, 14)] {
        check(
            &format!("member threshold {n} -> {want}"),
            member_threshold(n, q, None) == want,
            format!("got {}", member_threshold(n, q, None)),
        );
    }

    // EEC golden fractions
    let eec = builtin_dataset("eec1958").map_err(|e| e.to_string())?;
    let game = eec
        .game(&eec.codes(), Year::Y2015, false, None)
        .map_err(|e| e.to_string())?;
    let ss = shapley_shubik(&game).map_err(|e| e.to_string())?;
    let want = BigRational::new(7.into(), 30.into());
    check(
        "EEC 1958 SS France = 7/30",
        ss.get("FR") == Some(&want),
        format!("got {:?}", ss.get("FR")),
    );

    // engine vs brute-force oracle on random weighted games
    let mut rng = Rng(0x5eed_cafe_f00d_1234);
    let mut mismatch = None;
    for trial in 0..200 {
        let n = 2 + rng.below(9) as usize; // 2..=10 players
        let weights: Vec<u64> = (0..n).map(|_| 1 + rng.below(50)).collect();
        let total: u64 = weights.iter().sum();
        let quota = 1 + rng.below(total);
        let players: Vec<String> = (0..n).map(|i| format!("P{i:02}")).collect();
        let game = VotingGame::new(
            players,
            vec![QuotaRule::new(weights, Threshold::Absolute(quota))],
            None,
            None,
        )
        .map_err(|e| e.to_string())?;
        let dp = shapley_shubik(&game).map_err(|e| e.to_string())?;
        let oracle = brute_force_shapley(&game).map_err(|e| e.to_string())?;
        if dp != oracle {
            mismatch = Some(format!("trial {trial}: SS DP != oracle"));
            break;
        }
        let dp = compute_index(&game, IndexKind::BanzhafRawScore).map_err(|e| e.to_string())?;
        let oracle = brute_force_banzhaf_scores(&game).map_err(|e| e.to_string())?;
        if dp != oracle {
            mismatch = Some(format!("trial {trial}: Banzhaf DP != oracle"));
            break;
        }
    }
    check(
        "engine = brute-force oracle (200 random games)",
        mismatch.is_none(),
        mismatch.unwrap_or_default(),
    );

    if failures == 0 {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failures} check(s) failed");
        Ok(ExitCode::from(3))
    }
}

/// `(population in persons, 100·(new adjusted / old), code)` points for one
/// exit — the plot-ready form of a matrix column.
fn figure_points(
    dataset: &Dataset,
    baseline: &[String],
    already_departed: &[String],
    leaver: &str,
    year: Year,
    index: IndexKind,
) -> Result<String, String> {
    let scenario = ExitScenario {
        baseline: baseline.to_vec(),
        already_departed: already_departed.to_vec(),
        leaver: leaver.to_string(),
        options: ExitOptions {
            year,
            index_kind: index,
            budget_model: BudgetModel::Renormalized,
            blocking_rule: false,
            quota_override: None,
        },
    };
    let report = scenario.run(dataset).map_err(|e| e.to_string())?;
    let mut out = String::from("population,percent_of_old,label\n");
    for (code, change) in &report.change {
        let Some(change) = change else { continue };
        let pct = percent_string(&(change + BigRational::one()), 6);
        let pop = dataset
            .member(code)
            .map_err(|e| e.to_string())?
            .population(year) as u128
            * 100_000;
        out.push_str(&format!("{pop},{pct},{code}\n"));
    }
    Ok(out)
}

fn reproduce(out_dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;
    let write = |name: &str, text: String| -> Result<(), String> {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    };

    let eec = builtin_dataset("eec1958").map_err(|e| e.to_string())?;
    let eu28 = builtin_dataset("eu28").map_err(|e| e.to_string())?;
    let eu27 = builtin_dataset("eu27_postbrexit").map_err(|e| e.to_string())?;
    let eu27pre = builtin_dataset("eu27_precroatia").map_err(|e| e.to_string())?;

    // Table 1: EEC 1958 indices
    let game = eec
        .game(&eec.codes(), Year::Y2015, false, None)
        .map_err(|e| e.to_string())?;
    let mut table1 = String::from("player,shapley_shubik_pct,banzhaf_pct\n");
    let ss = shapley_shubik(&game).map_err(|e| e.to_string())?;
    let bz = compute_index(&game, IndexKind::BanzhafNormalized).map_err(|e| e.to_string())?;
    for (code, v) in ss.iter() {
        table1.push_str(&format!(
            "{code},{},{}\n",
            percent_string(v, 2),
            percent_string(bz.get(code).unwrap(), 2)
        ));
    }
    write("table1.csv", table1)?;

    // Tables 2 and 3: Luxembourg exit (quota stays 12), France exit (quota 9)
    for (name, leaver, quota) in [("table2.csv", "LU", 12u64), ("table3.csv", "FR", 9)] {
        let mut out = String::new();
        for index in [IndexKind::ShapleyShubik, IndexKind::BanzhafNormalized] {
            let scenario = ExitScenario {
                baseline: eec.codes(),
                already_departed: vec![],
                leaver: leaver.to_string(),
                options: ExitOptions {
                    year: Year::Y2015,
                    index_kind: index,
                    budget_model: BudgetModel::Renormalized,
                    blocking_rule: false,
                    quota_override: Some(quota),
                },
            };
            let report = scenario.run(&eec).map_err(|e| e.to_string())?;
            out.push_str(&format!("# index: {}\n", index.label()));
            out.push_str(&emit_exit_report(&report, OutputFormat::Csv));
        }
        write(name, out)?;
    }

    // Appendices B, C, D: full change matrices
    let opts = ExitOptions {
        year: Year::Y2015,
        index_kind: IndexKind::ShapleyShubik,
        budget_model: BudgetModel::Renormalized,
        blocking_rule: false,
        quota_override: None,
    };
    for (name, ds) in [
        ("appendix_b.csv", &eu28),
        ("appendix_c.csv", &eu27),
        ("appendix_d.csv", &eu27pre),
    ] {
        let m = change_matrix(ds, &ds.codes(), &[], &opts).map_err(|e| e.to_string())?;
        write(name, emit_change_matrix(&m, OutputFormat::Csv))?;
    }

    // Appendix E: blocking-minority analysis for both EU baselines
    let mut appendix_e = String::new();
    for ds in [&eu28, &eu27] {
        let analysis =
            blocking_correction_delta(ds, &ds.codes(), Year::Y2015).map_err(|e| e.to_string())?;
        appendix_e.push_str(&format!("# baseline: {}\n", ds.name));
        appendix_e.push_str(&emit_blocking_analysis(&analysis, OutputFormat::Csv));
    }
    write("appendix_e.csv", appendix_e)?;

    // Figures: plot-ready point sets
    let eu27_codes = eu27.codes();
    write(
        "fig1.csv",
        figure_points(
            &eu27,
            &eu27_codes,
            &[],
            "CZ",
            Year::Y2015,
            IndexKind::ShapleyShubik,
        )?,
    )?;
    write(
        "fig3.csv",
        figure_points(
            &eu27,
            &eu27_codes,
            &[],
            "CZ",
            Year::Y2030,
            IndexKind::ShapleyShubik,
        )?,
    )?;
    let mut fig4 = String::new();
    for (index, label) in [
        (IndexKind::ShapleyShubik, "shapley_shubik"),
        (IndexKind::BanzhafNormalized, "banzhaf"),
    ] {
        fig4.push_str(&format!("# index: {label}\n"));
        fig4.push_str(&figure_points(
            &eu27,
            &eu27_codes,
            &[],
            "DE",
            Year::Y2015,
            index,
        )?);
    }
    write("fig4.csv", fig4)?;
    // Fig 6: Czexit after Germany already left the post-Brexit union
    let chained: Vec<String> = eu27_codes.iter().filter(|c| *c != "DE").cloned().collect();
    write(
        "fig6.csv",
        figure_points(
            &eu27,
            &chained,
            &["DE".into()],
            "CZ",
            Year::Y2015,
            IndexKind::ShapleyShubik,
        )?,
    )?;
    write(
        "fig7.csv",
        figure_points(
            &eu27pre,
            &eu27pre.codes(),
            &[],
            "UK",
            Year::Y2015,
            IndexKind::ShapleyShubik,
        )?,
    )?;
    // Fig 8: support summary for every exit from the post-Brexit union
    let matrix = change_matrix(&eu27, &eu27_codes, &[], &opts).map_err(|e| e.to_string())?;
    let summary = exit_support_summary(&eu27, &matrix).map_err(|e| e.to_string())?;
    let mut fig8 = String::from("# thresholds: 15 members, 288.34 million\n");
    fig8.push_str(&emit_support_summary(&summary, OutputFormat::Csv));
    write("fig8.csv", fig8)?;

    // dataset snapshots for round-tripping
    let mut datasets = BTreeMap::new();
    datasets.insert("dataset_eu28.csv", &eu28);
    for (name, ds) in datasets {
        write(name, voting_power::data::dataset_to_csv(ds))?;
    }
    Ok(())
}
