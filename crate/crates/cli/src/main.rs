use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use luckscreen::bkr::check;
use luckscreen::oracles::{simulate_ruin, Seed, MIN_RUIN_TRIALS};
use luckscreen::ruin::{
    expected_prize_count, expected_stopping_time_bounds, BankrollScenario, TicketSpec,
};
use luckscreen::screening::{self, Catalog, ScreeningConfig};
use luckscreen::solver::{self, Bet, MaxProbProblem, MinSpendProblem};

const EXIT_INPUT: u8 = 1;
const EXIT_FLAGGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "luckscreen",
    version,
    about = "How much must a frequent lottery winner have spent?"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output layout: a human-readable table or a JSON tree.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Tree,
}

#[derive(Subcommand)]
enum Command {
    /// Screen a claims file and flag implausible win records.
    Screen(ScreenArgs),
    /// Least spend that makes a win record at least eps likely.
    MinSpend(MinSpendArgs),
    /// Largest probability of a win record under a budget.
    MaxProb(MaxProbArgs),
    /// Expected tickets and prizes for a gambler who recycles winnings.
    Ruin(RuinArgs),
    /// Randomized checks of the BKR inequality and box-operation laws.
    BkrCheck(BkrArgs),
}

#[derive(Args)]
struct ScreenArgs {
    /// Bet catalog CSV; the bundled Play 4 catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Claims CSV.
    #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
    claims: Option<PathBuf>,
    /// Screen the bundled fixture claims.
    #[arg(long)]
    fixture: bool,
    #[arg(long, default_value_t = 5e-14)]
    eps: f64,
    #[arg(long, default_value_t = 1.9e7)]
    population: f64,
    #[arg(long, default_value_t = 0.65)]
    take_home_rate: f64,
    /// Minimum spend above which a record can be flagged.
    #[arg(long, default_value_t = 100_000.0)]
    threshold: f64,
    /// Smallest prize that appears in the claims list.
    #[arg(long, default_value_t = 600.0)]
    reporting_threshold: f64,
}

/// One bet as `cost:prob:wins`; prob may be a fraction such as `1/10000`.
#[derive(Clone, Copy, Debug)]
struct InlineBet(Bet);

impl FromStr for InlineBet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [cost, prob, wins] = parts[..] else {
            return Err(format!("expected cost:prob:wins, got `{s}`"));
        };
        let cost: f64 = cost.parse().map_err(|_| format!("bad cost `{cost}`"))?;
        let prob = screening::parse_probability(prob)
            .ok_or_else(|| format!("bad probability `{prob}`"))?;
        let wins: u64 = wins
            .parse()
            .map_err(|_| format!("bad win count `{wins}`"))?;
        Bet::new(cost, prob, wins)
            .map(InlineBet)
            .map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct MinSpendArgs {
    /// Bet as cost:prob:wins; repeat for several bets.
    #[arg(long = "bet", required = true)]
    bets: Vec<InlineBet>,
    #[arg(long, default_value_t = 5e-14)]
    eps: f64,
}

#[derive(Args)]
struct MaxProbArgs {
    #[arg(long = "bet", required = true)]
    bets: Vec<InlineBet>,
    #[arg(long)]
    budget: f64,
    /// Also report the population-adjusted probability for this many gamblers.
    #[arg(long)]
    population: Option<f64>,
}

#[derive(Args)]
struct RuinArgs {
    /// Starting bankroll S0.
    #[arg(long)]
    bankroll: f64,
    #[arg(long, default_value_t = 1.0)]
    cost: f64,
    #[arg(long)]
    prize: f64,
    /// Win probability per ticket.
    #[arg(long, value_parser = parse_prob)]
    prob: f64,
    /// Check the bounds against a Monte Carlo run.
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BkrArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances per property suite.
    #[arg(long, default_value_t = 500)]
    instances: usize,
}

fn parse_prob(s: &str) -> Result<f64, String> {
    screening::parse_probability(s).ok_or_else(|| format!("bad probability `{s}`"))
}

struct Output {
    text: String,
    flagged: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(flagged) => ExitCode::from(if flagged { EXIT_FLAGGED } else { 0 }),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let out = match &cli.command {
        Command::Screen(a) => screen(a, cli.format)?,
        Command::MinSpend(a) => min_spend(a, cli.format)?,
        Command::MaxProb(a) => max_prob(a, cli.format)?,
        Command::Ruin(a) => ruin(a, cli.format)?,
        Command::BkrCheck(a) => bkr_check(a, cli.format)?,
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, &out.text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth an error exit
            let _ = stdout
                .write_all(out.text.as_bytes())
                .and_then(|_| stdout.flush());
        }
    }
    Ok(out.flagged)
}

fn tree(v: Value) -> String {
    serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"
}

fn read(path: &PathBuf) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn screen(a: &ScreenArgs, format: Format) -> Result<Output> {
    let config = ScreeningConfig {
        eps: a.eps,
        population: a.population,
        flag_spend_threshold: a.threshold,
        take_home_rate: a.take_home_rate,
        reporting_threshold: a.reporting_threshold,
    };
    config.validate()?;
    let catalog = match &a.catalog {
        Some(p) => {
            screening::load_catalog(read(p)?).with_context(|| format!("in {}", p.display()))?
        }
        None => Catalog::play4(),
    };
    let claims = match &a.claims {
        Some(p) => screening::load_claims(read(p)?, config.reporting_threshold)
            .with_context(|| format!("in {}", p.display()))?,
        None => screening::load_claims(
            screening::FIXTURE_CLAIMS_CSV.as_bytes(),
            config.reporting_threshold,
        )?,
    };
    let report = screening::screen(&claims, &catalog, &config)?;
    let text = match format {
        Format::Table => report.to_table(),
        Format::Tree => report.to_json(),
    };
    let flagged = report.flagged().next().is_some();
    Ok(Output { text, flagged })
}

fn bets_of(v: &[InlineBet]) -> Vec<Bet> {
    v.iter().map(|b| b.0).collect()
}

fn min_spend(a: &MinSpendArgs, format: Format) -> Result<Output> {
    let prob = MinSpendProblem::new(bets_of(&a.bets), a.eps)?;
    let b = solver::solve_min_spend(&prob)?;
    let text = match format {
        Format::Tree => tree(json!({ "eps": a.eps, "bets": prob.bets, "bound": b })),
        Format::Table => {
            let mut s = format!("eps={:e}\n", a.eps);
            let _ = writeln!(
                s,
                "{:>4} {:>10} {:>12} {:>6} {:>16} {:>12}",
                "bet", "cost", "prob", "wins", "n*", "tickets"
            );
            for (k, &i) in b.indices.iter().enumerate() {
                let bet = &prob.bets[i];
                let _ = writeln!(
                    s,
                    "{:>4} {:>10} {:>12.4e} {:>6} {:>16.4} {:>12}",
                    i, bet.cost, bet.win_prob, bet.wins, b.n_star[k], b.rounded_n[k]
                );
            }
            let _ = writeln!(s, "min spend        {:.2}", b.spend);
            let _ = writeln!(s, "rounded spend    {:.2}", b.rounded_spend);
            let _ = writeln!(s, "log probability  {:.6}", b.achieved_log_prob);
            if !b.converged {
                let _ = writeln!(s, "warning: solver stopped before full tolerance");
            }
            s
        }
    };
    Ok(Output {
        text,
        flagged: false,
    })
}

fn max_prob(a: &MaxProbArgs, format: Format) -> Result<Output> {
    let prob = MaxProbProblem::new(bets_of(&a.bets), a.budget)?;
    let sol = solver::solve_max_prob(&prob)?;
    let adjusted = a
        .population
        .map(|n| screening::population_adjust(sol.probability(), n))
        .transpose()?;
    let text = match format {
        Format::Tree => tree(json!({
            "budget": a.budget,
            "bets": prob.bets,
            "solution": sol,
            "probability": sol.probability(),
            "population_adjusted": adjusted,
        })),
        Format::Table => {
            let mut s = format!("budget={}\n", a.budget);
            for (i, (bet, n)) in prob.bets.iter().zip(&sol.n_star).enumerate() {
                let _ = writeln!(
                    s,
                    "bet {i}: cost {} prob {:e} wins {} -> n* {:.4}",
                    bet.cost, bet.win_prob, bet.wins, n
                );
            }
            let _ = writeln!(s, "spend            {:.2}", sol.spend);
            let _ = writeln!(s, "max probability  {:.6e}", sol.probability());
            if let Some(x) = adjusted {
                let _ = writeln!(s, "population-adjusted  {x:.6e}");
            }
            s
        }
    };
    Ok(Output {
        text,
        flagged: false,
    })
}

fn ruin(a: &RuinArgs, format: Format) -> Result<Output> {
    let s = BankrollScenario::new(a.bankroll, TicketSpec::new(a.cost, a.prize, a.prob)?)?;
    let bounds = expected_stopping_time_bounds(&s)?;
    let wins = expected_prize_count(&s)?;
    let sim = if a.simulate {
        if a.trials < MIN_RUIN_TRIALS {
            bail!("--trials must be at least {MIN_RUIN_TRIALS}");
        }
        Some(simulate_ruin(&s, a.trials, Seed(a.seed))?)
    } else {
        None
    };
    // The simulated mean should sit inside the bounds, give or take 3 se.
    let agrees = sim.map(|r| {
        let slack = 3.0 * r.se_stopping_time;
        let target_ok = match bounds.exact {
            Some(t) => (r.mean_stopping_time - t).abs() <= slack,
            None => {
                r.mean_stopping_time >= bounds.lower - slack
                    && r.mean_stopping_time <= bounds.upper + slack
            }
        };
        target_ok && (r.mean_wins - wins).abs() <= 3.0 * r.se_wins
    });
    let text = match format {
        Format::Tree => tree(json!({
            "scenario": s,
            "expected_value": s.ticket.expected_value(),
            "stopping_time": bounds,
            "expected_wins": wins,
            "simulation": sim,
            "simulation_agrees": agrees,
        })),
        Format::Table => {
            let mut t = format!(
                "bankroll {}  cost {}  prize {}  p {:e}  E(X) {:.6}\n",
                s.bankroll,
                s.ticket.cost,
                s.ticket.prize,
                s.ticket.win_prob,
                s.ticket.expected_value()
            );
            let _ = writeln!(t, "E(T) > {:.4}", bounds.lower);
            let _ = writeln!(t, "E(T) <= {:.4}", bounds.upper);
            if let Some(x) = bounds.exact {
                let _ = writeln!(t, "E(T) = {x:.4} (lattice case)");
            }
            let _ = writeln!(t, "expected wins {wins:.4}");
            if let (Some(r), Some(ok)) = (sim, agrees) {
                let _ = writeln!(
                    t,
                    "simulated over {} trials (seed {}): E(T) {:.4} +/- {:.4}, wins {:.4} +/- {:.4} -> {}",
                    r.trials,
                    r.seed.0,
                    r.mean_stopping_time,
                    r.se_stopping_time,
                    r.mean_wins,
                    r.se_wins,
                    if ok { "consistent" } else { "INCONSISTENT" }
                );
            }
            t
        }
    };
    Ok(Output {
        text,
        flagged: agrees == Some(false),
    })
}

fn bkr_check(a: &BkrArgs, format: Format) -> Result<Output> {
    if a.instances == 0 {
        return Err(anyhow!("--instances must be positive"));
    }
    let fixture = check::fixture_report()?;
    let suites = check::run_all(Seed(a.seed), a.instances);
    let ok = fixture.iter().all(|f| f.3) && suites.iter().all(|r| r.passed());
    let text = match format {
        Format::Tree => tree(json!({
            "seed": a.seed,
            "instances": a.instances,
            "fixture": fixture
                .iter()
                .map(|(label, want, got, ok)| json!({ "label": label, "expected": want, "got": got, "ok": ok }))
                .collect::<Vec<_>>(),
            "suites": suites,
            "passed": ok,
        })),
        Format::Table => {
            let mut s = format!("seed {}  instances per suite {}\n", a.seed, a.instances);
            for (label, want, got, pass) in &fixture {
                let _ = writeln!(
                    s,
                    "{:<28} {} {got} (expected {want})",
                    label,
                    if *pass { "ok  " } else { "FAIL" }
                );
            }
            for r in &suites {
                let _ = writeln!(
                    s,
                    "{:<28} {} {}/{} failures",
                    r.name,
                    if r.passed() { "ok  " } else { "FAIL" },
                    r.failures,
                    r.instances
                );
                if let Some(f) = &r.first_failure {
                    let _ = writeln!(s, "    first failure: {f}");
                }
            }
            s
        }
    };
    Ok(Output { text, flagged: !ok })
}
