//! From raw claim records to per-gambler verdicts.
//!
//! Claims are grouped by gambler, then by draw. Several units of the same bet
//! on one draw become a single win of a unit-scaled bet class; several
//! distinct bets winning on one draw are dependent wins, which rule out the
//! product bound and send the gambler to the budget-plausibility route.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{self, Bet, MaxProbProblem, MinSpendProblem, SpendBound};

/// The Play 4 straight and box bets.
pub const PLAY4_CATALOG_CSV: &str = include_str!("../data/play4_catalog.csv");
/// A straight-only frequent winner and a multi-unit winner.
pub const FIXTURE_CLAIMS_CSV: &str = include_str!("../data/fixture_claims.csv");

/// Population-adjusted probability below which a win record is implausible.
pub const PLAUSIBILITY_LINE: f64 = 1e-6;

const CATALOG_HEADER: [&str; 6] = ["bet_id", "game", "cost", "win_prob", "prize", "recordable"];
const CLAIMS_HEADER: [&str; 6] = [
    "gambler_id",
    "claim_date",
    "bet_id",
    "prize_amount",
    "draw_id",
    "units",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetCatalogEntry {
    pub bet_id: String,
    pub game: String,
    pub cost: f64,
    pub win_prob: f64,
    pub prize: f64,
    /// Whether a single-unit prize reaches the reporting threshold.
    pub recordable: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub entries: Vec<BetCatalogEntry>,
    pub warnings: Vec<String>,
}

impl Catalog {
    pub fn play4() -> Self {
        load_catalog(PLAY4_CATALOG_CSV.as_bytes()).expect("bundled catalog is valid")
    }

    pub fn get(&self, bet_id: &str) -> Option<&BetCatalogEntry> {
        self.entries.iter().find(|e| e.bet_id == bet_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub gambler_id: String,
    pub claim_date: String,
    pub bet_id: String,
    pub prize_amount: f64,
    pub draw_id: Option<String>,
    pub units: u32,
}

/// Wins of one bet type at one wager size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitClass {
    pub bet_id: String,
    pub units: u32,
    pub cost: f64,
    pub win_prob: f64,
    pub prize: f64,
    pub wins: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamblerProfile {
    pub gambler_id: String,
    /// Wins per bet type, whatever the wager size.
    pub wins_by_bet: BTreeMap<String, u64>,
    pub unit_classes: Vec<UnitClass>,
    /// Draws on which more than one distinct bet type won.
    pub dependent_wins: Vec<String>,
    /// Claim rows before aggregation, counting each row's units.
    pub claims: u64,
    pub total_prize: f64,
    /// Some same-date rows without a draw id were merged into one wager.
    pub draw_heuristic_applied: bool,
}

impl GamblerProfile {
    pub fn total_wins(&self) -> u64 {
        self.unit_classes.iter().map(|c| c.wins).sum()
    }

    /// Cost of buying exactly the winning tickets.
    pub fn vertex_cost(&self) -> f64 {
        self.unit_classes
            .iter()
            .map(|c| c.cost * c.wins as f64)
            .sum()
    }

    fn bets(&self) -> Result<Vec<Bet>> {
        self.unit_classes
            .iter()
            .map(|c| Bet::new(c.cost, c.win_prob, c.wins))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub eps: f64,
    pub population: f64,
    pub flag_spend_threshold: f64,
    pub take_home_rate: f64,
    pub reporting_threshold: f64,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            eps: 5e-14,
            population: 1.9e7,
            flag_spend_threshold: 100_000.0,
            take_home_rate: 0.65,
            reporting_threshold: 600.0,
        }
    }
}

impl ScreeningConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: String| Err(Error::InvalidField { field, reason });
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps", format!("must lie in (0, 1), got {}", self.eps));
        }
        if !(self.population >= 1.0 && self.population.is_finite()) {
            return bad(
                "population",
                format!("must be >= 1, got {}", self.population),
            );
        }
        if !(self.flag_spend_threshold >= 0.0 && self.flag_spend_threshold.is_finite()) {
            return bad(
                "flag_spend_threshold",
                format!("must be >= 0, got {}", self.flag_spend_threshold),
            );
        }
        if !(self.take_home_rate > 0.0 && self.take_home_rate <= 1.0) {
            return bad(
                "take_home_rate",
                format!("must lie in (0, 1], got {}", self.take_home_rate),
            );
        }
        if !(self.reporting_threshold >= 0.0 && self.reporting_threshold.is_finite()) {
            return bad(
                "reporting_threshold",
                format!("must be >= 0, got {}", self.reporting_threshold),
            );
        }
        Ok(())
    }
}

fn parse_error(line: u64, message: String) -> Error {
    Error::Parse {
        line: line as usize,
        message,
    }
}

fn header_positions(
    rdr: &mut csv::Reader<impl Read>,
    expected: &[&'static str; 6],
) -> Result<Option<[usize; 6]>> {
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(parse_error(1, e.to_string())),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Ok(None);
    }
    let mut pos = [0; 6];
    for (slot, name) in pos.iter_mut().zip(expected) {
        *slot = headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}') == *name)
            .ok_or_else(|| parse_error(1, format!("header is missing column `{name}`")))?;
    }
    Ok(Some(pos))
}

fn reader(source: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source)
}

/// Decimal or exact fraction `a/b`.
pub fn parse_probability(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().ok()?;
            let b: f64 = b.trim().parse().ok()?;
            (b != 0.0).then(|| a / b)
        }
        None => s.parse().ok(),
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" | "1" => Some(true),
        "false" | "no" | "n" | "0" => Some(false),
        _ => None,
    }
}

/// Parses and validates a bet catalog. An empty source gives an empty catalog
/// with a warning.
pub fn load_catalog(source: impl Read) -> Result<Catalog> {
    let mut rdr = reader(source);
    let Some(pos) = header_positions(&mut rdr, &CATALOG_HEADER)? else {
        return Ok(Catalog {
            entries: Vec::new(),
            warnings: vec!["catalog is empty".into()],
        });
    };
    let mut catalog = Catalog::default();
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(pos[i]).unwrap_or("");
        let err = |i: usize, reason: &str| {
            parse_error(
                line,
                format!("{}: {reason} (got `{}`)", CATALOG_HEADER[i], get(i)),
            )
        };

        let bet_id = get(0).to_string();
        if bet_id.is_empty() {
            return Err(err(0, "must not be empty"));
        }
        let cost: f64 = get(2).parse().map_err(|_| err(2, "not a number"))?;
        if !(cost > 0.0 && cost.is_finite()) {
            return Err(err(2, "must be positive"));
        }
        let win_prob = parse_probability(get(3)).ok_or_else(|| err(3, "not a probability"))?;
        if !(win_prob > 0.0 && win_prob < 1.0) {
            return Err(err(3, "must lie strictly between 0 and 1"));
        }
        let prize: f64 = get(4).parse().map_err(|_| err(4, "not a number"))?;
        if !(prize >= 0.0 && prize.is_finite()) {
            return Err(err(4, "must be >= 0"));
        }
        let recordable = parse_flag(get(5)).ok_or_else(|| err(5, "expected true or false"))?;

        if seen.insert(bet_id.clone(), line).is_some() {
            return Err(Error::DuplicateBet(bet_id));
        }
        catalog.entries.push(BetCatalogEntry {
            bet_id,
            game: get(1).to_string(),
            cost,
            win_prob,
            prize,
            recordable,
        });
    }
    if catalog.entries.is_empty() {
        catalog.warnings.push("catalog is empty".into());
    }
    Ok(catalog)
}

fn valid_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    let digits = |r: std::ops::Range<usize>| -> Option<u32> {
        s.get(r)
            .filter(|d| d.bytes().all(|c| c.is_ascii_digit()))?
            .parse()
            .ok()
    };
    let (Some(y), Some(m), Some(d)) = (digits(0..4), digits(5..7), digits(8..10)) else {
        return false;
    };
    let leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    let days = match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if leap => 29,
        2 => 28,
        _ => return false,
    };
    (1..=days).contains(&d)
}

/// Parses claim records. Rows whose prize is below `reporting_threshold`
/// are rejected: they could not have appeared in a public claims list.
pub fn load_claims(source: impl Read, reporting_threshold: f64) -> Result<Vec<ClaimRecord>> {
    let mut rdr = reader(source);
    let Some(pos) = header_positions(&mut rdr, &CLAIMS_HEADER)? else {
        return Ok(Vec::new());
    };
    let mut claims = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(pos[i]).unwrap_or("");
        let err = |i: usize, reason: &str| {
            parse_error(
                line,
                format!("{}: {reason} (got `{}`)", CLAIMS_HEADER[i], get(i)),
            )
        };

        let gambler_id = get(0).to_string();
        if gambler_id.is_empty() {
            return Err(err(0, "must not be empty"));
        }
        let claim_date = get(1).to_string();
        if !valid_iso_date(&claim_date) {
            return Err(err(1, "expected an ISO-8601 date YYYY-MM-DD"));
        }
        let bet_id = get(2).to_string();
        if bet_id.is_empty() {
            return Err(err(2, "must not be empty"));
        }
        let prize_amount: f64 = get(3).parse().map_err(|_| err(3, "not a number"))?;
        if !(prize_amount.is_finite() && prize_amount >= reporting_threshold) {
            return Err(err(
                3,
                &format!("below the ${reporting_threshold} reporting threshold"),
            ));
        }
        let draw_id = Some(get(4)).filter(|s| !s.is_empty()).map(str::to_string);
        let units = match get(5) {
            "" => 1,
            s => s
                .parse::<u32>()
                .ok()
                .filter(|&u| u >= 1)
                .ok_or_else(|| err(5, "must be a positive integer"))?,
        };
        claims.push(ClaimRecord {
            gambler_id,
            claim_date,
            bet_id,
            prize_amount,
            draw_id,
            units,
        });
    }
    Ok(claims)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum DrawKey {
    Known(String),
    /// No draw id: same date and game is assumed to be the same draw.
    Inferred {
        date: String,
        game: String,
    },
}

impl DrawKey {
    fn label(&self) -> String {
        match self {
            DrawKey::Known(id) => id.clone(),
            DrawKey::Inferred { date, game } => format!("{game} {date}"),
        }
    }
}

/// Groups claims by gambler and aggregates them into unit classes.
pub fn build_profiles(claims: &[ClaimRecord], catalog: &Catalog) -> Result<Vec<GamblerProfile>> {
    let unknown: BTreeSet<&str> = claims
        .iter()
        .filter(|c| catalog.get(&c.bet_id).is_none())
        .map(|c| c.bet_id.as_str())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownBets(
            unknown.into_iter().map(String::from).collect(),
        ));
    }
    let mut by_gambler: BTreeMap<&str, Vec<&ClaimRecord>> = BTreeMap::new();
    for c in claims {
        by_gambler.entry(c.gambler_id.as_str()).or_default().push(c);
    }
    by_gambler
        .into_iter()
        .map(|(id, rows)| build_profile(id, &rows, catalog))
        .collect()
}

fn build_profile(
    gambler_id: &str,
    rows: &[&ClaimRecord],
    catalog: &Catalog,
) -> Result<GamblerProfile> {
    // draw -> bet -> (summed units, rows)
    let mut draws: BTreeMap<DrawKey, BTreeMap<&str, (u32, usize)>> = BTreeMap::new();
    let mut claims = 0u64;
    let mut total_prize = 0.0;
    for c in rows {
        let entry = catalog
            .get(&c.bet_id)
            .ok_or_else(|| Error::UnknownBets(vec![c.bet_id.clone()]))?;
        let key = match &c.draw_id {
            Some(id) => DrawKey::Known(id.clone()),
            None => DrawKey::Inferred {
                date: c.claim_date.clone(),
                game: entry.game.clone(),
            },
        };
        let slot = draws
            .entry(key)
            .or_default()
            .entry(c.bet_id.as_str())
            .or_default();
        slot.0 = slot
            .0
            .checked_add(c.units)
            .ok_or_else(|| Error::InvalidField {
                field: "units",
                reason: format!("unit total overflows for {gambler_id} on bet {}", c.bet_id),
            })?;
        slot.1 += 1;
        claims += u64::from(c.units);
        total_prize += c.prize_amount;
    }

    let mut classes: BTreeMap<(&str, u32), u64> = BTreeMap::new();
    let mut dependent_wins = Vec::new();
    let mut draw_heuristic_applied = false;
    for (key, bets) in &draws {
        if bets.len() > 1 {
            dependent_wins.push(key.label());
        }
        for (&bet_id, &(units, nrows)) in bets {
            if nrows > 1 && matches!(key, DrawKey::Inferred { .. }) {
                draw_heuristic_applied = true;
            }
            *classes.entry((bet_id, units)).or_default() += 1;
        }
    }

    let mut wins_by_bet = BTreeMap::new();
    let unit_classes = classes
        .into_iter()
        .map(|((bet_id, units), wins)| {
            let e = catalog.get(bet_id).expect("resolved above");
            *wins_by_bet.entry(bet_id.to_string()).or_default() += wins;
            UnitClass {
                bet_id: bet_id.to_string(),
                units,
                cost: e.cost * f64::from(units),
                win_prob: e.win_prob,
                prize: e.prize * f64::from(units),
                wins,
            }
        })
        .collect();

    Ok(GamblerProfile {
        gambler_id: gambler_id.to_string(),
        wins_by_bet,
        unit_classes,
        dependent_wins,
        claims,
        total_prize,
        draw_heuristic_applied,
    })
}

/// Least spend that makes the profile's wins at least `eps` likely.
///
/// Refuses profiles with dependent wins; those need
/// [`assess_budget_plausibility`] instead.
pub fn min_spend_for_profile(
    profile: &GamblerProfile,
    config: &ScreeningConfig,
) -> Result<SpendBound> {
    config.validate()?;
    if !profile.dependent_wins.is_empty() {
        return Err(Error::DependentWins(format!(
            "{} won distinct bets on the same draw ({}); use the budget-plausibility assessment",
            profile.gambler_id,
            profile.dependent_wins.join(", ")
        )));
    }
    if profile.unit_classes.is_empty() {
        return Ok(SpendBound {
            indices: Vec::new(),
            n_star: Vec::new(),
            spend: 0.0,
            achieved_log_prob: 0.0,
            active_set: Vec::new(),
            converged: true,
            iterations: 0,
            relaxed: false,
            rounded_n: Vec::new(),
            rounded_spend: 0.0,
        });
    }
    solver::solve_min_spend(&MinSpendProblem::new(profile.bets()?, config.eps)?)
}

/// Largest probability of the profile's wins for any way of spending `budget`.
pub fn assess_budget_plausibility(
    profile: &GamblerProfile,
    budget: f64,
    config: &ScreeningConfig,
) -> Result<f64> {
    config.validate()?;
    budget_solution(profile, budget).map(|s| s.probability())
}

fn budget_solution(profile: &GamblerProfile, budget: f64) -> Result<solver::MaxProbSolution> {
    if profile.unit_classes.is_empty() {
        if budget.is_nan() || budget < 0.0 {
            return Err(Error::InvalidField {
                field: "budget",
                reason: format!("must be >= 0, got {budget}"),
            });
        }
        return Ok(solver::MaxProbSolution {
            n_star: Vec::new(),
            log_prob: 0.0,
            spend: 0.0,
            budget_binding: false,
            iterations: 0,
        });
    }
    solver::solve_max_prob(&MaxProbProblem::new(profile.bets()?, budget)?)
}

/// Take-home share of the claimed prizes.
pub fn take_home_budget(profile: &GamblerProfile, config: &ScreeningConfig) -> f64 {
    config.take_home_rate * profile.total_prize
}

/// Union bound over a population: `min(1, N p)`.
pub fn population_adjust(prob: f64, population: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::InvalidField {
            field: "prob",
            reason: format!("must lie in [0, 1], got {prob}"),
        });
    }
    if population.is_nan() || population < 1.0 {
        return Err(Error::InvalidField {
            field: "population",
            reason: format!("must be >= 1, got {population}"),
        });
    }
    Ok((population * prob).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PlausiblyLucky,
    Implausible,
    InsufficientData,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PlausiblyLucky => "plausibly-lucky",
            Verdict::Implausible => "implausible",
            Verdict::InsufficientData => "insufficient-data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    MinSpend,
    BudgetPlausibility,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub budget: f64,
    pub probability: f64,
    pub population_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamblerFinding {
    pub gambler_id: String,
    pub profile: Option<GamblerProfile>,
    pub route: Route,
    pub spend_bound: Option<SpendBound>,
    /// Probability the verdict rests on: `eps` on the min-spend route, the
    /// maximized probability on the budget route.
    pub probability: Option<f64>,
    pub population_adjusted: Option<f64>,
    /// Take-home budget check, reported alongside either route when feasible.
    pub budget_check: Option<BudgetCheck>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl GamblerFinding {
    fn sort_spend(&self) -> f64 {
        self.spend_bound
            .as_ref()
            .map_or(f64::NEG_INFINITY, |b| b.spend)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub config: ScreeningConfig,
    pub plausibility_line: f64,
    /// `N eps`, the population-adjusted chance at the min-spend point.
    pub population_eps: f64,
    pub catalog_warnings: Vec<String>,
    pub gamblers: Vec<GamblerFinding>,
}

impl ScreeningReport {
    pub fn flagged(&self) -> impl Iterator<Item = &GamblerFinding> {
        self.gamblers
            .iter()
            .filter(|g| g.verdict == Verdict::Implausible)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_table(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "eps={:e}  N={:e}  N*eps={:.3e}  spend threshold=${}  take-home={}  reporting threshold=${}",
            c.eps, c.population, self.population_eps, c.flag_spend_threshold, c.take_home_rate, c.reporting_threshold
        );
        for w in &self.catalog_warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let _ = writeln!(
            out,
            "{:<20} {:>6} {:>14} {:>20} {:>14} {:>12}  verdict",
            "gambler", "wins", "prizes", "route", "min spend", "N*prob"
        );
        for g in &self.gamblers {
            let (wins, prizes) = g
                .profile
                .as_ref()
                .map_or((String::from("-"), String::from("-")), |p| {
                    (p.total_wins().to_string(), format!("{:.2}", p.total_prize))
                });
            let route = match g.route {
                Route::MinSpend => "min-spend",
                Route::BudgetPlausibility => "budget-plausibility",
                Route::None => "-",
            };
            let spend = g
                .spend_bound
                .as_ref()
                .map_or("-".into(), |b| format!("{:.2}", b.spend));
            let adj = g
                .population_adjusted
                .map_or("-".into(), |x| format!("{x:.3e}"));
            let _ = writeln!(
                out,
                "{:<20} {:>6} {:>14} {:>20} {:>14} {:>12}  {}",
                g.gambler_id,
                wins,
                prizes,
                route,
                spend,
                adj,
                g.verdict.as_str()
            );
            for n in &g.notes {
                let _ = writeln!(out, "    note: {n}");
            }
        }
        out
    }
}

/// Screens every gambler in `claims`. A gambler whose records cannot be
/// analysed gets `insufficient-data` without stopping the run.
pub fn screen(
    claims: &[ClaimRecord],
    catalog: &Catalog,
    config: &ScreeningConfig,
) -> Result<ScreeningReport> {
    config.validate()?;
    let mut by_gambler: BTreeMap<&str, Vec<&ClaimRecord>> = BTreeMap::new();
    for c in claims {
        by_gambler.entry(c.gambler_id.as_str()).or_default().push(c);
    }
    let mut gamblers: Vec<GamblerFinding> = by_gambler
        .into_iter()
        .map(|(id, rows)| assess(id, &rows, catalog, config))
        .collect();
    gamblers.sort_by(|a, b| {
        b.sort_spend()
            .total_cmp(&a.sort_spend())
            .then_with(|| a.gambler_id.cmp(&b.gambler_id))
    });
    Ok(ScreeningReport {
        config: *config,
        plausibility_line: PLAUSIBILITY_LINE,
        population_eps: config.population * config.eps,
        catalog_warnings: catalog.warnings.clone(),
        gamblers,
    })
}

fn insufficient(gambler_id: &str, profile: Option<GamblerProfile>, note: String) -> GamblerFinding {
    GamblerFinding {
        gambler_id: gambler_id.to_string(),
        profile,
        route: Route::None,
        spend_bound: None,
        probability: None,
        population_adjusted: None,
        budget_check: None,
        verdict: Verdict::InsufficientData,
        notes: vec![note],
    }
}

fn assess(
    gambler_id: &str,
    rows: &[&ClaimRecord],
    catalog: &Catalog,
    config: &ScreeningConfig,
) -> GamblerFinding {
    let profile = match build_profile(gambler_id, rows, catalog) {
        Ok(p) => p,
        Err(e) => return insufficient(gambler_id, None, e.to_string()),
    };
    let mut notes = Vec::new();
    if profile.draw_heuristic_applied {
        notes.push(
            "same-date claims without a draw id were merged into one multi-unit wager".to_string(),
        );
    }

    let budget = take_home_budget(&profile, config);
    let budget_check = match budget_solution(&profile, budget) {
        Ok(s) => {
            let probability = s.probability();
            population_adjust(probability, config.population)
                .ok()
                .map(|population_adjusted| BudgetCheck {
                    budget,
                    probability,
                    population_adjusted,
                })
        }
        Err(e) => {
            notes.push(format!("take-home budget check skipped: {e}"));
            None
        }
    };

    if profile.dependent_wins.is_empty() {
        let bound = match min_spend_for_profile(&profile, config) {
            Ok(b) => b,
            Err(e) => {
                let mut f = insufficient(gambler_id, Some(profile), e.to_string());
                f.notes.splice(0..0, notes);
                return f;
            }
        };
        if !bound.converged {
            notes.push("solver did not reach full tolerance; spend is approximate".into());
        }
        let adjusted = (config.population * config.eps).min(1.0);
        let verdict = if bound.spend > config.flag_spend_threshold && adjusted < PLAUSIBILITY_LINE {
            Verdict::Implausible
        } else {
            Verdict::PlausiblyLucky
        };
        return GamblerFinding {
            gambler_id: gambler_id.to_string(),
            profile: Some(profile),
            route: Route::MinSpend,
            spend_bound: Some(bound),
            probability: Some(config.eps),
            population_adjusted: Some(adjusted),
            budget_check,
            verdict,
            notes,
        };
    }

    notes.push(format!(
        "dependent wins on {}; product bound does not apply",
        profile.dependent_wins.join(", ")
    ));
    let Some(check) = budget_check else {
        let mut f = insufficient(
            gambler_id,
            Some(profile),
            "take-home budget is below the cost of the winning tickets".into(),
        );
        f.notes.splice(0..0, notes);
        return f;
    };
    let verdict = if check.population_adjusted < PLAUSIBILITY_LINE {
        Verdict::Implausible
    } else {
        Verdict::PlausiblyLucky
    };
    GamblerFinding {
        gambler_id: gambler_id.to_string(),
        profile: Some(profile),
        route: Route::BudgetPlausibility,
        spend_bound: None,
        probability: Some(check.probability),
        population_adjusted: Some(check.population_adjusted),
        budget_check: Some(check),
        verdict,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn claim(
        g: &str,
        date: &str,
        bet: &str,
        prize: f64,
        draw: Option<&str>,
        units: u32,
    ) -> ClaimRecord {
        ClaimRecord {
            gambler_id: g.into(),
            claim_date: date.into(),
            bet_id: bet.into(),
            prize_amount: prize,
            draw_id: draw.map(String::from),
            units,
        }
    }

    fn fixture() -> Vec<ClaimRecord> {
        load_claims(FIXTURE_CLAIMS_CSV.as_bytes(), 600.0).unwrap()
    }

    #[test]
    fn bundled_catalog() {
        let cat = Catalog::play4();
        assert_eq!(cat.len(), 5);
        assert!(cat.warnings.is_empty());
        let straight = cat.get("play4-straight").unwrap();
        assert_eq!((straight.win_prob, straight.prize), (1e-4, 5000.0));
        let box4 = cat.get("play4-box4").unwrap();
        assert_eq!((box4.win_prob, box4.prize), (4e-4, 1198.0));
        let box6 = cat.get("play4-box6").unwrap();
        assert_eq!((box6.win_prob, box6.prize), (6e-4, 800.0));
    }

    #[test]
    fn empty_catalog_warns() {
        let cat = load_catalog(&b""[..]).unwrap();
        assert!(cat.is_empty());
        assert_eq!(cat.warnings.len(), 1);
        let cat = load_catalog(&b"bet_id,game,cost,win_prob,prize,recordable\n"[..]).unwrap();
        assert!(cat.is_empty() && !cat.warnings.is_empty());
    }

    #[test]
    fn catalog_rejections() {
        let bad_p = "bet_id,game,cost,win_prob,prize,recordable\nx,G,1,1.5,10,true\n";
        match load_catalog(bad_p.as_bytes()) {
            Err(Error::Parse { line: 2, message }) => {
                assert!(message.contains("win_prob"), "{message}")
            }
            other => panic!("{other:?}"),
        }
        let dup =
            "bet_id,game,cost,win_prob,prize,recordable\nx,G,1,0.1,1,true\nx,G,1,0.2,1,true\n";
        assert_eq!(
            load_catalog(dup.as_bytes()),
            Err(Error::DuplicateBet("x".into()))
        );
        let ragged = "bet_id,game,cost,win_prob,prize,recordable\nx,G,1,0.1\n";
        assert!(matches!(
            load_catalog(ragged.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let no_col = "bet_id,game,cost,prize,recordable\n";
        assert!(matches!(
            load_catalog(no_col.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn fractions_and_decimals() {
        assert_eq!(parse_probability("1/10000"), Some(1e-4));
        assert_eq!(parse_probability("0.25"), Some(0.25));
        assert_eq!(parse_probability("1/0"), None);
        assert_eq!(parse_probability("x"), None);
    }

    #[test]
    fn claim_validation() {
        let h = "gambler_id,claim_date,bet_id,prize_amount,draw_id,units\n";
        let ok = format!("{h}a,2012-02-29,play4-straight,5000,,\n");
        assert_eq!(load_claims(ok.as_bytes(), 600.0).unwrap()[0].units, 1);
        for row in [
            "a,2013-02-29,play4-straight,5000,,1",
            "a,2013/01/01,play4-straight,5000,,1",
            "a,2013-01-01,play4-straight,100,,1",
            "a,2013-01-01,play4-straight,5000,,0",
            ",2013-01-01,play4-straight,5000,,1",
        ] {
            let src = format!("{h}{row}\n");
            assert!(
                matches!(
                    load_claims(src.as_bytes(), 600.0),
                    Err(Error::Parse { line: 2, .. })
                ),
                "{row}"
            );
        }
        assert!(load_claims(&b""[..], 600.0).unwrap().is_empty());
    }

    #[test]
    fn same_draw_units_collapse() {
        let claims: Vec<_> = (0..52)
            .map(|_| claim("h", "2011-12-06", "play4-box4", 1198.0, None, 1))
            .collect();
        let p = &build_profiles(&claims, &Catalog::play4()).unwrap()[0];
        assert_eq!(p.unit_classes.len(), 1);
        let c = &p.unit_classes[0];
        assert_eq!(
            (c.units, c.wins, c.cost, c.prize),
            (52, 1, 52.0, 52.0 * 1198.0)
        );
        assert!(p.draw_heuristic_applied);
        assert!(p.dependent_wins.is_empty());
    }

    #[test]
    fn johnson_profile() {
        let profiles = build_profiles(&fixture(), &Catalog::play4()).unwrap();
        let j = profiles
            .iter()
            .find(|p| p.gambler_id == "louis-johnson")
            .unwrap();
        assert_eq!(j.wins_by_bet["play4-straight"], 57);
        assert_eq!(j.unit_classes.len(), 1);
        assert!(j.dependent_wins.is_empty());
        assert!(!j.draw_heuristic_applied);
        let bound = min_spend_for_profile(j, &ScreeningConfig::default()).unwrap();
        assert!(
            (bound.spend / 174_000.0 - 1.0).abs() < 0.01,
            "{}",
            bound.spend
        );
    }

    #[test]
    fn h_profile_classes() {
        let profiles = build_profiles(&fixture(), &Catalog::play4()).unwrap();
        let h = profiles
            .iter()
            .find(|p| p.gambler_id == "h-hollywood")
            .unwrap();
        let classes: Vec<_> = h.unit_classes.iter().map(|c| (c.units, c.wins)).collect();
        assert_eq!(classes, vec![(1, 2), (50, 1), (100, 1), (200, 2)]);
        assert!(h.draw_heuristic_applied);
    }

    #[test]
    fn single_claim_profile() {
        let p = build_profiles(
            &[claim("a", "2012-01-01", "play4-box6", 800.0, None, 1)],
            &Catalog::play4(),
        )
        .unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].total_wins(), 1);
        assert_eq!(p[0].wins_by_bet["play4-box6"], 1);
    }

    #[test]
    fn unknown_bets_listed() {
        let claims = [
            claim("a", "2012-01-01", "nope", 800.0, None, 1),
            claim("b", "2012-01-01", "also-nope", 800.0, None, 1),
            claim("b", "2012-01-02", "play4-box6", 800.0, None, 1),
        ];
        assert_eq!(
            build_profiles(&claims, &Catalog::play4()),
            Err(Error::UnknownBets(vec!["also-nope".into(), "nope".into()]))
        );
    }

    #[test]
    fn dependent_wins_detected_and_refused() {
        let claims = [
            claim("a", "2012-01-01", "play4-straight", 5000.0, Some("D1"), 1),
            claim("a", "2012-01-01", "play4-box4", 1198.0, Some("D1"), 1),
            claim("a", "2012-01-09", "play4-box4", 1198.0, Some("D2"), 1),
        ];
        let p = &build_profiles(&claims, &Catalog::play4()).unwrap()[0];
        assert_eq!(p.dependent_wins, vec!["D1".to_string()]);
        assert!(matches!(
            min_spend_for_profile(p, &ScreeningConfig::default()),
            Err(Error::DependentWins(_))
        ));
        let report = screen(&claims, &Catalog::play4(), &ScreeningConfig::default()).unwrap();
        assert_eq!(report.gamblers[0].route, Route::BudgetPlausibility);
    }

    #[test]
    fn empty_profile_spends_nothing() {
        let p = GamblerProfile {
            gambler_id: "z".into(),
            wins_by_bet: BTreeMap::new(),
            unit_classes: vec![],
            dependent_wins: vec![],
            claims: 0,
            total_prize: 0.0,
            draw_heuristic_applied: false,
        };
        assert_eq!(
            min_spend_for_profile(&p, &ScreeningConfig::default())
                .unwrap()
                .spend,
            0.0
        );
        let mut with_zero = p.clone();
        with_zero.unit_classes.push(UnitClass {
            bet_id: "play4-straight".into(),
            units: 1,
            cost: 1.0,
            win_prob: 1e-4,
            prize: 5000.0,
            wins: 0,
        });
        assert_eq!(
            min_spend_for_profile(&with_zero, &ScreeningConfig::default())
                .unwrap()
                .spend,
            0.0
        );
    }

    #[test]
    fn johnson_budget_probability() {
        let profiles = build_profiles(&fixture(), &Catalog::play4()).unwrap();
        let j = profiles
            .iter()
            .find(|p| p.gambler_id == "louis-johnson")
            .unwrap();
        let prob = assess_budget_plausibility(j, 175_000.0, &ScreeningConfig::default()).unwrap();
        assert!((prob / 6.3e-14 - 1.0).abs() < 0.05, "{prob}");
        let vertex = assess_budget_plausibility(j, 57.0, &ScreeningConfig::default()).unwrap();
        assert!((vertex.ln() - 57.0 * 1e-4f64.ln()).abs() < 1e-9);
        assert!(matches!(
            assess_budget_plausibility(j, 56.0, &ScreeningConfig::default()),
            Err(Error::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn population_adjust_examples() {
        assert!((population_adjust(6.3e-14, 1.9e7).unwrap() - 1.197e-6).abs() < 1e-9);
        assert_eq!(population_adjust(0.0, 123.0).unwrap(), 0.0);
        assert_eq!(population_adjust(0.5, 4.0).unwrap(), 1.0);
        assert!(population_adjust(1.5, 4.0).is_err());
        assert!(population_adjust(0.5, 0.5).is_err());
    }

    #[test]
    fn fixture_verdicts() {
        let report = screen(&fixture(), &Catalog::play4(), &ScreeningConfig::default()).unwrap();
        let ids: Vec<_> = report
            .gamblers
            .iter()
            .map(|g| g.gambler_id.as_str())
            .collect();
        assert_eq!(ids, ["louis-johnson", "h-hollywood"]);
        assert_eq!(report.gamblers[0].verdict, Verdict::Implausible);
        assert_eq!(report.gamblers[1].verdict, Verdict::PlausiblyLucky);
        assert_eq!(report.flagged().count(), 1);
        assert!(report.gamblers[1]
            .notes
            .iter()
            .any(|n| n.contains("merged")));
    }

    #[test]
    fn one_win_is_lucky() {
        let claims = [claim("a", "2012-01-01", "play4-straight", 5000.0, None, 1)];
        let report = screen(&claims, &Catalog::play4(), &ScreeningConfig::default()).unwrap();
        assert_eq!(report.gamblers[0].verdict, Verdict::PlausiblyLucky);
    }

    #[test]
    fn bad_gambler_isolated() {
        let mut claims = fixture();
        claims.push(claim("zed", "2012-01-01", "mystery", 5000.0, None, 1));
        let report = screen(&claims, &Catalog::play4(), &ScreeningConfig::default()).unwrap();
        assert_eq!(report.gamblers.len(), 3);
        let z = report
            .gamblers
            .iter()
            .find(|g| g.gambler_id == "zed")
            .unwrap();
        assert_eq!(z.verdict, Verdict::InsufficientData);
        assert_eq!(report.flagged().count(), 1);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = screen(&fixture(), &Catalog::play4(), &ScreeningConfig::default()).unwrap();
        let b = screen(&fixture(), &Catalog::play4(), &ScreeningConfig::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_table(), b.to_table());
    }

    fn arb_claims() -> impl Strategy<Value = Vec<ClaimRecord>> {
        let bets = ["play4-straight", "play4-box4", "play4-box6"];
        prop::collection::vec(
            (0..3usize, 0..3usize, 1..6u32, 1..4u32, any::<bool>()),
            1..40,
        )
        .prop_map(move |rows| {
            rows.into_iter()
                .map(|(g, b, day, units, with_id)| {
                    let date = format!("2012-01-{day:02}");
                    let draw = with_id.then(|| format!("D{day}"));
                    claim(
                        &format!("g{g}"),
                        &date,
                        bets[b],
                        5000.0,
                        draw.as_deref(),
                        units,
                    )
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn claims_are_conserved(claims in arb_claims()) {
            let profiles = build_profiles(&claims, &Catalog::play4()).unwrap();
            let rows: u64 = claims.iter().map(|c| u64::from(c.units)).sum();
            let out: u64 = profiles
                .iter()
                .flat_map(|p| &p.unit_classes)
                .map(|c| c.wins * u64::from(c.units))
                .sum();
            prop_assert_eq!(rows, out);
            prop_assert_eq!(profiles.iter().map(|p| p.claims).sum::<u64>(), rows);
            for p in &profiles {
                prop_assert_eq!(p.wins_by_bet.values().sum::<u64>(), p.total_wins());
            }
        }

        #[test]
        fn population_adjust_monotone(p in 0.0..1.0f64, q in 0.0..1.0f64, n in 1.0..1e9f64, m in 1.0..1e9f64) {
            let (lo_p, hi_p) = (p.min(q), p.max(q));
            let (lo_n, hi_n) = (n.min(m), n.max(m));
            let a = population_adjust(lo_p, lo_n).unwrap();
            prop_assert!(a <= population_adjust(hi_p, lo_n).unwrap());
            prop_assert!(a <= population_adjust(lo_p, hi_n).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
