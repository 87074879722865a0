//! Slow, independent reference computations.
//!
//! Nothing here calls into `betamath` or `solver`: the binomial tail is a
//! direct sum over the probability mass function, the spend optimum is an
//! exhaustive integer scan, and the ruin process is simulated ticket by
//! ticket (skipping runs of losses with geometric draws).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ruin::BankrollScenario;
use crate::solver::Bet;

/// Largest ticket count the direct summation accepts.
pub const EXACT_TAIL_MAX_N: u64 = 100_000;

/// Minimum trial count for [`simulate_ruin`].
pub const MIN_RUIN_TRIALS: u64 = 1_000;

const TRIALS_PER_STREAM: u64 = 4_096;

/// RNG seed, recorded alongside every randomized result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Independent stream for the `index`-th block of work (SplitMix64 mix).
    pub fn derive(self, index: u64) -> Seed {
        let mut z = self.0 ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = CompensatedSum::default();
    for i in 1..=k {
        acc.add(((n - k + i) as f64 / i as f64).ln());
    }
    acc.value()
}

fn ln_pmf(n: u64, k: u64, p: f64) -> f64 {
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// `ln Σ_{k=lo}^{hi} C(n,k) p^k (1-p)^{n-k}`, anchored at the largest term.
fn ln_pmf_range(n: u64, p: f64, lo: u64, hi: u64) -> f64 {
    if lo > hi {
        return f64::NEG_INFINITY;
    }
    let mode = (((n + 1) as f64) * p).floor() as u64;
    let anchor = mode.clamp(lo, hi);
    let odds = p / (1.0 - p);

    let mut acc = CompensatedSum::default();
    acc.add(1.0);
    let mut term = 1.0;
    for k in anchor + 1..=hi {
        term *= (n - k + 1) as f64 / k as f64 * odds;
        acc.add(term);
        if term < 1e-20 * acc.value() {
            break;
        }
    }
    term = 1.0;
    for k in (lo..anchor).rev() {
        term *= (k + 1) as f64 / (n - k) as f64 / odds;
        acc.add(term);
        if term < 1e-20 * acc.value() {
            break;
        }
    }
    ln_pmf(n, anchor, p) + acc.value().ln()
}

fn check_exact_args(n: u64, w: u64, p: f64) -> Result<()> {
    if n > EXACT_TAIL_MAX_N {
        return Err(Error::Guard(format!(
            "exact binomial sum limited to n <= {EXACT_TAIL_MAX_N}, got {n}"
        )));
    }
    if w > n {
        return Err(domain(format!("win count {w} exceeds ticket count {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!(
            "win probability must lie in (0, 1), got {p}"
        )));
    }
    Ok(())
}

/// `ln P(Bin(n, p) >= w)` by direct summation.
pub fn exact_binomial_ln_tail(n: u64, w: u64, p: f64) -> Result<f64> {
    check_exact_args(n, w, p)?;
    if w == 0 {
        return Ok(0.0);
    }
    Ok(ln_pmf_range(n, p, w, n))
}

/// `P(Bin(n, p) >= w)` by direct summation.
pub fn exact_binomial_tail(n: u64, w: u64, p: f64) -> Result<f64> {
    Ok(exact_binomial_ln_tail(n, w, p)?.exp())
}

/// `P(Bin(n, p) <= w - 1)`, the complement of [`exact_binomial_tail`].
pub fn exact_binomial_head(n: u64, w: u64, p: f64) -> Result<f64> {
    check_exact_args(n, w, p)?;
    if w == 0 {
        return Ok(0.0);
    }
    Ok(ln_pmf_range(n, p, 0, w - 1).exp())
}

/// Cheapest integer ticket vector found by exhaustive scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub n: Vec<u64>,
    pub spend: f64,
}

/// Exhaustive search over `n_i ∈ [w_i, w_i + radius]` for the cheapest
/// vector whose product of exact binomial tails reaches `eps`. One or two bets.
pub fn grid_min_spend(bets: &[Bet], eps: f64, radius: u64) -> Result<GridOptimum> {
    if bets.is_empty() || bets.len() > 2 {
        return Err(domain(format!(
            "grid search handles 1 or 2 bets, got {}",
            bets.len()
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let target = eps.ln();
    let tails: Vec<Vec<f64>> = bets
        .iter()
        .map(|b| {
            (0..=radius)
                .map(|k| exact_binomial_ln_tail(b.wins + k, b.wins, b.win_prob))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut best: Option<GridOptimum> = None;
    let mut consider = |n: Vec<u64>| {
        let spend: f64 = n.iter().zip(bets).map(|(&k, b)| k as f64 * b.cost).sum();
        if best.as_ref().is_none_or(|g| spend < g.spend) {
            best = Some(GridOptimum { n, spend });
        }
    };
    match bets {
        [a] => {
            if let Some(k) = tails[0].iter().position(|&t| t >= target) {
                consider(vec![a.wins + k as u64]);
            }
        }
        [a, b] => {
            for (i, &ta) in tails[0].iter().enumerate() {
                for (j, &tb) in tails[1].iter().enumerate() {
                    if ta + tb >= target {
                        consider(vec![a.wins + i as u64, b.wins + j as u64]);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    best.ok_or_else(|| domain(format!("no feasible point within radius {radius}")))
}

/// Monte Carlo estimates for the play-until-broke process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub trials: u64,
    pub seed: Seed,
    pub mean_stopping_time: f64,
    pub se_stopping_time: f64,
    pub mean_wins: f64,
    pub se_wins: f64,
    pub mean_final_bankroll: f64,
    pub se_final_bankroll: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Moments {
    fn push(&mut self, x: [f64; 3]) {
        self.n += 1.0;
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for i in 0..3 {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
    }

    fn mean_se(&self, i: usize) -> (f64, f64) {
        let mean = self.sum[i] / self.n;
        let var = ((self.sum_sq[i] - self.n * mean * mean) / (self.n - 1.0)).max(0.0);
        (mean, (var / self.n).sqrt())
    }
}

/// One gambler: buy tickets until the bankroll is below one ticket cost.
/// Returns (tickets bought, prizes won, final bankroll).
fn play_until_broke<R: Rng>(
    s: &BankrollScenario,
    losses: Option<&Geometric>,
    rng: &mut R,
) -> [f64; 3] {
    let c = s.ticket.cost;
    let mut bankroll = s.bankroll;
    let mut tickets = 0u64;
    let mut wins = 0u64;
    loop {
        let affordable = (bankroll / c + 1e-9).floor() as u64;
        if affordable == 0 {
            break;
        }
        let run = losses.map_or(u64::MAX, |g| g.sample(rng));
        if run >= affordable {
            tickets += affordable;
            bankroll = (bankroll - affordable as f64 * c).max(0.0);
            break;
        }
        tickets += run + 1;
        wins += 1;
        bankroll += s.ticket.prize - (run + 1) as f64 * c;
    }
    [tickets as f64, wins as f64, bankroll]
}

/// Simulate `trials` independent gamblers. Trials are split into fixed-size
/// blocks with seeds derived from `seed`, so the estimate does not depend on
/// how the blocks are scheduled.
pub fn simulate_ruin(s: &BankrollScenario, trials: u64, seed: Seed) -> Result<RuinEstimate> {
    s.validate()?;
    if trials < MIN_RUIN_TRIALS {
        return Err(domain(format!(
            "need at least {MIN_RUIN_TRIALS} trials, got {trials}"
        )));
    }
    let losses = if s.ticket.win_prob > 0.0 {
        Some(Geometric::new(s.ticket.win_prob).map_err(|e| domain(e.to_string()))?)
    } else {
        None
    };

    let blocks = trials.div_ceil(TRIALS_PER_STREAM);
    let mut total = Moments::default();
    for block in 0..blocks {
        let mut rng = seed.derive(block).rng();
        let count = TRIALS_PER_STREAM.min(trials - block * TRIALS_PER_STREAM);
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(play_until_broke(s, losses.as_ref(), &mut rng));
        }
        total.merge(&m);
    }

    let (mean_stopping_time, se_stopping_time) = total.mean_se(0);
    let (mean_wins, se_wins) = total.mean_se(1);
    let (mean_final_bankroll, se_final_bankroll) = total.mean_se(2);
    Ok(RuinEstimate {
        trials,
        seed,
        mean_stopping_time,
        se_stopping_time,
        mean_wins,
        se_wins,
        mean_final_bankroll,
        se_final_bankroll,
    })
}
