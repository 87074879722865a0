//! Minimum plausible spend and maximum win probability.
//!
//! Both programs share one structure: a linear cost `c·n` and a separable
//! concave term `Σ ln D(n_i; w_i, p_i)`, with `n_i >= w_i`. At a KKT point
//! every coordinate above its floor satisfies
//! `∂/∂n_i ln D(n_i) = c_i / λ` for a single multiplier `λ`, and every
//! coordinate pinned at `w_i` has derivative at most `c_i / λ`. Because the
//! derivative is positive and strictly decreasing in `n_i`, each coordinate
//! is a monotone function of `λ`, so the whole problem reduces to nested
//! one-dimensional bisections. Concavity makes the KKT point the global
//! optimum.

use serde::{Deserialize, Serialize};

use crate::betamath::{dln_tail_dn, ln_tail};
use crate::error::{domain, Error, Result};

/// Bisection range for `ln λ`, i.e. `λ ∈ [1e-30, 1e30]`.
const LN_LAMBDA_MIN: f64 = -69.077_552_789_821_37;
const LN_LAMBDA_MAX: f64 = 69.077_552_789_821_37;
pub const MAX_OUTER_ITERATIONS: usize = 200;
pub const MAX_INNER_ITERATIONS: usize = 200;
/// Relative tolerance on `Σ ln D - ln ε` for the minimum-spend program.
pub const LOG_PROB_RTOL: f64 = 1e-8;
/// Relative tolerance on the budget for the maximum-probability program.
pub const BUDGET_RTOL: f64 = 1e-9;

/// One kind of wager: what it costs, how often it wins, how often it won.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bet {
    pub cost: f64,
    pub win_prob: f64,
    pub wins: u64,
}

impl Bet {
    pub fn new(cost: f64, win_prob: f64, wins: u64) -> Result<Self> {
        let b = Self {
            cost,
            win_prob,
            wins,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::InvalidField {
                field: "cost",
                reason: format!("must be positive, got {}", self.cost),
            });
        }
        if !(self.win_prob > 0.0 && self.win_prob < 1.0) {
            return Err(Error::InvalidField {
                field: "win_prob",
                reason: format!("must lie strictly in (0, 1), got {}", self.win_prob),
            });
        }
        Ok(())
    }

    fn floor(&self) -> f64 {
        self.wins as f64
    }

    fn ln_tail(&self, n: f64) -> Result<f64> {
        ln_tail(n, self.wins, self.win_prob)
    }
}

fn vertex_cost(bets: &[Bet]) -> f64 {
    bets.iter().map(|b| b.cost * b.floor()).sum()
}

fn vertex_log_prob(bets: &[Bet]) -> f64 {
    bets.iter().map(|b| b.floor() * b.win_prob.ln()).sum()
}

fn validate_bets(bets: &[Bet]) -> Result<()> {
    if bets.is_empty() {
        return Err(domain("at least one bet is required"));
    }
    bets.iter().try_for_each(Bet::validate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinSpendProblem {
    pub bets: Vec<Bet>,
    pub eps: f64,
}

impl MinSpendProblem {
    pub fn new(bets: Vec<Bet>, eps: f64) -> Result<Self> {
        let p = Self { bets, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        validate_bets(&self.bets)?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidField {
                field: "eps",
                reason: format!("must lie in (0, 1), got {}", self.eps),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxProbProblem {
    pub bets: Vec<Bet>,
    pub budget: f64,
}

impl MaxProbProblem {
    pub fn new(bets: Vec<Bet>, budget: f64) -> Result<Self> {
        let p = Self { bets, budget };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        validate_bets(&self.bets)?;
        if !self.budget.is_finite() {
            return Err(Error::InvalidField {
                field: "budget",
                reason: format!("must be finite, got {}", self.budget),
            });
        }
        let vertex = vertex_cost(&self.bets);
        if self.budget < vertex {
            return Err(Error::InfeasibleBudget {
                budget: self.budget,
                vertex_cost: vertex,
                deficit: vertex - self.budget,
            });
        }
        Ok(())
    }
}

/// Optimal continuous ticket vector for the minimum-spend program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpendBound {
    /// Which bets of the original problem `n_star` refers to.
    pub indices: Vec<usize>,
    pub n_star: Vec<f64>,
    pub spend: f64,
    pub achieved_log_prob: f64,
    /// Original indices with `n_i* > w_i`.
    pub active_set: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    /// Solved over a subset of the bets; still a lower bound for the full set.
    pub relaxed: bool,
    /// `n_star` rounded up to whole tickets, and its cost.
    pub rounded_n: Vec<f64>,
    pub rounded_spend: f64,
}

impl SpendBound {
    fn assemble(
        bets: &[Bet],
        indices: Vec<usize>,
        n_star: Vec<f64>,
        achieved_log_prob: f64,
        iterations: usize,
    ) -> Self {
        let spend = dot(bets, &n_star);
        let rounded_n: Vec<f64> = n_star.iter().map(|n| n.ceil()).collect();
        let rounded_spend = dot(bets, &rounded_n);
        let active_set = n_star
            .iter()
            .zip(bets)
            .zip(&indices)
            .filter(|((n, b), _)| **n > b.floor())
            .map(|(_, &i)| i)
            .collect();
        Self {
            indices,
            n_star,
            spend,
            achieved_log_prob,
            active_set,
            converged: true,
            iterations,
            relaxed: false,
            rounded_n,
            rounded_spend,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxProbSolution {
    pub n_star: Vec<f64>,
    pub log_prob: f64,
    pub spend: f64,
    /// False when spending less than the budget already drives every tail to 1
    /// (to double precision).
    pub budget_binding: bool,
    pub iterations: usize,
}

impl MaxProbSolution {
    pub fn probability(&self) -> f64 {
        self.log_prob.exp()
    }
}

fn dot(bets: &[Bet], n: &[f64]) -> f64 {
    bets.iter().zip(n).map(|(b, n)| b.cost * n).sum()
}

/// Smallest `n >= w` where the marginal log-probability per ticket falls to
/// `slope`. `bracket` holds known bounds on the answer, when available.
fn coordinate_response(bet: &Bet, slope: f64, bracket: (f64, Option<f64>)) -> Result<f64> {
    if bet.wins == 0 {
        return Ok(0.0);
    }
    let w = bet.floor();
    let g = |n: f64| dln_tail_dn(n, bet.wins, bet.win_prob);
    let (mut lo, hi) = bracket;
    lo = lo.max(w);
    if lo == w && g(w)? <= slope {
        return Ok(w);
    }
    let mut hi = match hi {
        Some(hi) if hi > lo => hi,
        _ => {
            let mut step = w.max(1.0);
            let mut hi = lo + step;
            while g(hi)? > slope {
                lo = hi;
                step *= 2.0;
                hi = lo + step;
                if !hi.is_finite() || hi > 1e300 {
                    return Err(domain(format!(
                        "no ticket count reaches marginal slope {slope:e}"
                    )));
                }
            }
            hi
        }
    };
    for _ in 0..MAX_INNER_ITERATIONS {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? > slope {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Best response of every coordinate to multiplier `exp(ln_lambda)`.
fn respond(
    bets: &[Bet],
    ln_lambda: f64,
    lower: &[f64],
    upper: Option<&[f64]>,
) -> Result<(Vec<f64>, f64)> {
    let lambda = ln_lambda.exp();
    let n = bets
        .iter()
        .enumerate()
        .map(|(i, b)| coordinate_response(b, b.cost / lambda, (lower[i], upper.map(|u| u[i]))))
        .collect::<Result<Vec<_>>>()?;
    // fixed summation order
    let mut total = 0.0;
    for (b, &ni) in bets.iter().zip(&n) {
        total += b.ln_tail(ni)?;
    }
    Ok((n, total))
}

fn floors(bets: &[Bet]) -> Vec<f64> {
    bets.iter().map(Bet::floor).collect()
}

/// Cheapest continuous ticket vector whose product of tails reaches `eps`.
pub fn solve_min_spend(prob: &MinSpendProblem) -> Result<SpendBound> {
    prob.validate()?;
    let bets = &prob.bets;
    let indices: Vec<usize> = (0..bets.len()).collect();
    let target = prob.eps.ln();
    let tol = LOG_PROB_RTOL * target.abs();

    let vertex_lp = vertex_log_prob(bets);
    if vertex_lp >= target {
        return Ok(SpendBound::assemble(
            bets,
            indices,
            floors(bets),
            vertex_lp,
            0,
        ));
    }

    let mut lo = (LN_LAMBDA_MIN, floors(bets));
    let (n_hi, lp_hi) = respond(bets, LN_LAMBDA_MAX, &lo.1, None)?;
    if lp_hi < target {
        return Err(Error::SolverStalled {
            iterations: 0,
            last_spend: dot(bets, &n_hi),
            last_n: n_hi,
            gap: lp_hi - target,
        });
    }
    let mut hi = (LN_LAMBDA_MAX, n_hi, lp_hi);

    for it in 1..=MAX_OUTER_ITERATIONS {
        let mid = 0.5 * (lo.0 + hi.0);
        let (n, lp) = respond(bets, mid, &lo.1, Some(&hi.1))?;
        if (lp - target).abs() <= tol {
            return Ok(SpendBound::assemble(bets, indices, n, lp, it));
        }
        if lp < target {
            lo = (mid, n);
        } else {
            hi = (mid, n, lp);
        }
    }
    Err(Error::SolverStalled {
        iterations: MAX_OUTER_ITERATIONS,
        last_spend: dot(bets, &hi.1),
        last_n: hi.1,
        gap: hi.2 - target,
    })
}

/// Minimum spend over a subset of the bets. Dropping constraints can only
/// lower the optimum, so the result is a relaxed lower bound for the full set.
pub fn solve_min_spend_subset(prob: &MinSpendProblem, keep: &[usize]) -> Result<SpendBound> {
    prob.validate()?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(domain("subset must keep at least one bet"));
    }
    if let Some(&bad) = keep.iter().find(|&&i| i >= prob.bets.len()) {
        return Err(domain(format!(
            "bet index {bad} out of range for {} bets",
            prob.bets.len()
        )));
    }
    let sub = MinSpendProblem {
        bets: keep.iter().map(|&i| prob.bets[i]).collect(),
        eps: prob.eps,
    };
    let mut bound = solve_min_spend(&sub)?;
    bound.active_set = bound.active_set.iter().map(|&i| keep[i]).collect();
    bound.relaxed = keep.len() < prob.bets.len();
    bound.indices = keep;
    Ok(bound)
}

/// Largest product of tails reachable while spending at most the budget.
pub fn solve_max_prob(prob: &MaxProbProblem) -> Result<MaxProbSolution> {
    prob.validate()?;
    let bets = &prob.bets;
    let budget = prob.budget;
    let tol = BUDGET_RTOL * budget.abs().max(1.0);
    let vertex = vertex_cost(bets);

    let solution =
        |n: Vec<f64>, log_prob: f64, budget_binding: bool, iterations: usize| MaxProbSolution {
            spend: dot(bets, &n),
            n_star: n,
            log_prob,
            budget_binding,
            iterations,
        };

    if budget - vertex <= tol {
        return Ok(solution(floors(bets), vertex_log_prob(bets), true, 0));
    }

    let mut lo = (LN_LAMBDA_MIN, floors(bets));
    let (n_hi, lp_hi) = respond(bets, LN_LAMBDA_MAX, &lo.1, None)?;
    if dot(bets, &n_hi) <= budget {
        return Ok(solution(n_hi, lp_hi, false, 0));
    }
    let mut hi = (LN_LAMBDA_MAX, n_hi);

    for it in 1..=MAX_OUTER_ITERATIONS {
        let mid = 0.5 * (lo.0 + hi.0);
        let (n, lp) = respond(bets, mid, &lo.1, Some(&hi.1))?;
        let spend = dot(bets, &n);
        if spend <= budget && budget - spend <= tol {
            return Ok(solution(n, lp, true, it));
        }
        if spend < budget {
            lo = (mid, n);
        } else {
            hi = (mid, n);
        }
    }
    let last_spend = dot(bets, &lo.1);
    Err(Error::SolverStalled {
        iterations: MAX_OUTER_ITERATIONS,
        last_n: lo.1,
        last_spend,
        gap: budget - last_spend,
    })
}
