//! How long a gambler who recycles winnings can keep buying tickets.
//!
//! With ticket value `X` (payoff minus cost), `E(X) < 0`, and `T` the first
//! time the bankroll drops below one ticket cost, Wald's equation
//! `E(S_T) = S_0 + E(T) E(X)` together with `0 <= E(S_T) < c` pins
//! `E(T)` between `(S_0 - c) / |E(X)|` and `S_0 / |E(X)|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A ticket paying `prize` with probability `win_prob` and nothing otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TicketSpec {
    pub cost: f64,
    pub prize: f64,
    pub win_prob: f64,
}

impl TicketSpec {
    pub fn new(cost: f64, prize: f64, win_prob: f64) -> Result<Self> {
        let t = Self {
            cost,
            prize,
            win_prob,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(field(
                "cost",
                format!("must be positive, got {}", self.cost),
            ));
        }
        if !(self.prize >= 0.0 && self.prize.is_finite()) {
            return Err(field("prize", format!("must be >= 0, got {}", self.prize)));
        }
        if !(0.0..1.0).contains(&self.win_prob) {
            return Err(field(
                "win_prob",
                format!("must lie in [0, 1), got {}", self.win_prob),
            ));
        }
        if self.expected_value() >= 0.0 {
            return Err(field(
                "expected_value",
                format!(
                    "ticket must lose money on average, E(X) = {}",
                    self.expected_value()
                ),
            ));
        }
        Ok(())
    }

    /// `E(X) = p j - c`.
    pub fn expected_value(&self) -> f64 {
        self.win_prob * self.prize - self.cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankrollScenario {
    pub bankroll: f64,
    pub ticket: TicketSpec,
}

impl BankrollScenario {
    pub fn new(bankroll: f64, ticket: TicketSpec) -> Result<Self> {
        let s = Self { bankroll, ticket };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.ticket.validate()?;
        if !(self.bankroll.is_finite() && self.bankroll >= self.ticket.cost) {
            return Err(field(
                "bankroll",
                format!(
                    "must cover at least one ticket ({}), got {}",
                    self.ticket.cost, self.bankroll
                ),
            ));
        }
        Ok(())
    }

    /// True when the bankroll and every possible ticket value are integer
    /// multiples of the cost, the case where the upper bound is attained.
    pub fn is_lattice(&self) -> bool {
        let c = self.ticket.cost;
        is_multiple(self.bankroll, c) && is_multiple(self.ticket.prize, c)
    }
}

fn is_multiple(x: f64, c: f64) -> bool {
    let r = x / c;
    (r - r.round()).abs() <= 1e-9 * r.abs().max(1.0)
}

fn field(name: &'static str, reason: String) -> Error {
    Error::InvalidField {
        field: name,
        reason,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimeBounds {
    /// Strict lower bound `(S_0 - c) / |E(X)|`.
    pub lower: f64,
    /// Upper bound `S_0 / |E(X)|`.
    pub upper: f64,
    /// `E(T)` itself, when the lattice condition makes the upper bound exact.
    pub exact: Option<f64>,
}

/// Bounds on the expected number of tickets bought before going broke.
pub fn expected_stopping_time_bounds(s: &BankrollScenario) -> Result<StoppingTimeBounds> {
    s.validate()?;
    let drift = s.ticket.expected_value().abs();
    let upper = s.bankroll / drift;
    Ok(StoppingTimeBounds {
        lower: (s.bankroll - s.ticket.cost) / drift,
        upper,
        exact: s.is_lattice().then_some(upper),
    })
}

/// Expected number of prizes collected, `p S_0 / (c - p j)`.
pub fn expected_prize_count(s: &BankrollScenario) -> Result<f64> {
    s.validate()?;
    let t = &s.ticket;
    Ok(t.win_prob * s.bankroll / (t.cost - t.win_prob * t.prize))
}
