//! Binomial tail `D(n; w, p)` extended to real ticket counts.
//!
//! The probability of at least `w` wins in `n` independent tickets, each
//! winning with probability `p`, equals the regularized incomplete Beta
//! function `I_p(w, n - w + 1)`. That form makes sense for any real
//! `n >= w`, which is what turns the minimum-spend search into a continuous
//! (and convex) problem.
//!
//! Everything the solver touches is computed in log space: the tails it
//! explores go far below the smallest positive `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::ln_beta;

/// Iteration cap for the continued fraction.
pub const CF_MAX_ITER: usize = 500;
const CF_FLOOR: f64 = 1e-30;
const CF_EPS: f64 = 1e-15;

/// One `(n, w, p)` evaluation point of the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub n: f64,
    pub w: u64,
    pub p: f64,
}

impl TailQuery {
    pub fn new(n: f64, w: u64, p: f64) -> Result<Self> {
        let q = Self { n, w, p };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        check_prob(self.p)?;
        if !self.n.is_finite() || self.n < 0.0 {
            return Err(domain(format!(
                "ticket count must be finite and >= 0, got {}",
                self.n
            )));
        }
        if self.w >= 1 && self.n < self.w as f64 {
            return Err(domain(format!(
                "ticket count {} is below the win count {}",
                self.n, self.w
            )));
        }
        Ok(())
    }
}

fn check_prob(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "win probability must lie strictly in (0, 1), got {p}"
        )))
    }
}

/// Modified Lentz evaluation of the continued fraction for `I_x(a, b)`.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let floor = |v: f64| if v.abs() < CF_FLOOR { CF_FLOOR } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / floor(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / floor(1.0 + aa * d);
        c = floor(1.0 + aa / c);
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / floor(1.0 + aa * d);
        c = floor(1.0 + aa / c);
        let del = d * c;
        h *= del;

        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        iterations: CF_MAX_ITER,
        detail: format!("incomplete beta continued fraction at x={x}, a={a}, b={b}"),
    })
}

/// `ln I_x(a, b)` for `x` in `(0, 1)`, via whichever of `I_x(a, b)` and
/// `1 - I_{1-x}(b, a)` converges faster.
fn ln_reg_beta_interior(x: f64, a: f64, b: f64) -> Result<f64> {
    if x < (a + 1.0) / (a + b + 2.0) {
        let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b) - a.ln();
        Ok(ln_front + beta_cf(a, b, x)?.ln())
    } else {
        let y = 1.0 - x;
        let ln_front = b * y.ln() + a * x.ln() - ln_beta(a, b) - b.ln();
        let ln_complement = ln_front + beta_cf(b, a, y)?.ln();
        Ok((-ln_complement.exp()).ln_1p())
    }
}

fn check_beta_args(x: f64, a: f64, b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("x must lie in [0, 1], got {x}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!("shape a must be positive, got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(domain(format!("shape b must be positive, got {b}")));
    }
    Ok(())
}

/// Natural log of the regularized incomplete Beta function.
pub fn ln_reg_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_beta_args(x, a, b)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    if b == 1.0 {
        // I_x(a, 1) = x^a
        return Ok(a * x.ln());
    }
    ln_reg_beta_interior(x, a, b)
}

/// Regularized incomplete Beta function `I_x(a, b)`.
pub fn reg_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    Ok(ln_reg_beta(x, a, b)?.exp())
}

/// `ln D(n; w, p)` without re-validating; callers guarantee `n >= w - 1`.
pub(crate) fn ln_tail(n: f64, w: u64, p: f64) -> Result<f64> {
    if w == 0 {
        return Ok(0.0);
    }
    let a = w as f64;
    let b = n - a + 1.0;
    if b == 1.0 {
        return Ok(a * p.ln());
    }
    if b <= 0.0 {
        return Err(domain(format!("ticket count {n} too small for {w} wins")));
    }
    ln_reg_beta_interior(p, a, b)
}

/// Probability of at least `w` wins with `n` tickets.
pub fn tail_prob(q: &TailQuery) -> Result<f64> {
    Ok(log_tail_prob(q)?.exp())
}

/// `ln D(n; w, p)`, finite for tails far below `f64::MIN_POSITIVE`.
pub fn log_tail_prob(q: &TailQuery) -> Result<f64> {
    q.validate()?;
    ln_tail(q.n, q.w, q.p)
}

/// Central-difference derivative of `ln D` in `n`, one Richardson step.
/// Accepts `n >= w`; the step is shrunk so both stencils stay inside the
/// domain `n > w - 1`.
pub(crate) fn dln_tail_dn(n: f64, w: u64, p: f64) -> Result<f64> {
    if w == 0 {
        return Ok(0.0);
    }
    let room = n - w as f64 + 1.0;
    let h = (1e-4 * n).max(1e-3).min(0.45 * room);
    let diff =
        |h: f64| -> Result<f64> { Ok((ln_tail(n + h, w, p)? - ln_tail(n - h, w, p)?) / (2.0 * h)) };
    let coarse = diff(h)?;
    let fine = diff(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `∂/∂n ln D(n; w, p)` for `n > w`; identically zero when `w = 0`.
pub fn dlog_tail_dn(q: &TailQuery) -> Result<f64> {
    q.validate()?;
    if q.w == 0 {
        return Ok(0.0);
    }
    if q.n <= q.w as f64 {
        return Err(domain(format!(
            "derivative needs n > w, got n={} w={}",
            q.n, q.w
        )));
    }
    dln_tail_dn(q.n, q.w, q.p)
}

/// Result of [`min_tickets`]: the continuous root and its integer round-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinTickets {
    /// Smallest real `n` with `D(n; w, p) >= eps` (to bisection precision).
    pub raw: f64,
    /// Smallest integer `n` with `D(n; w, p) >= eps`.
    pub tickets: f64,
}

/// Smallest ticket count giving at least `eps` probability of `w` wins.
pub fn min_tickets(w: u64, p: f64, eps: f64) -> Result<MinTickets> {
    check_prob(p)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if w == 0 {
        return Err(domain("min_tickets needs at least one win"));
    }
    let target = eps.ln();
    let wf = w as f64;
    if ln_tail(wf, w, p)? >= target {
        return Ok(MinTickets {
            raw: wf,
            tickets: wf,
        });
    }

    let mut lo = wf;
    let mut hi = 2.0 * wf;
    while ln_tail(hi, w, p)? < target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(domain("ticket count overflowed while bracketing"));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ln_tail(mid, w, p)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut tickets = hi.ceil().max(wf);
    // hi can land a hair above an integer root; step down if that integer already works
    if tickets - 1.0 >= wf && ln_tail(tickets - 1.0, w, p)? >= target {
        tickets -= 1.0;
    }
    while ln_tail(tickets, w, p)? < target {
        tickets += 1.0;
    }
    Ok(MinTickets { raw: hi, tickets })
}
