//! Randomized verification of the event-algebra laws and the BKR-type
//! inequalities on small enumerable spaces.
//!
//! Each suite draws its instances from a seeded ChaCha stream, so a given
//! `(seed, instances)` pair always checks exactly the same cases.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    bkr_box, closure, event_prob, left_nested_box, non_associativity_fixture, win_events_from_bets,
    BetMatrix, Coords, Event, FiniteEventSpace,
};
use crate::betamath::{tail_prob, TailQuery};
use crate::error::Result;
use crate::oracles::Seed;

/// Slack allowed on probability inequalities (pure rounding).
pub const PROB_SLACK: f64 = 1e-12;
/// Agreement required between `P(W_i)` and the binomial tail.
pub const TAIL_AGREEMENT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub seed: u64,
    pub instances: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Instance = fn(&mut ChaCha8Rng) -> Result<Option<String>>;

const SUITES: [(&str, Instance); 7] = [
    ("closure-composition", closure_composition),
    ("closure-monotone", closure_monotone),
    ("closure-cap-cup", closure_cap_cup),
    ("box-in-left-nested", box_in_left_nested),
    ("joint-win-in-box", joint_win_in_box),
    ("box-product-bound", box_product_bound),
    ("no-dependent-wins-bound", no_dependent_wins_bound),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(n, _)| *n).collect()
}

/// Run one named suite. Errors from the event algebra count as failures.
pub fn run_suite(name: &str, seed: Seed, instances: usize) -> Option<CheckReport> {
    let (index, (name, check)) = SUITES.iter().enumerate().find(|(_, (n, _))| *n == name)?;
    let mut rng = seed.derive(index as u64).rng();
    let mut failures = 0;
    let mut first_failure = None;
    for k in 0..instances {
        let outcome = match check(&mut rng) {
            Ok(None) => continue,
            Ok(Some(msg)) => msg,
            Err(e) => format!("error: {e}"),
        };
        failures += 1;
        first_failure.get_or_insert_with(|| format!("instance {k}: {outcome}"));
    }
    Some(CheckReport {
        name,
        seed: seed.0,
        instances,
        failures,
        first_failure,
    })
}

pub fn run_all(seed: Seed, instances: usize) -> Vec<CheckReport> {
    SUITES
        .iter()
        .map(|(name, _)| run_suite(name, seed, instances).expect("known suite"))
        .collect()
}

/// The fixed three-event fixture: returns (label, expected, got) lines.
pub fn fixture_report() -> Result<Vec<(&'static str, String, String, bool)>> {
    let (space, a, b, c) = non_associativity_fixture();
    let single = space.event_where(|o| o == [0, 0, 1]);
    let ab = bkr_box(&space, &[a.clone(), b.clone()])?;
    let ab_c = bkr_box(&space, &[ab.clone(), c.clone()])?;
    let bc = bkr_box(&space, &[b.clone(), c.clone()])?;
    let a_bc = bkr_box(&space, &[a.clone(), bc])?;
    let abc = bkr_box(&space, &[a, b, c])?;
    let rows = [
        ("A<>B", space.event_where(|o| o[0] == 0), ab),
        ("(A<>B)<>C", single.clone(), ab_c),
        ("A<>(B<>C)", space.empty(), a_bc),
        ("A<>B<>C", space.empty(), abc),
    ];
    Ok(rows
        .into_iter()
        .map(|(label, want, got)| {
            (
                label,
                space.describe(&want),
                space.describe(&got),
                want == got,
            )
        })
        .collect())
}

fn random_dist(rng: &mut ChaCha8Rng, size: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut dist: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // push the rounding residue into the last entry so the sum is exact enough
    let head: f64 = dist[..size - 1].iter().sum();
    dist[size - 1] = 1.0 - head;
    dist
}

fn random_space(
    rng: &mut ChaCha8Rng,
    max_alphabet: usize,
    max_dims: usize,
) -> Result<FiniteEventSpace> {
    let s = rng.random_range(1..=max_alphabet);
    let d = rng.random_range(1..=max_dims);
    let dists = (0..d).map(|_| random_dist(rng, s)).collect();
    FiniteEventSpace::new(s, d, dists)
}

fn random_coords(rng: &mut ChaCha8Rng, dims: usize) -> Coords {
    Coords(rng.random_range(0..=Coords::all(dims).0))
}

/// Either an arbitrary subset or a union of random cylinders; the latter
/// have non-trivial closures far more often.
fn random_event(rng: &mut ChaCha8Rng, space: &FiniteEventSpace) -> Event {
    if rng.random_bool(0.3) {
        let density = rng.random_range(0.1..0.9);
        return space.event_where(|_| rng.random_bool(density));
    }
    let pieces = rng.random_range(1..=3);
    let cyls: Vec<(Coords, Vec<usize>)> = (0..pieces)
        .map(|_| {
            let j = random_coords(rng, space.dims());
            let omega = (0..space.dims())
                .map(|_| rng.random_range(0..space.alphabet_size()))
                .collect();
            (j, omega)
        })
        .collect();
    space.event_where(|o| {
        cyls.iter()
            .any(|(j, omega)| (0..o.len()).all(|k| !j.contains(k) || o[k] == omega[k]))
    })
}

fn closure_composition(rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let space = random_space(rng, 3, 4)?;
    let a = random_event(rng, &space);
    let j = random_coords(rng, space.dims());
    let k = random_coords(rng, space.dims());
    let nested = closure(&space, &closure(&space, &a, j)?, k)?;
    let direct = closure(&space, &a, j.intersect(k))?;
    Ok((nested != direct).then(|| format!("[[A]_J]_K != [A]_(J∩K) for J={:#b} K={:#b}", j.0, k.0)))
}

fn closure_monotone(rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let space = random_space(rng, 3, 4)?;
    let a = random_event(rng, &space);
    let b = a.union(&random_event(rng, &space));
    let j = random_coords(rng, space.dims());
    let k = Coords(j.0 | random_coords(rng, space.dims()).0);
    if !closure(&space, &a, j)?.is_subset(&closure(&space, &b, j)?) {
        return Ok(Some("A ⊆ B but [A]_J ⊄ [B]_J".into()));
    }
    if !closure(&space, &a, j)?.is_subset(&closure(&space, &a, k)?) {
        return Ok(Some("J ⊆ K but [A]_J ⊄ [A]_K".into()));
    }
    Ok(None)
}

fn closure_cap_cup(rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let space = random_space(rng, 3, 4)?;
    let r = rng.random_range(2..=3);
    let events: Vec<Event> = (0..r).map(|_| random_event(rng, &space)).collect();
    let j = random_coords(rng, space.dims());
    let closures = events
        .iter()
        .map(|e| closure(&space, e, j))
        .collect::<Result<Vec<_>>>()?;

    let cap = events
        .iter()
        .skip(1)
        .fold(events[0].clone(), |acc, e| acc.intersection(e));
    let cap_of_closures = closures
        .iter()
        .skip(1)
        .fold(closures[0].clone(), |acc, e| acc.intersection(e));
    if closure(&space, &cap, j)? != cap_of_closures {
        return Ok(Some("[∩B_i]_J != ∩[B_i]_J".into()));
    }
    let cup = events
        .iter()
        .skip(1)
        .fold(events[0].clone(), |acc, e| acc.union(e));
    let cup_of_closures = closures
        .iter()
        .skip(1)
        .fold(closures[0].clone(), |acc, e| acc.union(e));
    if !cup_of_closures.is_subset(&closure(&space, &cup, j)?) {
        return Ok(Some("∪[B_i]_J ⊄ [∪B_i]_J".into()));
    }
    Ok(None)
}

fn box_in_left_nested(rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let space = random_space(rng, 3, 4)?;
    let b = rng.random_range(2..=3);
    let events: Vec<Event> = (0..b).map(|_| random_event(rng, &space)).collect();
    let boxed = bkr_box(&space, &events)?;
    let nested = left_nested_box(&space, &events)?;
    Ok((!boxed.is_subset(&nested)).then(|| {
        format!(
            "box {} not inside left-nested box {}",
            space.describe(&boxed),
            space.describe(&nested)
        )
    }))
}

/// Bets on `d` draws; draw symbol `s` has bit `i` set when bet `i` wins.
struct BettingInstance {
    space: FiniteEventSpace,
    bets: BetMatrix,
    win_sets: Vec<Vec<usize>>,
    wins: Vec<u64>,
}

fn random_betting(rng: &mut ChaCha8Rng) -> Result<BettingInstance> {
    let b = rng.random_range(2..=3);
    let d = rng.random_range(1..=4);
    let symbols = 1usize << b;
    let dist = random_dist(rng, symbols);
    let space = FiniteEventSpace::iid(dist, d)?;
    let rows: Vec<Vec<bool>> = (0..b)
        .map(|_| (0..d).map(|_| rng.random_bool(0.7)).collect())
        .collect();
    let bets = BetMatrix::new(rows)?;
    let win_sets = (0..b)
        .map(|i| (0..symbols).filter(|s| s >> i & 1 == 1).collect())
        .collect();
    let wins = bets
        .row_sums()
        .iter()
        .map(|&n| rng.random_range(0..=n))
        .collect();
    Ok(BettingInstance {
        space,
        bets,
        win_sets,
        wins,
    })
}

fn joint_win_in_box(rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let inst = random_betting(rng)?;
    let ev = win_events_from_bets(&inst.space, &inst.bets, &inst.win_sets, &inst.wins)?;
    let boxed = bkr_box(&inst.space, &ev.wins)?;
    Ok((!ev.joint().is_subset(&boxed)).then(|| "I ∩ W_1 ∩ … ∩ W_b ⊄ W_1 ⋄ … ⋄ W_b".to_string()))
}

fn box_product_bound(rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let space = random_space(rng, 4, 4)?;
    let b = rng.random_range(2..=3);
    let events: Vec<Event> = (0..b).map(|_| random_event(rng, &space)).collect();
    let boxed = event_prob(&space, &bkr_box(&space, &events)?)?;
    let product: f64 = events
        .iter()
        .map(|e| event_prob(&space, e))
        .product::<Result<f64>>()?;
    Ok((boxed > product + PROB_SLACK).then(|| format!("P(box) = {boxed} > Π P(A_i) = {product}")))
}

fn no_dependent_wins_bound(rng: &mut ChaCha8Rng) -> Result<Option<String>> {
    let inst = random_betting(rng)?;
    let ev = win_events_from_bets(&inst.space, &inst.bets, &inst.win_sets, &inst.wins)?;
    let dist = &inst.space.coord_dists()[0];
    let row_sums = inst.bets.row_sums();
    let mut product = 1.0;
    for (i, w_event) in ev.wins.iter().enumerate() {
        let p_w = event_prob(&inst.space, w_event)?;
        let p_i: f64 = inst.win_sets[i].iter().map(|&s| dist[s]).sum();
        let d = tail_prob(&TailQuery::new(row_sums[i] as f64, inst.wins[i], p_i)?)?;
        if (p_w - d).abs() > TAIL_AGREEMENT {
            return Ok(Some(format!(
                "P(W_{i}) = {p_w} but D({}; {}, {p_i}) = {d}",
                row_sums[i], inst.wins[i]
            )));
        }
        product *= p_w;
    }
    let joint = event_prob(&inst.space, &ev.joint())?;
    Ok(
        (joint > product + PROB_SLACK)
            .then(|| format!("P(I ∩ W) = {joint} > Π P(W_i) = {product}")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_a_short_run() {
        for report in run_all(Seed(1), 60) {
            assert!(report.passed(), "{report:?}");
            assert_eq!(report.instances, 60);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        assert_eq!(run_all(Seed(9), 20), run_all(Seed(9), 20));
    }

    #[test]
    fn fixture_reproduces() {
        for (label, want, got, ok) in fixture_report().unwrap() {
            assert!(ok, "{label}: want {want}, got {got}");
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", Seed(0), 1).is_none());
        assert_eq!(suite_names().len(), 7);
    }
}
