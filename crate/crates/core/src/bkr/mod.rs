//! Events on a finite product space `S^d` and the BKR "disjoint
//! certificates" operation.
//!
//! Outcomes are enumerated in mixed radix (coordinate 0 least significant)
//! and events are bitsets over that enumeration. Everything here is exact;
//! the enumeration guard keeps it bounded.
//!
//! The closure `[A]_J` keeps the outcomes of `A` whose whole `J`-cylinder
//! lies in `A`, i.e. whose membership in `A` can be read off coordinates
//! `J` alone. `A_1 ⋄ … ⋄ A_b` is the union, over pairwise disjoint
//! `J_1, …, J_b`, of `[A_1]_{J_1} ∩ … ∩ [A_b]_{J_b}`.

pub mod check;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `|S|^d` that will be enumerated.
pub const ENUMERATION_LIMIT: usize = 10_000_000;
/// Largest number of coordinate-to-event assignments [`bkr_box`] will scan.
pub const ASSIGNMENT_LIMIT: usize = 1 << 20;
pub const MAX_DIMS: usize = 32;

/// A set of coordinate indices, as a bitmask (bit `j` is coordinate `j`).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct Coords(pub u32);

impl Coords {
    pub const EMPTY: Coords = Coords(0);

    pub fn all(dims: usize) -> Coords {
        if dims >= 32 {
            Coords(u32::MAX)
        } else {
            Coords((1u32 << dims) - 1)
        }
    }

    pub fn from_indices(indices: &[usize]) -> Coords {
        Coords(indices.iter().fold(0, |m, &j| m | (1 << j)))
    }

    pub fn contains(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    pub fn intersect(self, other: Coords) -> Coords {
        Coords(self.0 & other.0)
    }

    pub fn is_subset(self, other: Coords) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// `S^d` with a product probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteEventSpace {
    alphabet_size: usize,
    dims: usize,
    coord_dists: Vec<Vec<f64>>,
    size: usize,
    strides: Vec<usize>,
}

impl FiniteEventSpace {
    pub fn new(alphabet_size: usize, dims: usize, coord_dists: Vec<Vec<f64>>) -> Result<Self> {
        if alphabet_size == 0 || dims == 0 {
            return Err(Error::Shape(
                "alphabet and dimension must be at least 1".into(),
            ));
        }
        if dims > MAX_DIMS {
            return Err(Error::Guard(format!(
                "at most {MAX_DIMS} coordinates, got {dims}"
            )));
        }
        let size = u32::try_from(dims)
            .ok()
            .and_then(|d| alphabet_size.checked_pow(d))
            .filter(|&n| n <= ENUMERATION_LIMIT)
            .ok_or_else(|| {
                Error::Guard(format!(
                    "|S|^d = {alphabet_size}^{dims} exceeds {ENUMERATION_LIMIT} outcomes"
                ))
            })?;
        if coord_dists.len() != dims {
            return Err(Error::Shape(format!(
                "{} coordinate distributions for {dims} coordinates",
                coord_dists.len()
            )));
        }
        for (j, dist) in coord_dists.iter().enumerate() {
            if dist.len() != alphabet_size {
                return Err(Error::Shape(format!(
                    "coordinate {j} distribution has {} entries, alphabet has {alphabet_size}",
                    dist.len()
                )));
            }
            if dist.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
                return Err(Error::InvalidField {
                    field: "coord_dists",
                    reason: format!("coordinate {j} has a negative or non-finite probability"),
                });
            }
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidField {
                    field: "coord_dists",
                    reason: format!("coordinate {j} sums to {total}"),
                });
            }
        }
        let strides = (0..dims).map(|j| alphabet_size.pow(j as u32)).collect();
        Ok(Self {
            alphabet_size,
            dims,
            coord_dists,
            size,
            strides,
        })
    }

    pub fn uniform(alphabet_size: usize, dims: usize) -> Result<Self> {
        let q = 1.0 / alphabet_size.max(1) as f64;
        Self::new(alphabet_size, dims, vec![vec![q; alphabet_size]; dims])
    }

    /// Same distribution on every coordinate.
    pub fn iid(dist: Vec<f64>, dims: usize) -> Result<Self> {
        Self::new(dist.len(), dims, vec![dist; dims])
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn coord_dists(&self) -> &[Vec<f64>] {
        &self.coord_dists
    }

    /// Number of outcomes, `|S|^d`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn digit(&self, index: usize, j: usize) -> usize {
        index / self.strides[j] % self.alphabet_size
    }

    pub fn outcome(&self, index: usize) -> Vec<usize> {
        (0..self.dims).map(|j| self.digit(index, j)).collect()
    }

    pub fn index_of(&self, outcome: &[usize]) -> Result<usize> {
        if outcome.len() != self.dims {
            return Err(Error::Shape(format!(
                "outcome has {} coordinates, space has {}",
                outcome.len(),
                self.dims
            )));
        }
        outcome
            .iter()
            .zip(&self.strides)
            .try_fold(0, |acc, (&s, &stride)| {
                if s < self.alphabet_size {
                    Ok(acc + s * stride)
                } else {
                    Err(Error::Shape(format!(
                        "symbol {s} outside alphabet of size {}",
                        self.alphabet_size
                    )))
                }
            })
    }

    pub fn empty(&self) -> Event {
        Event::empty(self.size)
    }

    pub fn full(&self) -> Event {
        let mut e = Event::empty(self.size);
        for i in 0..self.size {
            e.insert(i);
        }
        e
    }

    pub fn event_where(&self, mut pred: impl FnMut(&[usize]) -> bool) -> Event {
        let mut e = self.empty();
        let mut omega = vec![0; self.dims];
        for i in 0..self.size {
            for (j, o) in omega.iter_mut().enumerate() {
                *o = self.digit(i, j);
            }
            if pred(&omega) {
                e.insert(i);
            }
        }
        e
    }

    pub fn event_from_outcomes<'a>(
        &self,
        outcomes: impl IntoIterator<Item = &'a [usize]>,
    ) -> Result<Event> {
        let mut e = self.empty();
        for o in outcomes {
            e.insert(self.index_of(o)?);
        }
        Ok(e)
    }

    fn check_event(&self, a: &Event) -> Result<()> {
        if a.universe != self.size {
            return Err(Error::Shape(format!(
                "event over {} outcomes used in a space of {}",
                a.universe, self.size
            )));
        }
        Ok(())
    }

    fn check_coords(&self, j: Coords) -> Result<()> {
        if j.is_subset(Coords::all(self.dims)) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "coordinate set {:#b} out of range for d = {}",
                j.0, self.dims
            )))
        }
    }

    /// Index with the coordinates outside `j` zeroed: equal keys means same cylinder.
    fn projection_key(&self, index: usize, j: Coords) -> usize {
        (0..self.dims)
            .filter(|&k| !j.contains(k))
            .fold(index, |acc, k| acc - self.digit(index, k) * self.strides[k])
    }

    /// Render an event as a list of outcome tuples.
    pub fn describe(&self, a: &Event) -> String {
        let parts: Vec<String> = a
            .iter()
            .map(|i| {
                let o: Vec<String> = self.outcome(i).iter().map(usize::to_string).collect();
                format!("({})", o.join(","))
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// A subset of an enumerated `S^d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Event {
    words: Vec<u64>,
    universe: usize,
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Event {
    fn empty(universe: usize) -> Self {
        Self {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(
            i < self.universe,
            "outcome {i} outside universe {}",
            self.universe
        );
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |&i| self.contains(i))
    }

    pub fn union(&self, other: &Event) -> Event {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Event) -> Event {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.universe == other.universe
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    fn zip_with(&self, other: &Event, op: impl Fn(u64, u64) -> u64) -> Event {
        assert_eq!(
            self.universe, other.universe,
            "events from different spaces"
        );
        Event {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            universe: self.universe,
        }
    }
}

/// `Cyl(J, ω)`: all outcomes agreeing with `ω` on the coordinates in `J`.
pub fn cylinder(space: &FiniteEventSpace, j: Coords, omega: &[usize]) -> Result<Event> {
    space.check_coords(j)?;
    let base = space.index_of(omega)?;
    let key = space.projection_key(base, j);
    let mut e = space.empty();
    for i in 0..space.size {
        if space.projection_key(i, j) == key {
            e.insert(i);
        }
    }
    Ok(e)
}

/// `[A]_J`: outcomes of `A` certified by their `J` coordinates alone.
pub fn closure(space: &FiniteEventSpace, a: &Event, j: Coords) -> Result<Event> {
    space.check_event(a)?;
    space.check_coords(j)?;
    let cylinder_size = space.alphabet_size.pow((space.dims - j.len()) as u32);
    let mut inside = vec![0usize; space.size];
    for i in a.iter() {
        inside[space.projection_key(i, j)] += 1;
    }
    let mut out = space.empty();
    for i in a.iter() {
        if inside[space.projection_key(i, j)] == cylinder_size {
            out.insert(i);
        }
    }
    Ok(out)
}

/// `A_1 ⋄ A_2 ⋄ … ⋄ A_b`: all events occur, each certified by its own
/// disjoint set of coordinates.
///
/// Enlarging a certificate never hurts (`J ⊆ K ⇒ [A]_J ⊆ [A]_K`), so it is
/// enough to scan assignments of every coordinate to exactly one event.
pub fn bkr_box(space: &FiniteEventSpace, events: &[Event]) -> Result<Event> {
    if events.len() < 2 {
        return Err(Error::Shape(format!(
            "box needs at least two events, got {}",
            events.len()
        )));
    }
    for e in events {
        space.check_event(e)?;
    }
    let b = events.len();
    let d = space.dims;
    let assignments = u32::try_from(d)
        .ok()
        .and_then(|d| b.checked_pow(d))
        .filter(|&n| n <= ASSIGNMENT_LIMIT)
        .ok_or_else(|| {
            Error::Guard(format!(
                "{b}^{d} coordinate assignments exceed {ASSIGNMENT_LIMIT}"
            ))
        })?;

    let mut cache: HashMap<(usize, Coords), Event> = HashMap::new();
    let mut result = space.empty();
    let mut owner = vec![0usize; d];
    for code in 0..assignments {
        let mut c = code;
        for o in owner.iter_mut() {
            *o = c % b;
            c /= b;
        }
        let mut acc: Option<Event> = None;
        for (i, event) in events.iter().enumerate() {
            let j = Coords(
                owner
                    .iter()
                    .enumerate()
                    .filter(|(_, &o)| o == i)
                    .fold(0, |m, (k, _)| m | 1 << k),
            );
            let certified = match cache.entry((i, j)) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert(closure(space, event, j)?),
            };
            let next = match acc {
                None => certified.clone(),
                Some(prev) => prev.intersection(certified),
            };
            let done = next.is_empty();
            acc = Some(next);
            if done {
                break;
            }
        }
        if let Some(acc) = acc {
            result = result.union(&acc);
        }
    }
    Ok(result)
}

/// `(((A_1 ⋄ A_2) ⋄ A_3) ⋯ ⋄ A_b)`.
pub fn left_nested_box(space: &FiniteEventSpace, events: &[Event]) -> Result<Event> {
    if events.len() < 2 {
        return Err(Error::Shape(format!(
            "box needs at least two events, got {}",
            events.len()
        )));
    }
    let mut acc = events[0].clone();
    for e in &events[1..] {
        acc = bkr_box(space, &[acc, e.clone()])?;
    }
    Ok(acc)
}

/// Probability of `A` under the product measure.
pub fn event_prob(space: &FiniteEventSpace, a: &Event) -> Result<f64> {
    space.check_event(a)?;
    Ok(a.iter()
        .map(|i| {
            (0..space.dims)
                .map(|j| space.coord_dists[j][space.digit(i, j)])
                .product::<f64>()
        })
        .sum())
}

/// Zero-one incidence of `b` bets on `d` draws.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetMatrix {
    rows: Vec<Vec<bool>>,
}

impl BetMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || d == 0 {
            return Err(Error::Shape(
                "bet matrix needs at least one bet and one draw".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("bet matrix rows differ in length".into()));
        }
        Ok(Self { rows })
    }

    pub fn bets(&self) -> usize {
        self.rows.len()
    }

    pub fn draws(&self) -> usize {
        self.rows[0].len()
    }

    pub fn wagered(&self, bet: usize, draw: usize) -> bool {
        self.rows[bet][draw]
    }

    /// `n_i`: number of draws bet `i` was placed on.
    pub fn row_sums(&self) -> Vec<u64> {
        self.rows
            .iter()
            .map(|r| r.iter().filter(|&&x| x).count() as u64)
            .collect()
    }
}

/// `W_i` (bet `i` won at least `w_i` times) and `I` (no draw won more than one bet).
#[derive(Debug, Clone, PartialEq)]
pub struct WinEvents {
    pub wins: Vec<Event>,
    pub at_most_one: Event,
}

impl WinEvents {
    /// `I ∩ W_1 ∩ … ∩ W_b`.
    pub fn joint(&self) -> Event {
        self.wins
            .iter()
            .fold(self.at_most_one.clone(), |acc, w| acc.intersection(w))
    }
}

/// Materialize the win events of a betting pattern. `win_sets[i]` lists the
/// draw symbols on which bet `i` wins.
pub fn win_events_from_bets(
    space: &FiniteEventSpace,
    bets: &BetMatrix,
    win_sets: &[Vec<usize>],
    w: &[u64],
) -> Result<WinEvents> {
    let b = bets.bets();
    if bets.draws() != space.dims {
        return Err(Error::Shape(format!(
            "bet matrix covers {} draws, space has {} coordinates",
            bets.draws(),
            space.dims
        )));
    }
    if win_sets.len() != b || w.len() != b {
        return Err(Error::Shape(format!(
            "{b} bets but {} win sets and {} win counts",
            win_sets.len(),
            w.len()
        )));
    }
    let mut wins_on: Vec<Vec<bool>> = vec![vec![false; space.alphabet_size]; b];
    for (i, set) in win_sets.iter().enumerate() {
        for &s in set {
            if s >= space.alphabet_size {
                return Err(Error::Shape(format!("win symbol {s} outside alphabet")));
            }
            wins_on[i][s] = true;
        }
    }

    let mut wins = vec![space.empty(); b];
    let mut at_most_one = space.empty();
    let mut count = vec![0u64; b];
    for idx in 0..space.size {
        count.iter_mut().for_each(|c| *c = 0);
        let mut single = true;
        for j in 0..space.dims {
            let s = space.digit(idx, j);
            let mut here = 0;
            for i in 0..b {
                if bets.wagered(i, j) && wins_on[i][s] {
                    count[i] += 1;
                    here += 1;
                }
            }
            single &= here <= 1;
        }
        for i in 0..b {
            if count[i] >= w[i] {
                wins[i].insert(idx);
            }
        }
        if single {
            at_most_one.insert(idx);
        }
    }
    Ok(WinEvents { wins, at_most_one })
}

/// Three events on `{0,1}^3` whose boxes show `⋄` is not associative:
/// `A = (0,*,*) ∪ (1,0,*)`, `B = (0,*,*) ∪ (1,1,*)`, `C = (*,0,1)`.
pub fn non_associativity_fixture() -> (FiniteEventSpace, Event, Event, Event) {
    let space = FiniteEventSpace::uniform(2, 3).expect("2^3 space");
    let a = space.event_where(|o| o[0] == 0 || o[1] == 0);
    let b = space.event_where(|o| o[0] == 0 || o[1] == 1);
    let c = space.event_where(|o| o[1] == 0 && o[2] == 1);
    (space, a, b, c)
}
