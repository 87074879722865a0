use proptest::prelude::*;

use luckscreen::screening::{
    build_profiles, load_catalog, load_claims, min_spend_for_profile, screen, Catalog, ClaimRecord,
    GamblerProfile, ScreeningConfig, Verdict, FIXTURE_CLAIMS_CSV, PLAY4_CATALOG_CSV,
};

fn claim(g: usize, day: u32, bet: &str, units: u32) -> ClaimRecord {
    ClaimRecord {
        gambler_id: format!("g{g}"),
        claim_date: format!("2012-{:02}-{:02}", 1 + day / 28, 1 + day % 28),
        bet_id: bet.into(),
        prize_amount: 5000.0,
        draw_id: Some(format!("D{day}")),
        units,
    }
}

/// Dependent-win-free claim sets: one winning bet per draw.
fn arb_claims() -> impl Strategy<Value = Vec<ClaimRecord>> {
    let bets = ["play4-straight", "play4-box4", "play4-box6", "play4-box12"];
    prop::collection::vec(
        (
            0..3usize,
            0..4usize,
            prop::sample::select(vec![1u32, 2, 5, 50]),
        ),
        1..25,
    )
    .prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(day, (g, b, units))| claim(g, day as u32, bets[b], units))
            .collect()
    })
}

fn without_class(p: &GamblerProfile, k: usize) -> GamblerProfile {
    let mut q = p.clone();
    q.unit_classes.remove(k);
    q
}

#[test]
fn bundled_files_parse() {
    assert_eq!(load_catalog(PLAY4_CATALOG_CSV.as_bytes()).unwrap().len(), 5);
    let claims = load_claims(FIXTURE_CLAIMS_CSV.as_bytes(), 600.0).unwrap();
    let profiles = build_profiles(&claims, &Catalog::play4()).unwrap();
    assert_eq!(profiles.len(), 2);
    let total: u64 = profiles.iter().map(|p| p.claims).sum();
    assert_eq!(
        total,
        claims.iter().map(|c| u64::from(c.units)).sum::<u64>()
    );
}

#[test]
fn fixture_h_take_home_budget_check() {
    let claims = load_claims(FIXTURE_CLAIMS_CSV.as_bytes(), 600.0).unwrap();
    let report = screen(&claims, &Catalog::play4(), &ScreeningConfig::default()).unwrap();
    let h = report
        .gamblers
        .iter()
        .find(|g| g.gambler_id == "h-hollywood")
        .unwrap();
    let check = h.budget_check.as_ref().unwrap();
    assert!((check.budget - 0.65 * 2_760_000.0).abs() < 1e-6);
    assert!(
        check.probability > 0.01 && check.probability < 0.02,
        "{}",
        check.probability
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dropping_a_bet_type_never_raises_spend(claims in arb_claims()) {
        let cfg = ScreeningConfig::default();
        for p in build_profiles(&claims, &Catalog::play4()).unwrap() {
            let full = min_spend_for_profile(&p, &cfg).unwrap().spend;
            for k in 0..p.unit_classes.len() {
                let sub = min_spend_for_profile(&without_class(&p, k), &cfg).unwrap().spend;
                prop_assert!(sub <= full * (1.0 + 1e-9) + 1e-9, "{sub} > {full}");
            }
        }
    }

    /// Raising eps raises the minimum spend, so while `N eps` stays under the
    /// plausibility line a tighter (smaller) eps can only clear flags.
    #[test]
    fn tighter_eps_never_adds_flags(claims in arb_claims(), a in -16.0..-13.3f64, b in -16.0..-13.3f64) {
        let (tight, loose) = (10f64.powf(a.min(b)), 10f64.powf(a.max(b)));
        let cfg = |eps| ScreeningConfig { eps, flag_spend_threshold: 2_000.0, ..ScreeningConfig::default() };
        prop_assert!(cfg(loose).population * loose < 1e-6);
        let rt = screen(&claims, &Catalog::play4(), &cfg(tight)).unwrap();
        let rl = screen(&claims, &Catalog::play4(), &cfg(loose)).unwrap();
        for g in &rt.gamblers {
            let after = rl.gamblers.iter().find(|x| x.gambler_id == g.gambler_id).unwrap();
            if g.verdict == Verdict::Implausible {
                prop_assert_eq!(after.verdict, Verdict::Implausible);
            }
        }
    }

    #[test]
    fn screening_is_deterministic(claims in arb_claims()) {
        let cfg = ScreeningConfig::default();
        let a = screen(&claims, &Catalog::play4(), &cfg).unwrap();
        let mut reversed = claims.clone();
        reversed.reverse();
        let b = screen(&reversed, &Catalog::play4(), &cfg).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        let spends: Vec<f64> = a.gamblers.iter().map(|g| g.spend_bound.as_ref().map_or(-1.0, |s| s.spend)).collect();
        prop_assert!(spends.windows(2).all(|w| w[0] >= w[1]));
    }
}
