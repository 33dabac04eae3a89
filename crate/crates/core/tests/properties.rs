use cploss::numerics::finite_diff;
use cploss::robustness::{merge_intervals, HalfOpen};
use cploss::*;
use proptest::prelude::*;

const WEIGHTS: &[&str] = &["square", "log", "boosting", "minimal", "w1-over-c", "w1-over-1mc"];
const SYMMETRIC: &[&str] = &["square", "log", "boosting", "minimal"];
const LINKS: &[&str] = &["identity", "logit", "cll", "square-link", "cosine", "canonical"];

fn proper(name: &str) -> ProperLoss64 {
    from_weight(&parse_weight_name(name).unwrap()).unwrap()
}

fn composite(weight: &str, link: &str) -> CompositeLoss64 {
    let wf = parse_weight_name(weight).unwrap();
    make_composite(&from_weight(&wf).unwrap(), &resolve_link(link, Some(&wf)).unwrap()).unwrap()
}

fn prob() -> impl Strategy<Value = f64> {
    0.01f64..0.99
}

proptest! {
    #[test]
    fn conditional_risk_is_minimized_by_truth(i in 0..WEIGHTS.len(), eta in prob(), etahat in prob()) {
        let l = proper(WEIGHTS[i]);
        let bayes = l.bayes_risk(eta).unwrap();
        let risk = l.conditional_risk(eta, etahat).unwrap();
        prop_assert!(risk >= bayes - 1e-10 * (1.0 + bayes.abs()), "{} {eta} {etahat}", WEIGHTS[i]);
        prop_assert!(l.regret(eta, etahat).unwrap() >= -1e-10);
    }

    #[test]
    fn bayes_risk_is_concave(i in 0..WEIGHTS.len(), a in prob(), b in prob()) {
        let l = proper(WEIGHTS[i]);
        let mid = l.bayes_risk(0.5 * (a + b)).unwrap();
        let chord = 0.5 * (l.bayes_risk(a).unwrap() + l.bayes_risk(b).unwrap());
        prop_assert!(mid >= chord - 1e-10 * (1.0 + chord.abs()));
    }

    #[test]
    fn composite_regret_is_nonnegative(i in 0..WEIGHTS.len(), j in 0..LINKS.len(), eta in prob(), x in prob()) {
        let cl = composite(WEIGHTS[i], LINKS[j]);
        let v = cl.link().psi(x);
        prop_assert!(cl.regret(eta, v).unwrap() >= -1e-9, "{}", cl.name());
    }

    #[test]
    fn symmetric_weights_give_mirrored_partials(i in 0..SYMMETRIC.len(), e in prob()) {
        let l = proper(SYMMETRIC[i]);
        let (a, b) = (l.ell_pos(e), l.ell_neg(1.0 - e));
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn weight_round_trip(i in 0..WEIGHTS.len(), k in 10usize..190) {
        // the recovered weight is tabulated at multiples of 1/200
        let c = k as f64 / 200.0;
        let wf = parse_weight_name::<f64>(WEIGHTS[i]).unwrap();
        let back = weight_from_loss(&from_weight(&wf).unwrap()).unwrap();
        let (a, b) = (wf.w(c), back.w(c));
        prop_assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0), "{} at {c}: {a} vs {b}", WEIGHTS[i]);
    }

    #[test]
    fn links_invert(j in 0..LINKS.len() - 1, x in prob()) {
        let l = catalog_link::<f64>(LINKS[j]).unwrap();
        prop_assert!((l.q(l.psi(x)) - x).abs() < 1e-9);
        prop_assert!(l.psi_prime(x) > 0.0);
    }

    #[test]
    fn gradients_match_finite_differences(i in 0..WEIGHTS.len(), x in 0.05f64..0.95) {
        let cl = composite(WEIGHTS[i], "logit");
        let v = cl.link().psi(x);
        let (dp, dn) = cl.score_gradients(v).unwrap();
        let fp = finite_diff(|s: f64| cl.eval(Label::Pos, s).unwrap(), v, 1, 1e-5).unwrap();
        let fn_ = finite_diff(|s: f64| cl.eval(Label::Neg, s).unwrap(), v, 1, 1e-5).unwrap();
        prop_assert!((dp - fp).abs() <= 1e-5 * dp.abs().max(1.0));
        prop_assert!((dn - fn_).abs() <= 1e-5 * dn.abs().max(1.0));
        prop_assert!(dn - dp >= 0.0);
    }

    #[test]
    fn corruption_is_an_affine_contraction(eta in 0.0f64..=1.0, a in 0.0f64..0.49) {
        let n = NoiseLevel::new(a).unwrap();
        let c = corrupt(eta, n);
        prop_assert!((c - 0.5).abs() <= (eta - 0.5).abs() + 1e-15);
        prop_assert!((c - (a + (1.0 - 2.0 * a) * eta)).abs() < 1e-15);
    }

    #[test]
    fn noisy_risk_identity(i in 0..WEIGHTS.len(), eta in 0.0f64..=1.0, x in prob(), a in 0.0f64..0.49) {
        let cl = composite(WEIGHTS[i], "logit");
        let n = NoiseLevel::new(a).unwrap();
        let v = cl.link().psi(x);
        let lhs = Loss::conditional_risk(&cl, corrupt(eta, n), v);
        let rhs = Loss::conditional_risk(&noisy_loss(&cl, n), eta, v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn cost_intervals_stay_on_one_side(c in 0.01f64..0.99, a in 0.0f64..0.49) {
        let r = cost_robust_interval(c, NoiseLevel::new(a).unwrap()).unwrap();
        if !r.interval.is_empty() {
            prop_assert!(r.interval.lo >= 0.0 && r.interval.hi <= 1.0);
            prop_assert!(r.interval.hi <= c || r.interval.lo >= c);
        }
    }

    #[test]
    fn merged_intervals_are_disjoint(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..0.3), 0..12)) {
        let pieces: Vec<HalfOpen<f64>> = raw.iter().map(|&(lo, len)| HalfOpen { lo, hi: lo + len }).collect();
        let merged = merge_intervals(pieces.clone(), 0.0);
        for w in merged.windows(2) {
            prop_assert!(w[0].hi < w[1].lo);
        }
        for p in pieces.iter().filter(|p| !p.is_empty()) {
            let mid = 0.5 * (p.lo + p.hi);
            prop_assert!(merged.iter().any(|m| m.lo <= mid && mid < m.hi));
        }
    }

    #[test]
    fn regret_bound_inverts(a in 0.0f64..0.5) {
        let x = regret_bound_rhs(a).unwrap();
        prop_assert!((regret_bound_invert(x).unwrap() - a).abs() < 1e-8);
    }

    #[test]
    fn single_precision_agrees(i in 0..SYMMETRIC.len(), e in 0.05f32..0.95) {
        let wf = parse_weight_name::<f32>(SYMMETRIC[i]).unwrap();
        let l32 = from_weight(&wf).unwrap();
        let l64 = proper(SYMMETRIC[i]);
        let (a, b) = (l32.ell_neg(e) as f64, l64.ell_neg(e as f64));
        prop_assert!((a - b).abs() <= 1e-4 * (1.0 + b.abs()), "{}: {a} vs {b}", SYMMETRIC[i]);
    }
}
