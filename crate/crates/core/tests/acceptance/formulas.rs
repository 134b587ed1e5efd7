use promptchain_core::economy::{
    ballot_accuracy, creator_reward_raw, curator_reward_raw, reputation, validator_reward_raw, EconomicParams, ReputationInputs,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dd::{self, Dd};
use crate::Report;

const SAMPLES: usize = 10_000;
const REL_TOL: f64 = 1e-9;

fn rel_err(got: f64, want: Dd) -> f64 {
    let want = want.to_f64();
    if want == 0.0 {
        return got.abs();
    }
    ((got - want) / want).abs()
}

fn random_params(rng: &mut impl Rng) -> EconomicParams {
    EconomicParams {
        alpha: rng.random_range(0.0025..0.04),
        beta: rng.random_range(1.0..16.0),
        gamma: rng.random_range(0.00125..0.02),
        ..EconomicParams::default()
    }
}

struct Worst {
    name: &'static str,
    err: f64,
    at: String,
}

impl Worst {
    fn new(name: &'static str) -> Self {
        Worst { name, err: 0.0, at: String::new() }
    }

    fn see(&mut self, err: f64, at: impl FnOnce() -> String) {
        if err > self.err || err.is_nan() {
            self.err = err;
            self.at = at();
        }
    }
}

pub fn run() -> Report {
    if let Err(e) = dd::self_check() {
        return Report::fail(format!("reference arithmetic: {e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut creator = Worst::new("creator");
    let mut validator = Worst::new("validator");
    let mut curator = Worst::new("curator");
    let mut rep = Worst::new("reputation");

    for _ in 0..SAMPLES {
        let p = random_params(&mut rng);
        let (q, u, d) = (rng.random_range(0..=10u8), rng.random_range(0..200_000u64), rng.random_range(0..1_000_000u64));
        let want = Dd::new(p.alpha) * Dd::new(q as f64) * Dd::new(u as f64) * (Dd::new(1.0) + Dd::new(d.max(1) as f64).ln());
        creator.see(rel_err(creator_reward_raw(q, u, d, &p), want), || format!("q={q} u={u} d={d}"));

        let (s, c) = (rng.random_range(0..=10u8), rng.random_range(0..=10u8));
        let e = if rng.random_bool(0.5) { 1 } else { 3 };
        let acc = Dd::new(1.0) - Dd::new(s.abs_diff(c) as f64) / Dd::new(10.0);
        let want = Dd::new(p.beta) * acc * Dd::new(e as f64);
        validator.see(rel_err(validator_reward_raw(ballot_accuracy(s, c), e, &p), want), || format!("s={s} c={c} e={e}"));
        let free: f64 = rng.random_range(0.0..=1.0);
        let want = Dd::new(p.beta) * Dd::new(free) * Dd::new(e as f64);
        validator.see(rel_err(validator_reward_raw(free, e, &p), want), || format!("acc={free} e={e}"));

        let (cq, cu): (f64, u64) = (rng.random_range(0.0..=10.0), rng.random_range(0..1_000_000));
        let want = Dd::new(p.gamma) * Dd::new(cq) * Dd::new(cu as f64);
        curator.see(rel_err(curator_reward_raw(cq, cu, &p), want), || format!("quality={cq} usage={cu}"));

        let xs: [f64; 3] = std::array::from_fn(|_| 10f64.powf(rng.random_range(-6.0..2.0)));
        let want = (Dd::new(xs[0]) * Dd::new(xs[1]) * Dd::new(xs[2])).cbrt();
        let got = reputation(&ReputationInputs { prompt_quality: xs[0], validation_accuracy: xs[1], community_engagement: xs[2] });
        rep.see(rel_err(got, want), || format!("{xs:?}"));
    }

    for w in [&creator, &validator, &curator, &rep] {
        if w.err.is_nan() || w.err > REL_TOL {
            return Report::fail(format!("{} off by {:.2e} at {}", w.name, w.err, w.at));
        }
    }

    let mut exact_zero = 0;
    let mut identity = 0;
    for _ in 0..SAMPLES {
        let x: f64 = 10f64.powf(rng.random_range(-12.0..3.0));
        let y: f64 = rng.random_range(0.0..100.0);
        let zero = if rng.random_bool(0.5) { 0.0 } else { -0.0 };
        for v in [[zero, x, y], [x, zero, y], [x, y, zero]] {
            let r = reputation(&ReputationInputs { prompt_quality: v[0], validation_accuracy: v[1], community_engagement: v[2] });
            if r != 0.0 {
                return Report::fail(format!("reputation{v:?} = {r}, expected 0"));
            }
            exact_zero += 1;
        }
        let r = reputation(&ReputationInputs { prompt_quality: x, validation_accuracy: x, community_engagement: x });
        if r != x {
            return Report::fail(format!("reputation({x}, {x}, {x}) = {r}"));
        }
        identity += 1;
    }

    Report::pass(format!(
        "max rel err creator {:.1e}, validator {:.1e}, curator {:.1e}, reputation {:.1e}; {exact_zero} zero and {identity} identity cases exact",
        creator.err, validator.err, curator.err, rep.err
    ))
}
