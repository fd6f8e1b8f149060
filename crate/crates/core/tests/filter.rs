use proptest::prelude::*;
use stopgame::game::*;

/// Bayes by explicit enumeration of `(s, a2, s')` paths.
fn brute_force(b1: f64, a1: Action, o: usize, q: AttackerStop, l: usize, cfg: &GameConfig) -> Option<f64> {
    let mut joint = [0.0f64; 2];
    for (s, ps) in [(State::NoIntrusion, 1.0 - b1), (State::Intrusion, b1)] {
        for (a2, pa2) in [(Action::Stop, q.get(s)), (Action::Continue, 1.0 - q.get(s))] {
            for s2 in State::LIVE {
                let pt = transition_prob(s2, s, l, ActionPair::new(a1, a2), cfg).unwrap();
                joint[s2.index()] += ps * pa2 * pt * cfg.obs.prob(s2, o);
            }
        }
    }
    let z = joint[0] + joint[1];
    (z > 0.0).then(|| joint[1] / z)
}

fn three_symbol_cfg(l: usize) -> GameConfig {
    let obs = ObservationModel::new(vec![0.6, 0.3, 0.1], vec![0.1, 0.3, 0.6]).unwrap();
    GameConfig::reference(l, obs)
}

#[test]
fn matches_enumeration_on_grid() {
    let start = std::time::Instant::now();
    let cfg = three_symbol_cfg(3);
    let corners = [
        AttackerStop::new(0.0, 0.0),
        AttackerStop::new(0.0, 1.0),
        AttackerStop::new(1.0, 0.0),
        AttackerStop::new(1.0, 1.0),
    ];
    let mut checked = 0;
    for i in 0..=100 {
        let b1 = i as f64 / 100.0;
        for o in 0..3 {
            for q in corners {
                for l in 1..=3 {
                    for a1 in Action::BOTH {
                        let got = belief_update(Belief::new(b1).unwrap(), a1, o, q, l, &cfg);
                        match brute_force(b1, a1, o, q, l, &cfg) {
                            Some(want) => {
                                let got = got.unwrap().b1();
                                assert!((got - want).abs() < 1e-9, "b={b1} o={o} {q:?} l={l} {a1:?}");
                                checked += 1;
                            }
                            None => assert!(matches!(got, Err(stopgame::Error::FilterDegenerate))),
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 2000);
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn reset_uses_likelihood_ratio() {
    let cfg = three_symbol_cfg(2);
    // Defender's final stop leaves no live mass.
    let mass = predicted_mass(0.4, Action::Stop, AttackerStop::new(0.0, 0.0), 1, &cfg);
    assert_eq!(mass, [0.0, 0.0]);
    let b = filter_or_reset(mass, 2, &cfg.obs, 0.4);
    assert!((b - 0.6 / 0.7).abs() < 1e-15);
}

#[test]
fn rejects_bad_inputs() {
    let cfg = three_symbol_cfg(2);
    let q = AttackerStop::new(0.5, 0.5);
    assert!(Belief::new(1.5).is_err());
    assert!(Belief::new(f64::NAN).is_err());
    assert!(matches!(
        belief_update(Belief::INITIAL, Action::Continue, 3, q, 1, &cfg),
        Err(stopgame::Error::ObservationOutOfRange { .. })
    ));
    assert!(matches!(
        belief_update(Belief::INITIAL, Action::Continue, 0, q, 3, &cfg),
        Err(stopgame::Error::StopsOutOfRange { .. })
    ));
}

proptest! {
    #[test]
    fn posterior_is_a_probability(b1 in 0.0f64..=1.0, qi in 0.0f64..=1.0, qs in 0.0f64..=1.0, o in 0usize..3, l in 1usize..=3, stop in any::<bool>()) {
        let cfg = three_symbol_cfg(3);
        let a1 = Action::from_stop(stop);
        if let Ok(b) = belief_update(Belief::new(b1).unwrap(), a1, o, AttackerStop::new(qi, qs), l, &cfg) {
            prop_assert!((0.0..=1.0).contains(&b.b1()));
        }
    }

    #[test]
    fn higher_alerts_raise_the_posterior(b1 in 0.01f64..0.99, qi in 0.0f64..=1.0, qs in 0.0f64..0.99) {
        // Monotone likelihood ratio: posterior nondecreasing in o.
        let cfg = three_symbol_cfg(3);
        let q = AttackerStop::new(qi, qs);
        let post: Vec<f64> = (0..3)
            .map(|o| belief_update(Belief::new(b1).unwrap(), Action::Continue, o, q, 3, &cfg).unwrap().b1())
            .collect();
        prop_assert!(post[0] <= post[1] + 1e-12 && post[1] <= post[2] + 1e-12);
    }
}
