use proptest::prelude::*;

use sidmrs::harness::{run_sweep, DropCounts, Link, LinkConfig, ReceiverKind};
use sidmrs::scenario::{CodeRate, DmrsScheme, ScenarioConfig};

fn link(cfg: ScenarioConfig) -> Link {
    Link::new(LinkConfig::new(cfg).unwrap()).unwrap()
}

#[test]
fn coded_ber_falls_with_snr() {
    let l = link(ScenarioConfig::default());
    let snrs: Vec<f64> = (-4..=4).map(|s| f64::from(s) * 0.75).collect();
    let r = run_sweep(&l, ReceiverKind::OneShot, &snrs, 200).unwrap();
    let ber: Vec<f64> = r.points.iter().map(|p| p.coded_ber).collect();
    let smoothed: Vec<f64> = ber.windows(3).map(|w| w.iter().sum::<f64>() / 3.0).collect();
    for w in smoothed.windows(2) {
        assert!(w[1] <= w[0], "{ber:?}");
    }
    assert!(ber[0] > 1e-2 && *ber.last().unwrap() < 1e-3, "{ber:?}");
}

#[test]
fn multi_user_sixteen_qam_links_decode_at_high_snr() {
    let cfg = ScenarioConfig {
        constellation_order: 16,
        code_rate: CodeRate::HALF,
        ..ScenarioConfig::uniform(2, 1, 4)
    };
    for (scheme, receiver) in [
        (DmrsScheme::Superimposed, ReceiverKind::Iterative),
        (DmrsScheme::Superimposed, ReceiverKind::OneShot),
        (DmrsScheme::Orthogonal, ReceiverKind::OneShot),
    ] {
        let l = link(ScenarioConfig {
            dmrs_scheme: scheme,
            ..cfg.clone()
        });
        let r = run_sweep(&l, receiver, &[25.0], 10).unwrap();
        assert!(r.points[0].bler <= 0.1, "{scheme} {receiver}: {:?}", r.points[0]);
    }
}

#[test]
fn two_layer_single_user_runs_every_receiver() {
    let cfg = ScenarioConfig::uniform(1, 2, 4);
    let si = link(cfg.clone());
    assert_eq!(si.config().power_ratio, 0.22);
    for receiver in [ReceiverKind::OneShot, ReceiverKind::Iterative, ReceiverKind::GenieLmmse] {
        let r = run_sweep(&si, receiver, &[20.0], 4).unwrap();
        assert_eq!(r.points[0].bler, 0.0, "{receiver}");
    }
    let orth = link(ScenarioConfig {
        dmrs_scheme: DmrsScheme::Orthogonal,
        ..cfg
    });
    let r = run_sweep(&orth, ReceiverKind::OneShot, &[20.0], 4).unwrap();
    assert_eq!(r.points[0].bler, 0.0);
    assert_eq!(r.points[0].n_d, 72 * 12);
    assert_eq!(r.points[0].throughput, 864.0 * 2.0 * 2.0);
}

#[test]
fn iterative_matches_one_shot_on_first_iteration() {
    let l = link(ScenarioConfig::default());
    let tx = l.transmit(11).unwrap();
    let one = l.receive(&tx, 1.0, ReceiverKind::OneShot).unwrap();
    let it = l.receive(&tx, 1.0, ReceiverKind::Iterative).unwrap();
    assert_eq!(it.iteration_info_errors[0], one.info_errors);
}

fn counts() -> impl Strategy<Value = DropCounts> {
    (
        0u64..100,
        0u64..100,
        0u64..100,
        proptest::collection::vec(0u64..50, 0..4),
    )
        .prop_map(|(a, b, c, it)| DropCounts {
            uncoded_errors: a,
            uncoded_bits: a + b,
            info_errors: c,
            info_bits: c + b,
            block_errors: u64::from(c > 0),
            blocks: 1,
            iteration_info_errors: it,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_merging_is_order_independent(xs in proptest::collection::vec(counts(), 1..8)) {
        let mut forward = DropCounts::default();
        for x in &xs {
            forward.merge(x);
        }
        let mut backward = DropCounts::default();
        for x in xs.iter().rev() {
            backward.merge(x);
        }
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn scenario_text_round_trips(users in 1usize..4, layers in 1usize..3, rx in 1usize..9,
                                 order_idx in 0usize..3, seed in any::<u64>(), orth in any::<bool>()) {
        prop_assume!(users * layers <= rx);
        let cfg = ScenarioConfig {
            constellation_order: [4, 16, 64][order_idx],
            code_rate: ScenarioConfig::default_rate_for([4, 16, 64][order_idx]),
            master_seed: seed,
            dmrs_scheme: if orth { DmrsScheme::Orthogonal } else { DmrsScheme::Superimposed },
            ..ScenarioConfig::uniform(users, layers, rx)
        };
        prop_assert_eq!(ScenarioConfig::from_config_text(&cfg.to_config_text()).unwrap(), cfg);
    }
}
