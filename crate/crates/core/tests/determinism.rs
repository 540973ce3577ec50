use hoeg::cli::{ModeKind, Outputs, RunConfig};
use hoeg::output::write_trajectory_csv;
use hoeg::recipes::{run_recipe, FigureRecipe, RecipeName};
use proptest::prelude::*;

fn csv_bytes(log: &hoeg::TrajectoryLog) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, log).unwrap();
    buf
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        prop::sample::select(vec!["forsaken", "modified_forsaken", "x2y"]),
        1u32..=2,
        5usize..60,
        (-1.5f64..1.5, -1.5f64..1.5),
        prop::option::of(0.5f64..12.0),
    )
        .prop_map(|(problem, p, k, (x, y), alpha)| RunConfig {
            problem: problem.to_string(),
            p,
            lp: Some(if p == 1 { 20.0 } else { 500.0 }),
            k,
            z0: Some(vec![x, y]),
            mode: if alpha.is_some() { ModeKind::Competitive } else { ModeKind::Standard },
            alpha,
            outputs: Outputs::default(),
            seed: 0,
            stop_norm: 0.0,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn config_round_trip_reproduces_log(config in arb_config()) {
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &config);
        let (_, a) = config.execute().unwrap();
        let (_, b) = back.execute().unwrap();
        prop_assert_eq!(csv_bytes(&a), csv_bytes(&b));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn recipe_is_independent_of_thread_count() {
    let run_in = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_recipe(&FigureRecipe::get(RecipeName::ForsakenF)).unwrap())
    };
    let (one, four) = (run_in(1), run_in(4));
    for (a, b) in one.panels.iter().zip(&four.panels) {
        assert_eq!(a.z0s, b.z0s);
        for (la, lb) in a.logs.iter().zip(&b.logs) {
            assert_eq!(csv_bytes(la), csv_bytes(lb));
        }
        assert_eq!(a.verdict.passed, b.verdict.passed);
    }
}
