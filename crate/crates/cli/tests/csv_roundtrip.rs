use ddtraj::{Signal, Trajectory};
use ddtraj_cli::csvio::{read_trajectory, write_trajectory};
use proptest::prelude::*;

fn trajectory() -> impl Strategy<Value = Trajectory> {
    (1usize..=3, 1usize..=3, 1usize..=30).prop_flat_map(|(m, p, n)| {
        let finite = prop_oneof![
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            -1e3f64..1e3
        ];
        (
            proptest::collection::vec(finite.clone(), m * n),
            proptest::collection::vec(finite, p * n),
        )
            .prop_map(move |(u, y)| {
                Trajectory::new(Signal::new(m, u).unwrap(), Signal::new(p, y).unwrap()).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn write_then_parse_is_identity(t in trajectory()) {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &t).unwrap();
        let back = read_trajectory(buf.as_slice()).unwrap();
        prop_assert_eq!(back, t);
    }
}
