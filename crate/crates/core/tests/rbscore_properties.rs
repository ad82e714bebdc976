mod support;

#[test]
fn scores_are_exact_and_symmetric() {
    eprintln!("{}", support::rbscore_exactness(10_000).unwrap());
}
