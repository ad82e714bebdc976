mod support;

#[test]
fn protocols_keep_groups_disjoint_and_sizes_exact() {
    eprintln!("{}", support::split_invariants(100).unwrap());
}
