mod common;

use common::*;

macro_rules! property_tests {
    ($($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = common::$name() {
                    panic!("{e}");
                }
            }
        )*
    };
}

property_tests!(
    partition_validity,
    child_layout,
    bmin_recursion,
    bmin_monotone_coupling,
    bound_monotone_in_t,
    bonus_decreasing_in_s,
    ucbv_zero_variance,
    variance_oracle,
    stats_conservation,
    ancestor_counting,
    engine_round_invariants,
    budget_discipline,
    cost_cap,
    geometric_delay_mean,
    grid_law,
    csv_round_trip,
);

#[test]
fn suite_lists_every_property() {
    assert_eq!(SUITE.len(), 16);
}
