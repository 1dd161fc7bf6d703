//! Model-file loading: every shipped scenario parses, the named schema
//! errors fire, and wildcard precedence behaves.

use symcoord_cli::format::{load_model, Loaded, NumericMode};
use symcoord_cli::scenario::builtin_scenarios;

use symcoord_core::model::InfoStructure;
use symcoord_core::scalar::{Rat, Scalar};

#[test]
fn every_builtin_scenario_loads_in_rational_mode() {
    for scenario in builtin_scenarios() {
        let loaded = load_model(scenario.text, Some(NumericMode::Rational), None)
            .unwrap_or_else(|e| panic!("{} failed to load: {e}", scenario.name));
        match loaded {
            Loaded::Rational(m) => {
                assert_eq!(m.name.as_deref(), Some(scenario.name));
            }
            Loaded::Float(_) => panic!("{} did not come back rational", scenario.name),
        }
    }
}

#[test]
fn example1_parses_to_the_expected_shape() {
    let text = builtin_scenarios()
        .into_iter()
        .find(|s| s.name == "example1")
        .unwrap()
        .text;
    let Loaded::Rational(m) = load_model(text, None, None).unwrap() else {
        panic!("fraction syntax forces rational mode");
    };
    assert_eq!(m.model.horizon(), 1);
    assert_eq!(m.model.local_space().len(), 1);
    assert_eq!(m.model.action_space().len(), 2);
    assert_eq!(m.structure, InfoStructure::P1c);
    // Cost is the match indicator.
    assert_eq!(m.model.cost(1, 0, 0, 0, 0, 0), &Rat::one());
    assert_eq!(m.model.cost(1, 0, 0, 0, 0, 1), &Rat::zero());
}

#[test]
fn kernel_row_not_summing_to_one_is_rejected() {
    let text = r#"
info_structure = "p1c"
horizon = 2
local_space = ["0", "1"]
action_space = ["0", "1"]
alpha = ["1/2", "1/2"]
cost_default = "0"

[[local_kernel]]
dist = ["3/10", "6/10"]
"#;
    let err = load_model(text, None, None).unwrap_err();
    let message = err.to_string();
    assert!(
        message.contains("kernel row") && message.contains("not 1"),
        "unexpected error: {message}"
    );
}

#[test]
fn aggregate_structure_without_map_is_a_schema_error() {
    let text = r#"
info_structure = "p1d"
horizon = 1
local_space = ["0", "1"]
action_space = ["0", "1"]
alpha = ["1/2", "1/2"]
cost_default = "0"
"#;
    let err = load_model(text, None, None).unwrap_err();
    assert!(err.to_string().contains("aggregate"), "{err}");
}

#[test]
fn fraction_syntax_blocks_a_float_override() {
    let text = builtin_scenarios()
        .into_iter()
        .find(|s| s.name == "example1")
        .unwrap()
        .text;
    let err = load_model(text, Some(NumericMode::Float), None).unwrap_err();
    assert!(err.to_string().contains("forces rational"), "{err}");
}

#[test]
fn declared_flags_are_checked_against_kernels() {
    let text = r#"
info_structure = "p1c"
horizon = 2
local_space = ["0", "1"]
action_space = ["0", "1"]
alpha = ["1/2", "1/2"]
cost_default = "0"
iid_uncontrolled_local = true

[[local_kernel]]
x = "0"
dist = ["1", "0"]

[[local_kernel]]
x = "1"
dist = ["0", "1"]
"#;
    let err = load_model(text, None, None).unwrap_err();
    assert!(err.to_string().contains("iid_uncontrolled_local"), "{err}");
}

#[test]
fn more_specific_rows_override_wildcards_and_later_rows_win_ties() {
    let text = r#"
info_structure = "p1c"
horizon = 1
local_space = ["0", "1"]
action_space = ["0", "1"]
alpha = ["1/2", "1/2"]

[[cost]]
value = "9"

[[cost]]
x1 = "0"
value = "5"

[[cost]]
x1 = "0"
value = "7"
"#;
    let Loaded::Rational(m) = load_model(text, None, None).unwrap() else {
        panic!("rational by default");
    };
    // x1 = 0 entries take the later specific row; the rest the wildcard.
    assert_eq!(m.model.cost(1, 0, 0, 1, 0, 0), &Rat::from_int(7));
    assert_eq!(m.model.cost(1, 0, 1, 0, 1, 1), &Rat::from_int(9));
}

#[test]
fn decimal_strings_parse_exactly_in_rational_mode() {
    let text = r#"
info_structure = "p1c"
horizon = 1
local_space = ["0", "1"]
action_space = ["0", "1"]
alpha = ["0.2", "0.8"]
cost_default = "0"
mode = "rational"
"#;
    let Loaded::Rational(m) = load_model(text, None, None).unwrap() else {
        panic!("declared rational");
    };
    assert_eq!(m.model.alpha().get(0), &Rat::new(1, 5));
    assert_eq!(m.model.alpha().get(1), &Rat::new(4, 5));
}

#[test]
fn float_mode_loads_without_fractions() {
    let text = r#"
info_structure = "p1c"
horizon = 1
local_space = ["0", "1"]
action_space = ["0", "1"]
alpha = [0.25, 0.75]
cost_default = 0
mode = "float"
"#;
    match load_model(text, None, None).unwrap() {
        Loaded::Float(m) => {
            assert_eq!(m.model.alpha().get(0), &0.25);
        }
        Loaded::Rational(_) => panic!("declared float"),
    }
}
