//! Closed-form scalar prox maps against frozen grid-oracle values.

use meal_core::prox::ProxFunction;
use meal_core::Vector;

const TOL: f64 = 1e-6;

fn parse_kind(spec: &str) -> ProxFunction {
    let parts: Vec<&str> = spec.split_whitespace().collect();
    let num = |i: usize| parts[i].parse::<f64>().unwrap();
    match parts[0] {
        "l1" => ProxFunction::l1(num(1)).unwrap(),
        "scad" => ProxFunction::scad(num(1), num(2)).unwrap(),
        "mcp" => ProxFunction::mcp(num(1), num(2)).unwrap(),
        "box" => ProxFunction::box_indicator(vec![num(1)], vec![num(2)]).unwrap(),
        other => panic!("unknown kind {other}"),
    }
}

#[test]
fn closed_forms_match_golden_table() {
    let table = include_str!("fixtures/prox_golden.txt");
    let mut checked = 0;
    for line in table.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('|').map(str::trim).collect();
        let g = parse_kind(cols[0]);
        let gamma: f64 = cols[1].parse().unwrap();
        let v: f64 = cols[2].parse().unwrap();
        let want: f64 = cols[3].parse().unwrap();
        let got = g.prox(gamma, &Vector::from_element(1, v)).unwrap()[0];
        assert!((got - want).abs() <= TOL, "{line}: got {got}");
        checked += 1;
    }
    assert_eq!(checked, 108);
}

#[test]
fn scad_reference_point() {
    let g = ProxFunction::scad(1.0, 3.7).unwrap();
    let p = g.prox(0.5, &Vector::from_element(1, 1.4)).unwrap()[0];
    assert!((p - 0.9).abs() < 1e-12);
}
