//! One PASS/FAIL line per acceptance criterion.
//!
//! Criterion 3 includes an entry-by-entry comparison with the printed
//! factor `g` for φ. Row (2,1) of that display cannot satisfy
//! `A = g·S·G` with `G = Id`, so the comparison fails and the criterion is
//! reported as FAIL. Every other criterion must pass.

use jetfactor_cli::checks::{self, Budget};

const ORDER: usize = 4;
const SEED: u64 = 0;

/// Criteria whose literal wording cannot be met, with the failing check.
const UNATTAINABLE: [(usize, &str); 1] = [(3, "phi g as displayed")];

fn main() {
    let criteria = checks::all(ORDER, SEED, &Budget::full(), true);
    let mut unexpected = Vec::new();
    for c in &criteria {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict}: {}", c.id, c.title);
        for f in c.failures() {
            println!("    {}: {}", f.name, f.detail);
            if !UNATTAINABLE.contains(&(c.id, f.name.as_str())) {
                unexpected.push(format!("criterion {}: {}: {}", c.id, f.name, f.detail));
            }
        }
    }
    assert_eq!(criteria.len(), 9);
    if !unexpected.is_empty() {
        eprintln!("unexpected failures:\n{}", unexpected.join("\n"));
        std::process::exit(1);
    }
}
