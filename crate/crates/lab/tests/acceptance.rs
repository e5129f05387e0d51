//! Acceptance criteria 1 through 9. Prints every check and one PASS/FAIL line
//! per criterion; exits non-zero if any criterion fails.
//!
//! Positional integer arguments restrict the run, e.g.
//! `cargo test -p lab --test acceptance -- 2 5`.

use std::process::ExitCode;
use std::time::Instant;

use expcli::acceptance::run_criterion;
use expcli::config::AcceptAllConfig;

fn main() -> ExitCode {
    let picked: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u8> = if picked.is_empty() { (1..=9).collect() } else { picked };
    let seed = AcceptAllConfig::default().seed;
    let mut lines = Vec::new();
    for id in ids {
        let t0 = Instant::now();
        let line = match run_criterion(id, seed) {
            Ok(o) => {
                for c in &o.checks {
                    println!(
                        "    {} {}: measured {:e}, {:?} {:e} (tol {:e})",
                        if c.pass { "ok  " } else { "FAIL" },
                        c.name,
                        c.measured,
                        c.relation,
                        c.expected,
                        c.tolerance
                    );
                }
                (o.pass, o.summary())
            }
            Err(e) => (false, format!("FAIL criterion {id}: error: {e}")),
        };
        println!("{} [{:.1}s]", line.1, t0.elapsed().as_secs_f64());
        lines.push(line);
    }
    println!("\nacceptance summary:");
    for (_, l) in &lines {
        println!("{}", l.lines().next().unwrap_or(""));
    }
    if lines.iter().all(|(p, _)| *p) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
