//! Every acceptance criterion at its stated tolerance, on the quick grids.
//!
//! Runs without the libtest harness so that each criterion prints one line.

use ntkcorr::commands::suite::{self, Scale, SuiteConfigs};

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let configs = SuiteConfigs::new(Scale::Quick, jobs, 0);
    let started = std::time::Instant::now();
    let results = suite::run(&configs, dir.path(), |c| println!("{}", c.line())).expect("suite runs");
    let failed = results.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    assert_eq!(results.len(), 11);
    if failed > 0 {
        std::process::exit(1);
    }
}
