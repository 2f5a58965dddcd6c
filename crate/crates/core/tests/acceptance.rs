use dgff::harness::suite::run_suite;
use std::process::ExitCode;

fn main() -> ExitCode {
    let results = run_suite(20261016, &[]);
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if results.len() == 16 && passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
