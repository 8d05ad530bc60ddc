use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let res = jetfactor_cli::run(std::env::args_os());
    let out = res.machine.as_ref().unwrap_or(&res.report);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
    for d in &res.diagnostics {
        eprintln!("{d}");
    }
    ExitCode::from(res.code as u8)
}
