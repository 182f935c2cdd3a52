use std::io::Write;

fn main() {
    let out = cclab::harness::run_command(std::env::args_os());
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.stdout.as_bytes());
    if out.code != 0 {
        for m in out.report.messages.iter().chain(&out.report.inconclusive) {
            eprintln!("cclab: {m}");
        }
    }
    std::process::exit(out.code);
}
