use std::io;
use std::process::ExitCode;
use std::thread;

// Deeply nested inputs recurse deeply in the evaluator and tree printers.
const STACK_SIZE: usize = 256 * 1024 * 1024;

fn main() -> ExitCode {
    let worker = thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(|| {
            let stdin = io::stdin();
            let stdout = io::stdout();
            let stderr = io::stderr();
            cpeg_cli::run(std::env::args_os(), &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
        })
        .expect("spawn main thread");
    let code = worker.join().unwrap_or(101);
    ExitCode::from(code as u8)
}
