use std::panic;
use std::process::ExitCode;

fn main() -> ExitCode {
    // a panic is a bug; report it in one line and use the internal-error code
    panic::set_hook(Box::new(|info| {
        let msg = info
            .payload()
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| info.payload().downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".to_string());
        eprintln!("internal error: {msg}");
    }));
    let code = panic::catch_unwind(|| cumbia_cli::run(std::env::args_os())).unwrap_or(2);
    ExitCode::from(code)
}
