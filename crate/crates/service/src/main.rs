use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let status = indoorloc_service::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(u8::try_from(status).unwrap_or(1))
}
