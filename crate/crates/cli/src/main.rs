use clap::Parser;
use rsl_cli::{run, Cli};
use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RSL_LOG", "error")).target(env_logger::Target::Stderr).init();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            if let Some(f) = out.failure {
                eprintln!("{f}");
            }
            out.code
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    };
    ExitCode::from(code as u8)
}
