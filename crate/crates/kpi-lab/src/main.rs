use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kpi_lab::cli::parse_and_dispatch(std::env::args_os()))
}
