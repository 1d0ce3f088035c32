fn main() -> std::process::ExitCode {
    agrobot::cli::run_cli(std::env::args_os())
}
