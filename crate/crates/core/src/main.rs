fn main() -> std::process::ExitCode {
    btdetect::cli::run(std::env::args_os())
}
