fn main() {
    let code = hopscatter_cli::run(std::env::args_os());
    std::process::exit(code);
}
