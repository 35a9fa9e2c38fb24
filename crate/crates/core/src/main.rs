fn main() {
    let code = cbessel::cli::main_with(std::env::args().collect());
    std::process::exit(code as i32);
}
