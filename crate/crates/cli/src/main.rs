fn main() {
    std::process::exit(sqlgrade::run(std::env::args_os()));
}
