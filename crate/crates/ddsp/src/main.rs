fn main() {
    std::process::exit(ddsp::run_cli());
}
